"""Kinetic velocity averages, the semiclassical density limit, and a
desk-scale Hartree fixed point.

The Hartree block works with the operator formulation

    i d/dt gamma = [phi(D) + w * rho_gamma, gamma],
    gamma(t) = e^{-i t phi(D)} gamma0 e^{i t phi(D)}  for w = 0,

iterating the Duhamel map

    L1(gamma, rho)(t) = e^{-it phi(D)} gamma0 e^{it phi(D)}
        - i int_0^t e^{-i(t-s) phi(D)} [w * rho(s), gamma(s)] e^{i(t-s) phi(D)} ds

on trajectories sampled at trapezoid nodes.  (This is the conjugation
sign under which the free flow of |u><u| matches i u' = phi(D) u.)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import legendre as npleg

from .dispersion import DispersionRelation
from .norms import MixedNormSpec, OperatorMatrix, mixed_norm, schatten_norm, \
    trapezoid_weights
from .spectral import Field, Grid, SpacetimeField

__all__ = [
    "PhaseSpaceFunction",
    "velocity_average",
    "semiclassical_limit",
    "semiclassical_density",
    "HartreeState",
    "Trajectory",
    "hartree_duhamel",
    "hartree_fixed_point",
    "inhomogeneous_bound_check",
    "FixedPointReport",
]


@dataclass(frozen=True)
class PhaseSpaceFunction:
    """Sampler f(x, xi) with finite declared support boxes.

    ft_x, when provided, is the analytic partial Fourier transform
    int f(x, xi) e^{-i x eta} dx evaluated as ft_x(eta, xi); otherwise
    it is computed by Gauss-Legendre quadrature over the x box.
    """

    sampler: Callable
    x_box: tuple
    xi_box: tuple
    ft_x: Optional[Callable] = None

    def __post_init__(self):
        for name, (a, b) in (("x_box", self.x_box), ("xi_box", self.xi_box)):
            if not (np.isfinite(a) and np.isfinite(b) and a < b):
                raise ValueError(f"{name} must be a finite nonempty interval")

    def partial_ft(self, eta, xi, nodes=160):
        if self.ft_x is not None:
            return self.ft_x(eta, xi)
        a, b = self.x_box
        g, w = npleg.leggauss(nodes)
        x = 0.5 * (b - a) * g + 0.5 * (a + b)
        wq = 0.5 * (b - a) * w
        vals = self.sampler(x[:, None], np.broadcast_to(xi, (1,))[None, :])
        phase = np.exp(-1j * np.outer(x, np.atleast_1d(eta)))
        return (wq[:, None] * vals * phase).sum(axis=0)


def _psi_weight(psi, xi, s):
    xi = np.abs(np.asarray(xi, dtype=float))
    if s == 0:
        return np.ones_like(xi)
    if psi == "homogeneous":
        return xi ** (-2.0 * s)
    if psi == "inhomogeneous":
        return (1.0 + xi * xi) ** (-s)
    raise ValueError(f"unknown weight kind {psi!r}")


def velocity_average(f: PhaseSpaceFunction, phi: DispersionRelation, s, psi,
                     t, x, nodes=240, shells=24):
    """int f(x - t grad phi(xi), xi) Psi(xi)^{-2s} dxi over the xi box
    (d = 1 transport; grad phi(xi) = phi0'(|xi|) sign(xi)).

    For s > 0 with the homogeneous weight the |xi|^{-2s} singularity at 0
    is handled by dyadic shells with per-shell Gauss rules.
    """
    a, b = f.xi_box
    g, w = npleg.leggauss(nodes)

    def block(lo, hi, n_override=None):
        if hi <= lo:
            return 0.0
        gg, ww = (g, w) if n_override is None else npleg.leggauss(n_override)
        xi = 0.5 * (hi - lo) * gg + 0.5 * (hi + lo)
        wq = 0.5 * (hi - lo) * ww
        speed = np.sign(xi) * phi.dphi0(np.abs(xi))
        vals = f.sampler(np.asarray(x) - t * speed, xi)
        return float(np.sum(wq * vals * _psi_weight(psi, xi, s)))

    singular = (s > 0 and psi == "homogeneous"
                and a < 0 < b)
    if not singular:
        return block(a, b)
    total = 0.0
    for sign, edge in ((-1.0, abs(a)), (1.0, abs(b))):
        if edge == 0:
            continue
        hi = edge
        for j in range(shells):
            lo = hi / 2.0
            if j == shells - 1:
                lo = 0.0
            seg = (min(sign * lo, sign * hi), max(sign * lo, sign * hi))
            total += block(seg[0], seg[1], n_override=64)
            hi = lo
            if hi == 0.0:
                break
    return total


def semiclassical_limit(f: PhaseSpaceFunction, phi: DispersionRelation, s,
                        psi, t, x, nodes=240):
    """The h -> 0 limit of the rescaled quantized density,

        int f(x - (t/2) grad phi(u), u) Psi(u)^{-2s} du
            = velocity_average(f, phi, s, Psi, t/2, x)

    (equivalently, after u -> -u with phi even, the reflected form
    int f(x - (t/2) grad phi(-xi'), -xi') Psi^{-2s} dxi').
    """
    return velocity_average(f, phi, s, psi, 0.5 * t, x, nodes=nodes)


def semiclassical_density(f: PhaseSpaceFunction, phi: DispersionRelation, s,
                          psi, h, t, x, nodes_xi=200, nodes_eta=200,
                          eta_max=None):
    """The rescaled quantized density at finite h (d = 1),

    rho[Psi(D)^-s gamma_h(t/h) Psi(D)^-s](x/h)
      = int int e^{-i (t/2h)(phi(h eta - xi') - phi(xi'))}
            Psi(h eta - xi')^-s Psi(xi')^-s F_x[f(., (h eta - 2 xi')/2)](eta)
            e^{i x eta} d eta d xi'.
    """
    h = float(h)
    if not (0 < h <= 1):
        raise ValueError("h must lie in (0, 1]")
    a, b = f.xi_box
    g1, w1 = npleg.leggauss(nodes_xi)
    # xi' integration effectively ranges over -xi_box (velocity = -xi')
    lo, hi = -b, -a
    xip = 0.5 * (hi - lo) * g1 + 0.5 * (hi + lo)
    wq1 = 0.5 * (hi - lo) * w1
    if eta_max is None:
        eta_max = 10.0
    g2, w2 = npleg.leggauss(nodes_eta)
    eta = eta_max * g2
    wq2 = eta_max * w2

    def phi_of(v):
        return phi.phi0(np.abs(v))

    total = 0.0 + 0.0j
    for k, xv in enumerate(xip):
        arg = h * eta - xv
        phase = -(t / (2.0 * h)) * (phi_of(arg) - phi_of(xv)) + np.asarray(x) * eta
        wgt = (_psi_weight(psi, arg, s / 2.0)
               * _psi_weight(psi, xv, s / 2.0)) if s else 1.0
        vel = (h * eta - 2.0 * xv) / 2.0
        vals = _partial_ft_vec(f, eta, vel)
        total += wq1[k] * np.sum(wq2 * vals * np.exp(1j * phase) * wgt)
    return complex(total) / (2.0 * np.pi)


def _partial_ft_vec(f: PhaseSpaceFunction, eta, vel):
    """F_x[f(., v)](eta) for paired arrays eta, vel."""
    if f.ft_x is not None:
        return f.ft_x(np.asarray(eta), np.asarray(vel))
    a, b = f.x_box
    g, w = npleg.leggauss(160)
    x = 0.5 * (b - a) * g + 0.5 * (a + b)
    wq = 0.5 * (b - a) * w
    vals = f.sampler(x[:, None], np.asarray(vel)[None, :])
    phase = np.exp(-1j * x[:, None] * np.asarray(eta)[None, :])
    return (wq[:, None] * vals * phase).sum(axis=0)


# ---------------------------------------------------------------------------
# Hartree
# ---------------------------------------------------------------------------

@dataclass
class HartreeState:
    """Problem data for the Duhamel fixed point on [0, T]."""

    grid: Grid
    phi: DispersionRelation
    gamma0: OperatorMatrix
    w: Field                      # interaction potential
    T: float
    beta: float
    s: float = 0.0
    q: float = np.inf
    r: float = 2.0
    psi: str = "inhomogeneous"
    nodes: int = 17

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("T must be positive")
        if not self.gamma0.is_self_adjoint(1e-10):
            raise ValueError("gamma0 must be self-adjoint")
        if np.abs(self.w.values.imag).max() > 1e-12 * max(
                np.abs(self.w.values).max(), 1e-300):
            raise ValueError("w must be real")
        if self.nodes < 16:
            raise ValueError("need at least 16 Duhamel nodes")

    @property
    def times(self):
        return np.linspace(0.0, self.T, self.nodes)


@dataclass
class Trajectory:
    times: np.ndarray
    gammas: Sequence[OperatorMatrix]
    rhos: np.ndarray              # (nt, *grid.shape) real densities

    def density_field(self, grid) -> SpacetimeField:
        return SpacetimeField(grid, self.times, self.rhos.astype(complex))


class _Propagators:
    """Dense Fourier calculus on the grid: propagator conjugation and
    frequency weights as matrices (desk-scale grids only)."""

    def __init__(self, grid: Grid, phi: DispersionRelation):
        self.grid = grid
        rho = grid.frequency_norm().ravel()
        with np.errstate(divide="ignore", invalid="ignore"):
            sym = np.asarray(phi.phi0(np.where(rho > 0, rho, 1.0)), dtype=float)
            v0 = float(np.asarray(phi.phi0(np.array([0.0])))[0])
        sym = np.where(rho > 0, sym, v0 if np.isfinite(v0) else 0.0)
        n = grid.n ** grid.d
        F = np.fft.fft(np.eye(grid.n), axis=0)
        if grid.d == 1:
            self._fwd = F
        elif grid.d == 2:
            self._fwd = np.kron(F, F)
        else:
            raise ValueError("dense propagators implemented for d <= 2")
        self._inv = self._fwd.conj().T / n
        self.symbol = sym
        self._cache = {}

    def fourier_weight(self, sym_values) -> np.ndarray:
        """The multiplier sym(D) as a dense matrix."""
        return (self._inv * np.asarray(sym_values).ravel()[None, :]) @ self._fwd

    def conjugate(self, gamma: np.ndarray, t) -> np.ndarray:
        """e^{-i t phi(D)} gamma e^{i t phi(D)}."""
        key = round(float(t), 12)
        if key not in self._cache:
            ph = np.exp(-1j * float(t) * self.symbol)
            U = (self._inv * ph[None, :]) @ self._fwd
            self._cache[key] = U
        U = self._cache[key]
        return U @ gamma @ U.conj().T


def _mult_operator(values: np.ndarray, grid: Grid) -> np.ndarray:
    return np.diag(values.ravel())


def _convolve_periodic(w: Field, rho_values: np.ndarray) -> np.ndarray:
    """(w * rho) on the periodic grid, continuum normalization."""
    grid = w.grid
    wf = np.fft.fftn(w.values)
    rf = np.fft.fftn(rho_values.reshape(grid.shape))
    return np.real(np.fft.ifftn(wf * rf)) * grid.cell_volume


def _psi_weight_matrix(state: HartreeState, props: "_Propagators"):
    """Psi(D)^s as a dense matrix (None for s = 0)."""
    if state.s == 0:
        return None
    rho = state.grid.frequency_norm().ravel()
    if state.psi == "inhomogeneous":
        sym = (1.0 + rho * rho) ** (state.s / 2.0)
    else:
        sym = np.where(rho > 0, rho, 1.0) ** state.s
    return props.fourier_weight(sym)


def _xt_norm(state: HartreeState, gammas, rhos, props) -> float:
    """sup_t ||Psi^s gamma Psi^s||_{C^beta} + ||rho||_{L^{q/2} L^{r/2}}."""
    grid = state.grid
    sval = 0.0
    weight = _psi_weight_matrix(state, props)
    for g in gammas:
        m = g.matrix if isinstance(g, OperatorMatrix) else g
        wm = m if weight is None else weight @ m @ weight
        sval = max(sval, schatten_norm(OperatorMatrix(wm), state.beta))
    u = SpacetimeField(grid, np.asarray(state.times, dtype=float),
                       np.asarray(rhos).astype(complex))
    rho_norm = mixed_norm(u, MixedNormSpec(
        state.q / 2.0 if not np.isinf(state.q) else np.inf, state.r / 2.0))
    return sval + rho_norm


def hartree_duhamel(state: HartreeState, gamma_in: Sequence[OperatorMatrix],
                    rho_in: np.ndarray):
    """One application of the Duhamel map Lambda on a sampled trajectory.

    Returns (gammas, rhos): the new trajectory and its density, with the
    commutator integral evaluated by composite trapezoid over the node
    prefix [0, t_k].
    """
    grid = state.grid
    props = _Propagators(grid, state.phi)
    times = state.times
    nt = times.size
    if len(gamma_in) != nt or len(rho_in) != nt:
        raise ValueError("trajectory must be sampled on the state's nodes")
    g0 = state.gamma0.matrix
    # commutator integrand at each node, in the interaction picture:
    # B(s) = e^{i s phi(D)} [w * rho(s), gamma(s)] e^{-i s phi(D)}
    Bs = []
    for k in range(nt):
        v = _convolve_periodic(state.w, np.real(rho_in[k]))
        Vg = v.ravel()[:, None] * gamma_in[k].matrix
        gV = gamma_in[k].matrix * v.ravel()[None, :]
        comm = Vg - gV
        Bs.append(props.conjugate(comm, -times[k]))
    gammas, rhos = [], []
    for k in range(nt):
        t = times[k]
        if k == 0:
            integral = np.zeros_like(g0)
        else:
            sub = times[:k + 1]
            wts = trapezoid_weights(sub)
            integral = sum(wts[i] * Bs[i] for i in range(k + 1))
        interior = g0 - 1j * integral
        gk = props.conjugate(interior, t)
        gk = 0.5 * (gk + gk.conj().T)   # kill roundoff asymmetry only
        gammas.append(OperatorMatrix(gk))
        rhos.append(np.real(np.diagonal(gk)) / grid.cell_volume)
    return gammas, np.asarray(rhos)


@dataclass
class FixedPointReport:
    converged: bool
    iterations: int
    residual: float
    contraction_factors: np.ndarray
    trajectory: Optional[Trajectory]
    diverged: bool = False

    @property
    def contraction_factor(self):
        """First measured ratio ||L(u1)-L(u0)|| / ||u1-u0||; this is the
        statistic that scales linearly with the potential size."""
        good = self.contraction_factors[np.isfinite(self.contraction_factors)]
        return float(good[0]) if good.size else np.nan


def _free_trajectory(state: HartreeState):
    props = _Propagators(state.grid, state.phi)
    gammas, rhos = [], []
    for t in state.times:
        gk = props.conjugate(state.gamma0.matrix, t)
        gammas.append(OperatorMatrix(gk))
        rhos.append(np.real(np.diagonal(gk)) / state.grid.cell_volume)
    return gammas, np.asarray(rhos)


def _traj_diff_norm(state, ga, ra, gb, rb, props):
    gd = [OperatorMatrix(a.matrix - b.matrix) for a, b in zip(ga, gb)]
    return _xt_norm(state, gd, np.asarray(ra) - np.asarray(rb), props)


def hartree_fixed_point(state: HartreeState, tol=1e-10, max_iter=50)\
        -> FixedPointReport:
    """Iterate the Duhamel map from the free solution.

    Reports per-iteration contraction ratios
    ||L(u_k) - L(u_{k-1})|| / ||u_k - u_{k-1}|| in the trajectory norm
    (sup-in-t Schatten-beta plus the mixed density norm), the fixed point
    when the residual drops below tol, and divergence when the ratio
    stays >= 1 for three consecutive iterations.
    """
    props = _Propagators(state.grid, state.phi)
    g_prev, r_prev = _free_trajectory(state)
    g_cur, r_cur = hartree_duhamel(state, g_prev, r_prev)
    factors = []
    residual = _traj_diff_norm(state, g_cur, r_cur, g_prev, r_prev, props)
    if residual <= tol:
        traj = Trajectory(np.asarray(state.times), g_cur, r_cur)
        return FixedPointReport(True, 1, residual, np.asarray(factors), traj)
    bad_run = 0
    for it in range(2, max_iter + 1):
        g_next, r_next = hartree_duhamel(state, g_cur, r_cur)
        num = _traj_diff_norm(state, g_next, r_next, g_cur, r_cur, props)
        den = residual
        factor = num / den if den > 0 else 0.0
        factors.append(factor)
        residual = num
        g_prev, r_prev = g_cur, r_cur
        g_cur, r_cur = g_next, r_next
        if residual <= tol:
            traj = Trajectory(np.asarray(state.times), g_cur, r_cur)
            return FixedPointReport(True, it, residual, np.asarray(factors), traj)
        bad_run = bad_run + 1 if factor >= 1.0 else 0
        if bad_run >= 3:
            return FixedPointReport(False, it, residual, np.asarray(factors),
                                    None, diverged=True)
    return FixedPointReport(False, max_iter, residual, np.asarray(factors),
                            Trajectory(np.asarray(state.times), g_cur, r_cur))


def inhomogeneous_bound_check(state: HartreeState,
                              R_traj: Sequence[OperatorMatrix], q, r):
    """Both sides of the inhomogeneous density estimate.

    LHS: || rho[gamma_R(t)] ||_{L^{q/2} L^{r/2}} with
    gamma_R(t) = int_0^t e^{-i(t-s) phi(D)} R(s) e^{i(t-s) phi(D)} ds;
    RHS: || int e^{i s phi(D)} |R(s)| e^{-i s phi(D)} ds ||_{C^beta}.
    Returns (lhs, rhs, ratio) with ratio defined as 0 for R = 0.
    """
    grid = state.grid
    props = _Propagators(grid, state.phi)
    times = state.times
    nt = times.size
    if len(R_traj) != nt:
        raise ValueError("R trajectory must be sampled on the state's nodes")
    for Rk in R_traj:
        if not Rk.is_self_adjoint(1e-8):
            raise ValueError("R(t) must be self-adjoint at every node")
    Bs = [props.conjugate(R_traj[k].matrix, -times[k]) for k in range(nt)]
    rhos = []
    for k in range(nt):
        if k == 0:
            integral = np.zeros_like(Bs[0])
        else:
            wts = trapezoid_weights(times[:k + 1])
            integral = sum(wts[i] * Bs[i] for i in range(k + 1))
        gk = props.conjugate(integral, times[k])
        rhos.append(np.real(np.diagonal(gk)) / grid.cell_volume)
    u = SpacetimeField(grid, times, np.asarray(rhos).astype(complex))
    lhs = mixed_norm(u, MixedNormSpec(q / 2.0, r / 2.0))
    acc = np.zeros_like(Bs[0])
    wts = trapezoid_weights(times)
    for k in range(nt):
        m = R_traj[k].matrix
        vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
        absR = (vecs * np.abs(vals)[None, :]) @ vecs.conj().T
        acc = acc + wts[k] * props.conjugate(absR, -times[k])
    rhs = schatten_norm(OperatorMatrix(acc), state.beta)
    ratio = 0.0 if rhs == 0 else lhs / rhs
    return lhs, rhs, ratio
