"""Mixed space-time, Lorentz, Besov and Schatten norms; operator densities.

Lorentz norms are evaluated exactly on step functions: grid data with
positive weights define a decreasing rearrangement that is piecewise
constant, and each step integrates in closed form,

    int (t^{1/p} f*(t))^r dt/t  =  sum_k h_k^r (p/r)(W_k^{r/p} - W_{k-1}^{r/p}).

Operator matrices follow the convention M = kernel * cellvol, i.e. the
matrix acts on sample vectors of the discretized L^2; then the operator
trace is the matrix trace, Schatten norms are plain singular-value
norms, and the density is diag(M) / cellvol.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .spectral import Field, Grid, SpacetimeField, littlewood_paley, lp_low, \
    lp_resolvable_range

__all__ = [
    "MixedNormSpec",
    "OperatorMatrix",
    "lorentz_norm",
    "lorentz_sequence_norm",
    "mixed_norm",
    "besov_norm",
    "schatten_norm",
    "density",
    "projector",
    "trapezoid_weights",
    "hls_pairing",
]


def trapezoid_weights(times):
    times = np.asarray(times, dtype=float)
    if times.size == 1:
        return np.ones(1)
    w = np.empty_like(times)
    w[1:-1] = 0.5 * (times[2:] - times[:-2])
    w[0] = 0.5 * (times[1] - times[0])
    w[-1] = 0.5 * (times[-1] - times[-2])
    return w


def lorentz_norm(values, weights, p, r):
    """L^{p,r} quasi-norm of the step function with |values| on cells of
    measure `weights`; exact per-step integration, r = inf gives the
    weak-type sup."""
    p = float(p)
    if not (1.0 < p < np.inf):
        raise ValueError("p must lie in (1, inf)")
    v = np.abs(np.asarray(values, dtype=float)).ravel()
    w = np.asarray(weights, dtype=float)
    w = np.broadcast_to(w, v.shape).ravel() if w.ndim == 0 else w.ravel()
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    order = np.argsort(v)[::-1]
    v = v[order]
    w = w[order]
    keep = v > 0
    v, w = v[keep], w[keep]
    if v.size == 0:
        return 0.0
    cum = np.cumsum(w)
    prev = np.concatenate([[0.0], cum[:-1]])
    if np.isinf(r):
        return float(np.max(cum ** (1.0 / p) * v))
    r = float(r)
    steps = (p / r) * (cum ** (r / p) - prev ** (r / p))
    return float(np.sum(v ** r * steps) ** (1.0 / r))


def lorentz_norm_averaged(values, weights, p, r, resolution=4096):
    """The equivalent true norm with f* replaced by its running average
    f**(t) = t^-1 int_0^t f*; numerical quadrature, for duality tests."""
    p, r = float(p), float(r)
    v = np.abs(np.asarray(values, dtype=float)).ravel()
    w = np.broadcast_to(np.asarray(weights, dtype=float), v.shape).ravel()
    order = np.argsort(v)[::-1]
    v, w = v[order], w[order]
    cum = np.cumsum(w)
    total = cum[-1]
    ts = np.linspace(total / resolution, total, resolution)
    # running integral of the step rearrangement
    int_steps = np.concatenate([[0.0], np.cumsum(v * w)])
    idx = np.searchsorted(cum, ts, side="left")
    prev = np.concatenate([[0.0], cum])[idx]
    favg = (int_steps[idx] + v[np.minimum(idx, v.size - 1)] * (ts - prev)) / ts
    integrand = (ts ** (1.0 / p) * favg) ** r / ts
    dt = total / resolution
    if np.isinf(r):
        return float(np.max(ts ** (1.0 / p) * favg))
    return float((np.sum(integrand) * dt) ** (1.0 / r))


def lorentz_sequence_norm(nu, p, r):
    """l^{p,r} norm of a sequence (counting measure)."""
    return lorentz_norm(nu, np.ones(np.asarray(nu).size), p, r)


@dataclass(frozen=True)
class MixedNormSpec:
    """L^{q(,p)}_t L^r_x exponents."""

    q: float
    r: float
    time_lorentz: Optional[float] = None

    def __post_init__(self):
        if self.q < 1 or self.r < 1:
            raise ValueError("exponents must be >= 1")
        if self.time_lorentz is not None and self.time_lorentz < 1:
            raise ValueError("secondary index must be >= 1")


def mixed_norm(u: SpacetimeField, spec: MixedNormSpec) -> float:
    """|| ||u(t,.)||_{L^r_x} ||_{L^q_t} with trapezoid weights in time.

    With time_lorentz = p the outer norm becomes L^{q,p}_t of the time
    profile, computed exactly on the weighted steps.
    """
    if len(u) == 0:
        raise ValueError("empty time grid")
    r = float(spec.r)
    if np.isinf(r):
        profile = np.max(np.abs(u.data).reshape(len(u), -1), axis=1)
    else:
        profile = (np.sum(np.abs(u.data) ** r, axis=tuple(range(1, u.data.ndim)))
                   * u.grid.cell_volume) ** (1.0 / r)
    tw = trapezoid_weights(u.times)
    q = float(spec.q)
    if spec.time_lorentz is not None:
        return lorentz_norm(profile, tw, q, spec.time_lorentz)
    if np.isinf(q):
        return float(np.max(profile))
    return float((np.sum(profile ** q * tw)) ** (1.0 / q))


def besov_norm(f: Field, s, two_beta, homogeneous=True):
    """Dyadic Besov norm (sum_j (2^{js} ||P_j f||_2)^{2 beta})^{1/(2 beta)}.

    The homogeneous version sums the resolvable dyadic range; the
    inhomogeneous version adds the low-frequency block ||P_<=0 f||_2.
    """
    tb = float(two_beta)
    if tb < 1:
        raise ValueError("summability exponent must be >= 1")
    j_min, j_max = lp_resolvable_range(f.grid)
    terms = []
    start = j_min if homogeneous else 1
    for j in range(start, j_max + 1):
        nrm = littlewood_paley(f, j).norm_l2()
        terms.append((2.0 ** (j * float(s))) * nrm)
    terms = np.asarray(terms)
    if np.isinf(tb):
        block = float(np.max(terms)) if terms.size else 0.0
    else:
        block = float(np.sum(terms ** tb) ** (1.0 / tb))
    if homogeneous:
        return block
    return float(lp_low(f, 0).norm_l2()) + block


class OperatorMatrix:
    """Finite-rank operator on the discretized L^2, with an SVD cache."""

    __slots__ = ("matrix", "_svd")

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("matrix must be square")
        self.matrix = matrix
        self._svd = None

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def singular_values(self):
        if self._svd is None:
            self._svd = np.linalg.svd(self.matrix, compute_uv=False)
        return self._svd

    def trace(self):
        return complex(np.trace(self.matrix))

    def adjoint(self):
        return OperatorMatrix(self.matrix.conj().T)

    def is_self_adjoint(self, tol=1e-10):
        scale = max(float(np.abs(self.matrix).max()), 1e-300)
        return float(np.abs(self.matrix - self.matrix.conj().T).max()) <= tol * max(scale, 1.0)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.matrix @ other.matrix)
        return self.matrix @ other

    def __add__(self, other):
        return OperatorMatrix(self.matrix + other.matrix)

    def __sub__(self, other):
        return OperatorMatrix(self.matrix - other.matrix)

    def __mul__(self, scalar):
        return OperatorMatrix(self.matrix * scalar)

    __rmul__ = __mul__


def schatten_norm(a: OperatorMatrix, beta) -> float:
    """(sum s_i^beta)^(1/beta) over singular values; beta = inf is the
    operator norm.  Always via singular values, never matrix powers."""
    beta = float(beta)
    if beta < 1:
        raise ValueError("beta must be >= 1")
    s = a.singular_values
    if np.isinf(beta):
        return float(s[0]) if s.size else 0.0
    return float(np.sum(s ** beta) ** (1.0 / beta))


def density(gamma: OperatorMatrix, grid: Grid, tol=1e-10) -> Field:
    """rho_gamma = diag / cellvol, so that int rho = Tr gamma."""
    if not gamma.is_self_adjoint(tol):
        raise ValueError("density needs a self-adjoint operator")
    diag = np.real(np.diagonal(gamma.matrix)) / grid.cell_volume
    return Field(grid, diag.reshape(grid.shape).astype(complex))


def projector(fields, nu=None) -> OperatorMatrix:
    """sum_j nu_j <., f_j> f_j as an OperatorMatrix (kernel * cellvol)."""
    fields = list(fields)
    grid = fields[0].grid
    nu = np.ones(len(fields)) if nu is None else np.asarray(nu, dtype=float)
    vol = grid.cell_volume
    vecs = np.stack([f.values.ravel() for f in fields])
    mat = (vecs.T * nu) @ vecs.conj() * vol
    return OperatorMatrix(mat)


def hls_pairing(g1, g2, weights, lam):
    """Discrete double sum  sum_{i != j} g1_i g2_j w_i w_j / |t_i - t_j|^lam
    on a shared 1-d grid (refined Hardy-Littlewood-Sobolev test quantity)."""
    t = np.asarray(weights["times"], dtype=float)
    w = np.asarray(weights["weights"], dtype=float)
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    diff = np.abs(t[:, None] - t[None, :])
    np.fill_diagonal(diff, np.inf)
    kern = diff ** (-float(lam))
    return float(np.einsum("i,j,ij,i,j->", g1, g2, kern, w, w))
