"""Periodic grids, complex fields, propagators and frequency multipliers.

Conventions.  The box is [0, L)^d sampled at n points per axis, so the
frequencies are (2 pi / L) Z^d truncated to |k| <= n/2.  The forward
transform approximates f_hat(xi) = int f(x) e^{-i x.xi} dx, which means
spectrum = cellvol * fftn(values); the inverse carries the (2 pi)^-d.
All norms carry the grid measure (L/n)^d so discrete norms approximate
their continuum counterparts independently of n.

Propagation by e^{i t phi(D)} and all multipliers act diagonally in
frequency; fields are immutable after construction.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bumps import chi0, low_pass, smooth_bump
from .dispersion import DispersionRelation

__all__ = [
    "Grid",
    "Field",
    "SpacetimeField",
    "propagate",
    "multiplier",
    "theta_weight",
    "littlewood_paley",
    "lp_low",
    "lp_reconstruct",
    "lp_resolvable_range",
    "recommended_box",
    "edge_mass",
    "save_field",
    "load_field",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, L)^d."""

    d: int
    n: int
    box: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.n < 8 or self.n % 2:
            raise ValueError("n must be even and >= 8")
        if self.box <= 0:
            raise ValueError("box length must be positive")

    @property
    def cell_volume(self):
        return (self.box / self.n) ** self.d

    @property
    def shape(self):
        return (self.n,) * self.d

    def axis_coordinates(self):
        return np.arange(self.n) * (self.box / self.n)

    def coordinates(self):
        ax = self.axis_coordinates()
        return np.meshgrid(*([ax] * self.d), indexing="ij")

    def axis_frequencies(self):
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.box / self.n)

    def frequencies(self):
        ax = self.axis_frequencies()
        return np.meshgrid(*([ax] * self.d), indexing="ij")

    def frequency_norm(self):
        mats = self.frequencies()
        return np.sqrt(sum(m * m for m in mats))

    @property
    def max_frequency(self):
        return np.pi * self.n / self.box


class Field:
    """Immutable complex samples of f(x) with a cached spectrum."""

    __slots__ = ("grid", "values", "_spectrum", "time", "zero_mode_annihilated")

    def __init__(self, grid: Grid, values, spectrum=None, time=None,
                 zero_mode_annihilated=False):
        values = np.asarray(values, dtype=complex)
        if values.shape != grid.shape:
            raise ValueError(f"values shape {values.shape} != grid {grid.shape}")
        values = values.copy()
        values.setflags(write=False)
        self.grid = grid
        self.values = values
        self._spectrum = spectrum
        self.time = time
        self.zero_mode_annihilated = zero_mode_annihilated

    @classmethod
    def from_spectrum(cls, grid: Grid, spectrum, time=None, **kw):
        spectrum = np.asarray(spectrum, dtype=complex)
        values = np.fft.ifftn(spectrum) * (grid.n / grid.box) ** grid.d
        f = cls(grid, values, time=time, **kw)
        spec = spectrum.copy()
        spec.setflags(write=False)
        f._spectrum = spec
        return f

    @property
    def spectrum(self):
        if self._spectrum is None:
            spec = np.fft.fftn(self.values) * self.grid.cell_volume
            spec.setflags(write=False)
            self._spectrum = spec
        return self._spectrum

    def norm_l2(self):
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume))

    def norm_lp(self, p):
        if np.isinf(p):
            return float(np.max(np.abs(self.values)))
        return float((np.sum(np.abs(self.values) ** p)
                      * self.grid.cell_volume) ** (1.0 / p))

    def inner(self, other: "Field"):
        return complex(np.vdot(other.values, self.values) * self.grid.cell_volume)

    def __add__(self, other):
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other):
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__


class SpacetimeField:
    """Samples u(t_k, x) on a shared grid, times strictly increasing."""

    __slots__ = ("grid", "times", "data")

    def __init__(self, grid: Grid, times, data):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("times must be a nonempty 1-d array")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        data = np.asarray(data, dtype=complex)
        if data.shape != (times.size,) + grid.shape:
            raise ValueError("data shape mismatch")
        data = data.copy()
        data.setflags(write=False)
        self.grid = grid
        self.times = times
        self.data = data

    @classmethod
    def from_fields(cls, times, fields: Sequence[Field]):
        grid = fields[0].grid
        return cls(grid, times, np.stack([f.values for f in fields]))

    def field(self, k) -> Field:
        return Field(self.grid, self.data[k], time=float(self.times[k]))

    def __len__(self):
        return self.times.size


def propagate(f: Field, phi: DispersionRelation, t) -> Field:
    """e^{i t phi(D)} f, exact per mode, unitary on the grid l^2.

    Negative-order symbols are singular at the zero mode; it is
    annihilated and flagged on the output.
    """
    rho = f.grid.frequency_norm()
    zero = rho == 0
    safe = np.where(zero, 1.0, rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        symbol = np.asarray(phi.phi0(safe), dtype=float)
        v0 = float(np.asarray(phi.phi0(np.array([0.0])))[0])
    spec = f.spectrum * np.exp(1j * float(t) * symbol)
    annihilated = not np.isfinite(v0)
    if annihilated:
        spec = np.where(zero, 0.0, spec)
    else:
        spec = np.where(zero, f.spectrum * np.exp(1j * float(t) * v0), spec)
    base = 0.0 if f.time is None else f.time
    return Field.from_spectrum(
        f.grid, spec, time=base + float(t),
        zero_mode_annihilated=annihilated or f.zero_mode_annihilated)


def multiplier(f: Field, kind: str, order, annihilate_zero_mode=False) -> Field:
    """Frequency-wise multiplication by |xi|^s ('homogeneous') or
    <xi>^s ('inhomogeneous').

    Negative homogeneous powers need a vanishing zero mode or the
    explicit annihilate_zero_mode opt-in.
    """
    s = float(order)
    rho = f.grid.frequency_norm()
    zero = rho == 0
    if kind in ("homogeneous", "|xi|^s"):
        if s < 0:
            z = complex(f.spectrum[tuple([0] * f.grid.d)])
            if abs(z) > 1e-12 * max(np.abs(f.spectrum).max(), 1e-300) \
                    and not annihilate_zero_mode:
                raise ValueError("negative homogeneous power on a nonzero "
                                 "zero mode; pass annihilate_zero_mode=True")
        safe = np.where(zero, 1.0, rho)
        m = safe ** s
        zero_value = 1.0 if s == 0 else 0.0
        m = np.where(zero, zero_value, m)
        annihilated = bool(s < 0)
    elif kind in ("inhomogeneous", "<xi>^s"):
        m = (1.0 + rho * rho) ** (s / 2.0)
        annihilated = False
    else:
        raise ValueError(f"unknown multiplier kind {kind!r}")
    return Field.from_spectrum(f.grid, f.spectrum * m,
                               time=f.time,
                               zero_mode_annihilated=f.zero_mode_annihilated or annihilated)


def theta_weight(f: Field, r, d=None) -> Field:
    """Square root of the wave damping weight,
    |xi|^(-(d+1)(1/2 - 1/r)/2) chi(|xi|), applied in frequency."""
    d = f.grid.d if d is None else d
    s = -(d + 1) * (0.5 - 1.0 / float(r)) / 2.0
    rho = f.grid.frequency_norm()
    zero = rho == 0
    safe = np.where(zero, 1.0, rho)
    m = safe ** s * smooth_bump(safe)
    m = np.where(zero, 0.0, m)
    return Field.from_spectrum(f.grid, f.spectrum * m, time=f.time,
                               zero_mode_annihilated=True)


def littlewood_paley(f: Field, j) -> Field:
    """P_j f via the chi_0(2^-j |xi|) multiplier."""
    rho = f.grid.frequency_norm()
    return Field.from_spectrum(f.grid, f.spectrum * chi0(2.0 ** (-j) * rho),
                               time=f.time)


def lp_low(f: Field, j=0) -> Field:
    """P_{<=j} f, the completion chi(2^-(j+1)|xi|) = sum_{k <= j} chi_k."""
    rho = f.grid.frequency_norm()
    return Field.from_spectrum(f.grid, f.spectrum * low_pass(rho, j), time=f.time)


def lp_resolvable_range(grid: Grid):
    """Dyadic indices whose annuli meet the grid's nonzero frequencies."""
    rho_min = 2.0 * np.pi / grid.box
    rho_max = grid.max_frequency * np.sqrt(grid.d)
    j_min = int(np.floor(np.log2(rho_min))) - 1
    j_max = int(np.ceil(np.log2(rho_max))) + 1
    return j_min, j_max


def lp_reconstruct(f: Field) -> float:
    """|| f - P_<=0 f - sum_{j>=1} P_j f ||_2 / ||f||_2."""
    total = lp_low(f, 0).values.copy()
    _, j_max = lp_resolvable_range(f.grid)
    for j in range(1, j_max + 1):
        total = total + littlewood_paley(f, j).values
    num = float(np.sqrt(np.sum(np.abs(f.values - total) ** 2)
                        * f.grid.cell_volume))
    den = f.norm_l2()
    return num / den if den > 0 else 0.0


def recommended_box(T, phi: DispersionRelation, band, factor=4.0):
    """Box policy: L >= factor * T * max |grad phi| over the data band."""
    return float(factor * abs(T) * phi.max_group_speed(band))


def edge_mass(f: Field, fraction=0.05) -> float:
    """Share of the L^2 mass within `fraction` of the box edge (wraparound
    diagnostic; meaningful for data centered in the box)."""
    n = f.grid.n
    k = max(1, int(fraction * n))
    mask = np.zeros(f.grid.shape, dtype=bool)
    for axis in range(f.grid.d):
        sl = [slice(None)] * f.grid.d
        sl[axis] = slice(0, k)
        mask[tuple(sl)] = True
        sl[axis] = slice(n - k, n)
        mask[tuple(sl)] = True
    total = float(np.sum(np.abs(f.values) ** 2))
    if total == 0:
        return 0.0
    return float(np.sum(np.abs(f.values[mask]) ** 2) / total)


_MAGIC = b"ONSF"
_HEADER = struct.Struct("<4sIIdd")   # magic, d, n, L, time


def save_field(f: Field, path):
    """Flat binary container: header (d, n, L, time) + interleaved doubles."""
    t = np.nan if f.time is None else float(f.time)
    payload = np.empty(f.values.size * 2, dtype="<f8")
    payload[0::2] = f.values.real.ravel()
    payload[1::2] = f.values.imag.ravel()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, f.grid.d, f.grid.n, f.grid.box, t))
        fh.write(payload.tobytes())


def load_field(path) -> Field:
    with open(path, "rb") as fh:
        magic, d, n, box, t = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC:
            raise ValueError("not a field container")
        grid = Grid(d=d, n=n, box=box)
        payload = np.frombuffer(fh.read(), dtype="<f8")
    if payload.size != 2 * n ** d:
        raise ValueError("truncated field container")
    values = (payload[0::2] + 1j * payload[1::2]).reshape(grid.shape)
    return Field(grid, values, time=None if np.isnan(t) else float(t))
