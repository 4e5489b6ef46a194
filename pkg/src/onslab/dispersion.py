"""Radial dispersion relations phi(xi) = phi0(|xi|) and their calculus.

Provides the built-in symbols |xi|^alpha, |xi| and <xi> = (1+|xi|^2)^1/2
together with user-supplied almost-homogeneous profiles carrying class
constants (B, lam, d1, d2) that certify

    d1 |xi|^(a-1) <= |grad phi| <= d2 |xi|^(a-1)
    |d^g phi|     <= B |xi|^(a-|g|)
    |v^T Hphi v|  >= lam |xi|^(a-2)   for unit v.

For radial symbols the Hessian has eigenvalues phi0''(rho) (radial) and
phi0'(rho)/rho (tangential, multiplicity d-1), which gives the closed
form for det Hphi used by the damped oscillatory integrals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "DispersionRelation",
    "FractionalPower",
    "Wave",
    "KleinGordon",
    "AlmostHomogeneous",
    "ClassConstants",
    "certify_class",
    "rescaled",
]


class DispersionRelation:
    """Radial symbol with two (optionally three) radial derivatives."""

    name = "abstract"
    alpha: Optional[float] = None   # homogeneity order when meaningful

    def phi0(self, rho):
        raise NotImplementedError

    def dphi0(self, rho):
        raise NotImplementedError

    def d2phi0(self, rho):
        raise NotImplementedError

    def d3phi0(self, rho):
        return None

    def phi(self, xi):
        """phi(xi) for an (..., d) array of frequency vectors."""
        return self.phi0(np.linalg.norm(np.asarray(xi, dtype=float), axis=-1))

    def grad(self, xi):
        xi = np.asarray(xi, dtype=float)
        rho = np.linalg.norm(xi, axis=-1, keepdims=True)
        safe = np.where(rho > 0, rho, 1.0)
        return self.dphi0(safe[..., 0])[..., None] * xi / safe

    def max_group_speed(self, rho_max, samples=4096):
        rho = np.linspace(1e-9, rho_max, samples)
        return float(np.max(np.abs(self.dphi0(rho))))

    def hessian_det_radial(self, rho, d):
        """det Hphi at |xi| = rho in dimension d."""
        rho = np.asarray(rho, dtype=float)
        return self.d2phi0(rho) * (self.dphi0(rho) / rho) ** (d - 1)

    def log_abs_hessian_det(self, rho, d):
        return np.log(np.abs(self.hessian_det_radial(rho, d)))

    def dlog_abs_hessian_det(self, rho, d):
        """d/drho log|det Hphi|; needs a third derivative."""
        d3 = self.d3phi0(rho)
        if d3 is None:
            return None
        rho = np.asarray(rho, dtype=float)
        return d3 / self.d2phi0(rho) + (d - 1) * (self.d2phi0(rho) / self.dphi0(rho) - 1.0 / rho)

    def d2log_abs_hessian_det(self, rho, d, h=None):
        g = self.dlog_abs_hessian_det
        if g(np.asarray([1.0]), d) is None:
            return None
        rho = np.asarray(rho, dtype=float)
        h = 1e-5 * np.maximum(rho, 1e-30) if h is None else h
        return (g(rho + h, d) - g(rho - h, d)) / (2 * h)


@dataclass(frozen=True)
class ClassConstants:
    B: float
    lam: float
    d1: float
    d2: float


class FractionalPower(DispersionRelation):
    """phi(xi) = |xi|^alpha, alpha not in {0, 1}."""

    def __init__(self, alpha):
        if alpha in (0, 1):
            raise ValueError("alpha must avoid {0, 1}")
        self.alpha = float(alpha)
        self.name = f"|xi|^{alpha}"

    def phi0(self, rho):
        return np.asarray(rho, dtype=float) ** self.alpha

    def dphi0(self, rho):
        return self.alpha * np.asarray(rho, dtype=float) ** (self.alpha - 1)

    def d2phi0(self, rho):
        a = self.alpha
        return a * (a - 1) * np.asarray(rho, dtype=float) ** (a - 2)

    def d3phi0(self, rho):
        a = self.alpha
        return a * (a - 1) * (a - 2) * np.asarray(rho, dtype=float) ** (a - 3)

    def class_constants(self):
        a = abs(self.alpha)
        return ClassConstants(B=max(a, abs(self.alpha * (self.alpha - 1)),
                                    abs(self.alpha * (self.alpha - 1) * (self.alpha - 2))),
                              lam=min(a, abs(self.alpha * (self.alpha - 1))),
                              d1=a, d2=a)


class Wave(DispersionRelation):
    """phi(xi) = |xi|."""

    name = "|xi|"
    alpha = 1.0

    def phi0(self, rho):
        return np.asarray(rho, dtype=float)

    def dphi0(self, rho):
        return np.ones_like(np.asarray(rho, dtype=float))

    def d2phi0(self, rho):
        return np.zeros_like(np.asarray(rho, dtype=float))

    def d3phi0(self, rho):
        return np.zeros_like(np.asarray(rho, dtype=float))


class KleinGordon(DispersionRelation):
    """phi(xi) = (1 + |xi|^2)^(1/2)."""

    name = "<xi>"

    def phi0(self, rho):
        rho = np.asarray(rho, dtype=float)
        return np.sqrt(1.0 + rho * rho)

    def dphi0(self, rho):
        rho = np.asarray(rho, dtype=float)
        return rho / np.sqrt(1.0 + rho * rho)

    def d2phi0(self, rho):
        rho = np.asarray(rho, dtype=float)
        return (1.0 + rho * rho) ** -1.5

    def d3phi0(self, rho):
        rho = np.asarray(rho, dtype=float)
        return -3.0 * rho * (1.0 + rho * rho) ** -2.5


class AlmostHomogeneous(DispersionRelation):
    """User-supplied radial profile with class constants."""

    def __init__(self, alpha, phi0, dphi0, d2phi0, constants: ClassConstants,
                 d3phi0=None, name=None):
        if alpha in (0, 1):
            raise ValueError("alpha must avoid {0, 1}")
        self.alpha = float(alpha)
        self._phi0, self._d1, self._d2, self._d3 = phi0, dphi0, d2phi0, d3phi0
        self.constants = constants
        self.name = name or f"almost-homogeneous({alpha})"

    def phi0(self, rho):
        return self._phi0(np.asarray(rho, dtype=float))

    def dphi0(self, rho):
        return self._d1(np.asarray(rho, dtype=float))

    def d2phi0(self, rho):
        return self._d2(np.asarray(rho, dtype=float))

    def d3phi0(self, rho):
        if self._d3 is None:
            return None
        return self._d3(np.asarray(rho, dtype=float))

    def rescale(self, scale):
        """phi_scale^alpha(xi) = scale^-alpha phi(scale xi); same class constants."""
        a = self.alpha
        s = float(scale)
        return AlmostHomogeneous(
            a,
            phi0=lambda r: s ** (-a) * self._phi0(s * r),
            dphi0=lambda r: s ** (1 - a) * self._d1(s * r),
            d2phi0=lambda r: s ** (2 - a) * self._d2(s * r),
            constants=self.constants,
            d3phi0=None if self._d3 is None else (lambda r: s ** (3 - a) * self._d3(s * r)),
            name=f"{self.name}@scale{scale:g}",
        )


def rescaled(phi: DispersionRelation, scale: float) -> DispersionRelation:
    """phi_scale^alpha for any radial symbol with declared order alpha."""
    if isinstance(phi, AlmostHomogeneous):
        return phi.rescale(scale)
    if phi.alpha is None:
        raise ValueError("rescaling needs a declared homogeneity order")
    a, s = phi.alpha, float(scale)
    cc = getattr(phi, "class_constants", lambda: ClassConstants(1, 1, 1, 1))()
    return AlmostHomogeneous(
        a,
        phi0=lambda r: s ** (-a) * phi.phi0(s * r),
        dphi0=lambda r: s ** (1 - a) * phi.dphi0(s * r),
        d2phi0=lambda r: s ** (2 - a) * phi.d2phi0(s * r),
        constants=cc,
        d3phi0=(lambda r: s ** (3 - a) * phi.d3phi0(s * r))
        if phi.d3phi0(np.asarray([1.0])) is not None else None,
        name=f"{phi.name}@scale{scale:g}",
    )


@dataclass
class ClassCertificate:
    gradient_ok: bool
    hessian_ok: bool
    worst_gradient_ratio_low: float
    worst_gradient_ratio_high: float
    worst_hessian_ratio: float

    @property
    def ok(self):
        return self.gradient_ok and self.hessian_ok


def certify_class(phi: DispersionRelation, d, constants: ClassConstants,
                  rng=None, n_vectors=16) -> ClassCertificate:
    """Spot-check the almost-homogeneity bounds on |xi| in [2^-20, 2^20].

    The gradient bounds are checked directly on the radial derivative;
    the Hessian ellipticity |v^T Hphi v| >= lam |xi|^(a-2) is sampled on
    random unit vectors, using the radial/tangential eigen-decomposition.
    """
    if phi.alpha is None:
        raise ValueError("class membership needs a declared order alpha")
    rng = np.random.default_rng(0) if rng is None else rng
    a = phi.alpha
    rho = 2.0 ** np.linspace(-20, 20, 81)
    grad = np.abs(phi.dphi0(rho))
    ref = rho ** (a - 1)
    low = grad / (constants.d1 * ref)
    high = grad / (constants.d2 * ref)
    gradient_ok = bool(np.all(low >= 1 - 1e-9) and np.all(high <= 1 + 1e-9))

    lam_ref = constants.lam * rho ** (a - 2)
    eig_rad = phi.d2phi0(rho)
    eig_tan = phi.dphi0(rho) / rho
    worst = np.inf
    hessian_ok = True
    for _ in range(n_vectors):
        if d == 1:
            c2 = np.ones_like(rho)
        else:
            v = rng.normal(size=d)
            v /= np.linalg.norm(v)
            c2 = np.full_like(rho, v[0] ** 2)   # radial direction fixed as e1 wlog
        quad = np.abs(c2 * eig_rad + (1 - c2) * eig_tan)
        ratio = quad / lam_ref
        worst = min(worst, float(ratio.min()))
        hessian_ok &= bool(np.all(ratio >= 1 - 1e-9))
    return ClassCertificate(gradient_ok, hessian_ok,
                            float(low.min()), float(high.max()), worst)
