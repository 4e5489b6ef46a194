"""Numerical laboratory for dispersive decay estimates and orthonormal-family
Strichartz experiments: exact exponent calculus, damped oscillatory-integral
quadrature with decay fits, periodic spectral propagators, mixed
Lebesgue/Lorentz/Besov/Schatten norms, sharpness constructions and the
kinetic / semiclassical / Hartree applications."""

__version__ = "0.1.0"

from . import applications, bumps, dispersion, exponents, norms, \
    onstrichartz, oscillatory, quadrature, spectral  # noqa: F401
