"""Exact arithmetic of admissibility, regularity and summability exponents.

Everything here is computed with rationals (fractions.Fraction); infinity
is the module-level singleton INF with reciprocal 0.  Points in the
(1/r, 1/q) square and the region geometry built on the named vertices

    O = (0, 0)
    A_sigma = ((2s-1)/(2(2s+1)), s/(2s+1))
    B_sigma = (s/(2(s+1)), s/(2(s+1)))
    C = (1/2, 0),  D = (0, 1/2)
    E_sigma = ((s-1)/(2s), 1/2)   (needs sigma >= 1)

are handled with exact half-plane and barycentric tests, so interior,
segment and vertex answers are never float-fuzzy.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

__all__ = [
    "INF",
    "as_exponent",
    "recip",
    "classify_pair",
    "beta_sigma",
    "sobolev_exponent",
    "region_membership",
    "necessary_beta_bounds",
    "named_points",
    "sigma_wave",
    "sigma_schrodinger",
    "sigma_klein_gordon",
    "ExponentPoint",
    "RegionReport",
    "EQUATIONS",
]


class _Infinity:
    """Positive infinity as a distinct exact value (reciprocal 0)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __eq__(self, other):
        return isinstance(other, _Infinity) or other == float("inf")

    def __hash__(self):
        return hash(float("inf"))

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return isinstance(other, _Infinity)

    def __gt__(self, other):
        return not isinstance(other, _Infinity)

    def __ge__(self, other):
        return True

    def __float__(self):
        return float("inf")


INF = _Infinity()

Exponent = Union[Fraction, _Infinity]


def as_exponent(x) -> Exponent:
    """Coerce ints, Fractions, 'inf' or float('inf') to an exact exponent."""
    if isinstance(x, _Infinity):
        return INF
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinity", "oo"):
            return INF
        return Fraction(x)
    if isinstance(x, float):
        if x == float("inf"):
            return INF
        return Fraction(x).limit_denominator(10**12)
    return Fraction(x)


def recip(x) -> Exponent:
    """Exact reciprocal with 1/INF = 0 and 1/0 = INF."""
    x = as_exponent(x)
    if isinstance(x, _Infinity):
        return Fraction(0)
    if x == 0:
        return INF
    return Fraction(1) / x


def _check_lebesgue(name, x):
    x = as_exponent(x)
    if not isinstance(x, _Infinity) and x < 2:
        raise ValueError(f"{name} must lie in [2, inf], got {x}")
    return x


def classify_pair(q, r, sigma) -> str:
    """Trichotomy of (q, r) against 1/q <=> sigma (1/2 - 1/r), exactly."""
    q = _check_lebesgue("q", q)
    r = _check_lebesgue("r", r)
    sigma = as_exponent(sigma)
    if isinstance(sigma, _Infinity) or sigma <= 0:
        raise ValueError("sigma must be a positive rational")
    lhs = recip(q)
    rhs = sigma * (Fraction(1, 2) - recip(r))
    if lhs == rhs:
        return "sharp"
    if lhs < rhs:
        return "non-sharp"
    return "inadmissible"


def beta_sigma(q, r, sigma) -> Exponent:
    """beta solving sigma/beta = 1/q + 2 sigma / r (beta = INF when the rhs is 0)."""
    q = _check_lebesgue("q", q)
    r = _check_lebesgue("r", r)
    sigma = as_exponent(sigma)
    denom = recip(q) + 2 * sigma * recip(r)
    if denom == 0:
        return INF
    return sigma / denom


EQUATIONS = (
    "fractional",
    "wave",
    "klein-gordon-wave-regime",
    "klein-gordon-schrodinger-regime",
)


def sobolev_exponent(equation, d, q, r, alpha=None):
    """Scaling regularity s for the given propagator.

    fractional:                        s = d/2 - d/r - alpha/q
    wave, klein-gordon-wave-regime:    s = d/2 - d/r - 1/q
    klein-gordon-schrodinger-regime:   s = d/2 - d/r - (d-2)/(d q)

    Returns (s, constraint_ok) where constraint_ok records, for the
    fractional equation, whether d/r + alpha/q < d holds (always True
    for the other equations).
    """
    if equation not in EQUATIONS:
        raise ValueError(f"unknown equation {equation!r}")
    d = int(d)
    if d < 1:
        raise ValueError("d must be a positive integer")
    q = _check_lebesgue("q", q)
    r = _check_lebesgue("r", r)
    half_d = Fraction(d, 2)
    inv_q = recip(q)
    inv_r = recip(r)
    if equation == "fractional":
        if alpha is None:
            raise ValueError("fractional equation needs alpha")
        alpha = as_exponent(alpha)
        if alpha in (Fraction(0), Fraction(1)):
            raise ValueError("alpha must avoid {0, 1}")
        s = half_d - d * inv_r - alpha * inv_q
        ok = d * inv_r + alpha * inv_q < d
        return s, bool(ok)
    if equation in ("wave", "klein-gordon-wave-regime"):
        return half_d - d * inv_r - inv_q, True
    # klein-gordon-schrodinger-regime
    return half_d - d * inv_r - Fraction(d - 2, d) * inv_q, True


def sigma_wave(d) -> Fraction:
    return Fraction(d - 1, 2)


def sigma_schrodinger(d) -> Fraction:
    return Fraction(d, 2)


def sigma_klein_gordon(d, rho) -> Fraction:
    """sigma = (d-1)/2 + rho with rho in [0, 1/2]."""
    rho = Fraction(rho)
    if not (0 <= rho <= Fraction(1, 2)):
        raise ValueError("rho must lie in [0, 1/2]")
    return Fraction(d - 1, 2) + rho


def named_points(sigma):
    """The vertices used by the region geometry, as Fraction pairs."""
    s = Fraction(sigma)
    if s < Fraction(1, 2):
        raise ValueError("sigma must be >= 1/2 for the region geometry")
    pts = {
        "O": (Fraction(0), Fraction(0)),
        "A_sigma": (Fraction(2 * s - 1, 1) / (2 * (2 * s + 1)), s / (2 * s + 1)),
        "B_sigma": (s / (2 * (s + 1)), s / (2 * (s + 1))),
        "C": (Fraction(1, 2), Fraction(0)),
        "D": (Fraction(0), Fraction(1, 2)),
    }
    if s >= 1:
        pts["E_sigma"] = ((s - 1) / (2 * s), Fraction(1, 2))
    return pts


def _orient(p, q, r):
    """Exact orientation of the triple (p, q, r)."""
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _on_segment(p, a, b):
    if _orient(a, b, p) != 0:
        return False
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def _in_convex(p, verts):
    """'interior' / 'boundary' / 'outside' for a convex vertex list."""
    n = len(verts)
    signs = []
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        if a == b:
            continue
        signs.append(_orient(a, b, p))
    if any(s == 0 for s in signs):
        for i in range(n):
            a, b = verts[i], verts[(i + 1) % n]
            if a != b and _on_segment(p, a, b):
                return "boundary"
        return "outside"
    if all(s > 0 for s in signs) or all(s < 0 for s in signs):
        return "interior"
    return "outside"


@dataclass(frozen=True)
class RegionReport:
    """Exact location of (1/r, 1/q) relative to the named regions."""

    point: tuple
    label: str                 # most specific description
    interiors: tuple           # all open regions containing the point
    boundary: Optional[str]    # vertex/segment name when on a boundary


def region_membership(d, sigma, q, r, require=None) -> RegionReport:
    """Locate (1/r, 1/q) against int(O A_sigma C), int(O A_sigma B_sigma),
    int(O D E_sigma A_sigma), the named segments and vertices.

    Passing require="int(ODE_sigmaA_sigma)" (or any E_sigma query) raises
    for sigma < 1, where E_sigma is undefined.
    """
    del d  # the geometry depends only on sigma; d enters via callers
    s = Fraction(sigma)
    if require is not None and "E_sigma" in require and s < 1:
        raise ValueError("E_sigma queries need sigma >= 1")
    q = _check_lebesgue("q", q)
    r = _check_lebesgue("r", r)
    pts = named_points(s)
    p = (recip(r), recip(q))

    for name, v in pts.items():
        if p == v:
            return RegionReport(p, f"vertex {name}", (), f"vertex {name}")

    regions = {
        "int(OA_sigmaC)": [pts["O"], pts["A_sigma"], pts["C"]],
        "int(OA_sigmaB_sigma)": [pts["O"], pts["A_sigma"], pts["B_sigma"]],
    }
    if "E_sigma" in pts:
        regions["int(ODE_sigmaA_sigma)"] = [pts["O"], pts["D"], pts["E_sigma"],
                                            pts["A_sigma"]]
    elif s < 1:
        # E_sigma undefined; the quadrilateral query is rejected lazily below.
        pass

    interiors = tuple(name for name, verts in regions.items()
                      if _in_convex(p, verts) == "interior")

    segments = [("O", "A_sigma"), ("A_sigma", "C"), ("O", "C"),
                ("O", "B_sigma"), ("A_sigma", "B_sigma"), ("O", "D"),
                ("C", "D")]
    if "E_sigma" in pts:
        segments += [("D", "E_sigma"), ("E_sigma", "A_sigma")]
    boundary = None
    for a, b in segments:
        if pts[a] != pts[b] and _on_segment(p, pts[a], pts[b]):
            boundary = f"segment ({a},{b})"
            break

    if boundary is not None:
        label = boundary
    elif "int(OA_sigmaB_sigma)" in interiors:
        label = "int(OA_sigmaB_sigma)"
    elif "int(OA_sigmaC)" in interiors:
        label = "int(OA_sigmaC)"
    elif "int(ODE_sigmaA_sigma)" in interiors:
        label = "int(ODE_sigmaA_sigma)"
    else:
        label = "outside"
    return RegionReport(p, label, interiors, boundary)


def necessary_beta_bounds(d, q, r):
    """The two necessary upper bounds (beta_{d/2}(q, r), q/2)."""
    q = _check_lebesgue("q", q)
    r = _check_lebesgue("r", r)
    scaling = beta_sigma(q, r, Fraction(d, 2))
    time_bound = INF if isinstance(q, _Infinity) else q / 2
    return scaling, time_bound


@dataclass(frozen=True)
class ExponentPoint:
    """A (d, sigma, q, r) tuple with its derived exponents."""

    d: int
    sigma: Fraction
    q: Exponent
    r: Exponent
    classification: str
    s: Fraction
    constraint_ok: bool
    beta: Exponent
    region: str
    beta_bounds: tuple
    # the interior sharpness of beta = 2r/(r+2) on the sharp wave-admissible
    # line is not settled; reports carry this flag rather than "necessary"
    beta_sharp_line_status: str = "conjectured"

    @classmethod
    def build(cls, d, sigma, q, r, equation="fractional", alpha=None):
        sigma = Fraction(sigma)
        q = as_exponent(q)
        r = as_exponent(r)
        cl = classify_pair(q, r, sigma)
        if equation == "fractional" and alpha is None:
            alpha = 2
        s, ok = sobolev_exponent(equation, d, q, r, alpha)
        return cls(
            d=d, sigma=sigma, q=q, r=r, classification=cl, s=s,
            constraint_ok=ok, beta=beta_sigma(q, r, sigma),
            region=region_membership(d, sigma, q, r).label,
            beta_bounds=necessary_beta_bounds(d, q, r),
        )

    def validate(self):
        if self.classification == "sharp":
            assert recip(self.q) == self.sigma * (Fraction(1, 2) - recip(self.r))
            if not isinstance(self.r, _Infinity):
                assert self.beta == 2 * self.r / (self.r + 2)
        if not isinstance(self.beta, _Infinity):
            assert self.beta >= 1
        return True
