"""Ellipsoidal container geometry: exact volume integrals and surface quadrature.

Volume integrals of monomials over the ellipsoid x^2/a^2 + y^2/b^2 + z^2/c^2 < 1
have a closed form in half-integer Gamma functions.  Those Gammas reduce to
rationals times sqrt(pi), so every integral is computed here as

    (exact rational) * pi * (product of axes),

with a single floating conversion at the end.  Surface integrals have no
elementary closed form on a general ellipsoid and are done by tensorized
Gauss-Legendre / trapezoid quadrature on the polar parametrization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .polynomials import Polynomial3

_KIND_TOL = 1e-12  # relative tolerance deciding axis equality


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)  # exact binary value of the float
    raise TypeError(f"cannot interpret {x!r} as an exact axis length")


def _sqrt_fraction(f: Fraction) -> Fraction | None:
    """Exact square root of a nonnegative rational, or None if irrational."""
    if f < 0:
        raise ValueError("negative radicand")
    pn = math.isqrt(f.numerator)
    pd = math.isqrt(f.denominator)
    if pn * pn == f.numerator and pd * pd == f.denominator:
        return Fraction(pn, pd)
    return None


def _close(u: float, v: float) -> bool:
    return abs(u - v) <= _KIND_TOL * max(abs(u), abs(v))


class Domain:
    """Ellipsoid with semi-axes a, b, c > 0.

    Axes given as str/int/Fraction are kept exact; floats are interpreted as
    their exact binary rational values.  ``kind`` classifies the symmetry:
    sphere (a=b=c), spheroid_z (a=b != c), triaxial otherwise, with relative
    tolerance 1e-12 on the comparisons.  Immutable and hashable.
    """

    __slots__ = ("a", "b", "c", "a2", "b2", "c2", "axes_exact", "kind", "_chi")

    def __init__(self, a, b, c):
        fa, fb, fc = _to_fraction(a), _to_fraction(b), _to_fraction(c)
        if fa <= 0 or fb <= 0 or fc <= 0:
            raise ValueError("semi-axes must be positive")
        object.__setattr__(self, "a", float(fa))
        object.__setattr__(self, "b", float(fb))
        object.__setattr__(self, "c", float(fc))
        object.__setattr__(self, "a2", fa * fa)
        object.__setattr__(self, "b2", fb * fb)
        object.__setattr__(self, "c2", fc * fc)
        object.__setattr__(self, "axes_exact", (fa, fb, fc))
        object.__setattr__(self, "kind", self._classify())
        object.__setattr__(self, "_chi", None)

    @classmethod
    def from_beta(cls, beta) -> "Domain":
        """Spheroid x^2 + y^2 + (1+beta) z^2 = 1, i.e. a = b = 1, c = (1+beta)^(-1/2)."""
        fb = _to_fraction(beta)
        if fb <= -1:
            raise ValueError("beta must exceed -1")
        c2 = 1 / (1 + fb)
        c = _sqrt_fraction(c2)
        if c is not None:
            return cls(1, 1, c)
        dom = cls.__new__(cls)
        cf = math.sqrt(float(c2))
        object.__setattr__(dom, "a", 1.0)
        object.__setattr__(dom, "b", 1.0)
        object.__setattr__(dom, "c", cf)
        object.__setattr__(dom, "a2", Fraction(1))
        object.__setattr__(dom, "b2", Fraction(1))
        object.__setattr__(dom, "c2", c2)
        object.__setattr__(dom, "axes_exact", None)
        object.__setattr__(dom, "kind", dom._classify())
        object.__setattr__(dom, "_chi", None)
        return dom

    def _classify(self) -> str:
        ab = _close(self.a, self.b)
        if ab and _close(self.b, self.c) and _close(self.a, self.c):
            return "sphere"
        if ab:
            return "spheroid_z"
        return "triaxial"

    @property
    def beta(self) -> Fraction:
        """beta with respect to the z axis: 1/c^2 - 1 (exact)."""
        return 1 / self.c2 - 1

    @property
    def chi(self) -> Polynomial3:
        """chi(x,y,z) = 1 - x^2/a^2 - y^2/b^2 - z^2/c^2 (exact coefficients)."""
        if self._chi is None:
            poly = Polynomial3({
                (0, 0, 0): Fraction(1),
                (2, 0, 0): -1 / self.a2,
                (0, 2, 0): -1 / self.b2,
                (0, 0, 2): -1 / self.c2,
            })
            object.__setattr__(self, "_chi", poly)
        return self._chi

    def __setattr__(self, name, value):
        raise AttributeError("Domain is immutable")

    def __eq__(self, other):
        return isinstance(other, Domain) and (self.a2, self.b2, self.c2) == (other.a2, other.b2, other.c2)

    def __hash__(self):
        return hash((self.a2, self.b2, self.c2))

    def __repr__(self):
        return f"Domain(a={self.a!r}, b={self.b!r}, c={self.c!r}, kind={self.kind!r})"


@lru_cache(maxsize=None)
def _gamma_half_ratio(k: int) -> Fraction:
    """Gamma(k + 1/2) / sqrt(pi) = (2k)! / (4^k k!)."""
    return Fraction(math.factorial(2 * k), 4**k * math.factorial(k))


@lru_cache(maxsize=4096)
def _ball_monomial_fraction(p: int, q: int, r: int) -> Fraction:
    """Integral of x^p y^q z^r over the unit ball, divided by pi (even exponents)."""
    k1, k2, k3 = p // 2, q // 2, r // 2
    num = _gamma_half_ratio(k1) * _gamma_half_ratio(k2) * _gamma_half_ratio(k3)
    return num / _gamma_half_ratio(k1 + k2 + k3 + 2)


@lru_cache(maxsize=4096)
def _half_ball_odd_fraction(p: int, q: int, r: int) -> Fraction:
    """Northern-half integral of x^p y^q z^r over the unit ball, divided by pi.

    Requires p, q even and r odd; from the hemisphere surface moment formula
    integrated radially.
    """
    k1, k2 = p // 2, q // 2
    n = (r + 1) // 2
    num = _gamma_half_ratio(k1) * _gamma_half_ratio(k2) * math.factorial(n - 1)
    return num / (2 * math.factorial(k1 + k2 + n + 1))


def monomial_integral(p: int, q: int, r: int, domain: Domain) -> float:
    """Exact integral of x^p y^q z^r over the ellipsoid volume.

    Zero when any exponent is odd; otherwise
    a^(p+1) b^(q+1) c^(r+1) * Gamma((p+1)/2) Gamma((q+1)/2) Gamma((r+1)/2)
    / Gamma((p+q+r+3)/2 + 1), evaluated in exact rational arithmetic with one
    final float conversion (validated against a Monte Carlo oracle in the
    test suite).
    """
    if min(p, q, r) < 0:
        raise ValueError("exponents must be nonnegative")
    if (p | q | r) & 1:
        return 0.0
    rational = (_ball_monomial_fraction(p, q, r)
                * domain.a2 ** (p // 2) * domain.b2 ** (q // 2) * domain.c2 ** (r // 2))
    if domain.axes_exact is not None:
        fa, fb, fc = domain.axes_exact
        return float(rational * fa * fb * fc) * math.pi
    return float(rational) * domain.a * domain.b * domain.c * math.pi


def half_monomial_integral(p: int, q: int, r: int, domain: Domain, hemisphere: str) -> float:
    """Integral of x^p y^q z^r over the half-ellipsoid z > 0 (north) or z < 0 (south)."""
    if hemisphere not in ("north", "south"):
        raise ValueError("hemisphere must be 'north' or 'south'")
    if min(p, q, r) < 0:
        raise ValueError("exponents must be nonnegative")
    if (p & 1) or (q & 1):
        return 0.0
    if r % 2 == 0:
        return 0.5 * monomial_integral(p, q, r, domain)
    rational = (_half_ball_odd_fraction(p, q, r)
                * domain.a2 ** (p // 2) * domain.b2 ** (q // 2) * domain.c2 ** ((r + 1) // 2))
    if domain.axes_exact is not None:
        fa, fb, _ = domain.axes_exact
        value = float(rational * fa * fb) * math.pi
    else:
        value = float(rational) * domain.a * domain.b * math.pi
    return value if hemisphere == "north" else -value


@dataclass(frozen=True)
class SurfaceRule:
    """Quadrature nodes/weights on the ellipsoid boundary.

    Weights carry the exact area element of the parametrization
    (a sin t cos s, b sin t sin s, c cos t), so sum(w * f(points)) approximates
    the surface integral of f with spectral accuracy in the orders.
    """

    points: np.ndarray
    weights: np.ndarray
    orders: tuple[int, int]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


def surface_rule(domain: Domain, n_theta: int, n_phi: int) -> SurfaceRule:
    """Gauss-Legendre x uniform-azimuth quadrature rule on the boundary."""
    if n_theta < 2:
        raise ValueError("n_theta must be at least 2")
    if n_phi < 4:
        raise ValueError("n_phi must be at least 4")
    t_nodes, t_weights = np.polynomial.legendre.leggauss(n_theta)
    theta = 0.5 * math.pi * (t_nodes + 1.0)
    w_theta = 0.5 * math.pi * t_weights
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    w_phi = np.full(n_phi, 2.0 * math.pi / n_phi)

    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    a, b, c = domain.a, domain.b, domain.c

    x = a * np.outer(st, cp)
    y = b * np.outer(st, sp)
    z = c * np.outer(ct, np.ones(n_phi))
    # |d_theta X x d_phi X| = sin t * sqrt(b^2 c^2 sin^2 t cos^2 s
    #                                      + a^2 c^2 sin^2 t sin^2 s + a^2 b^2 cos^2 t)
    area = np.outer(st, np.ones(n_phi)) * np.sqrt(
        (b * c) ** 2 * np.outer(st**2, cp**2)
        + (a * c) ** 2 * np.outer(st**2, sp**2)
        + (a * b) ** 2 * np.outer(ct**2, np.ones(n_phi))
    )
    weights = np.outer(w_theta, w_phi) * area
    points = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    return SurfaceRule(points=points, weights=weights.ravel(), orders=(n_theta, n_phi))


def volume_integral(poly: Polynomial3, domain: Domain) -> float:
    """Exact integral of a polynomial over the ellipsoid (term by term)."""
    return sum(float(c) * monomial_integral(*e, domain) for e, c in poly.coeffs.items())


def surface_integral(f, rule: SurfaceRule) -> float:
    """Weighted sum of a scalar integrand over the rule's nodes.

    ``f`` may be a callable taking an (n, 3) point array, or a Polynomial3.
    """
    if isinstance(f, Polynomial3):
        pts = rule.points
        values = f.evaluate(pts[:, 0], pts[:, 1], pts[:, 2])
    else:
        values = f(rule.points)
    values = np.asarray(values, dtype=float)
    if values.shape != rule.weights.shape:
        raise ValueError("integrand returned wrong shape")
    return float(values @ rule.weights)


def converged_surface_integral(f, domain: Domain, start=(16, 32), max_doublings: int = 5,
                               rtol: float = 1e-10):
    """Integrate on Gamma, doubling orders until the value moves less than rtol.

    Returns (value, orders_used).  Raises if convergence is not reached.
    """
    nt, np_ = start
    prev = surface_integral(f, surface_rule(domain, nt, np_))
    for _ in range(max_doublings):
        nt, np_ = 2 * nt, 2 * np_
        cur = surface_integral(f, surface_rule(domain, nt, np_))
        if abs(cur - prev) <= rtol * max(1.0, abs(cur)):
            return cur, (nt, np_)
        prev = cur
    raise RuntimeError("surface integral did not converge under order doubling")
