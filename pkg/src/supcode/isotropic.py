"""Isotropic distributions on length-n bit patterns.

An isotropic distribution gives every pattern of weight ``k`` the same
probability ``p_k``. Three coefficient vectors carry the same information:

* ``P``: the per-pattern probabilities ``p_0 .. p_n``;
* ``F``: ``F_a``, the probability that a random pattern lies under a fixed
  mask of weight ``a``;
* ``G``: ``G_a``, the probability that a random pattern lies over a fixed
  mask of weight ``a`` (the fraction of records a query of weight ``a``
  selects).

Conversions towards ``P`` use alternating sums and lose precision quickly as
``n`` grows. For ``n <= EXACT_MAX_N`` they are summed in exact rational
arithmetic and rounded once; beyond that a ``RuntimeWarning`` is issued. Conversions away from ``P`` only add
non-negative terms and are stable for any ``n``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

EXACT_MAX_N = 64
DEFAULT_TOL = 1e-9

BASES = ("P", "F", "G")


@lru_cache(maxsize=65536)
def binom(n: int, k: int) -> float:
    """Binomial coefficient as a float; log-gamma once it would overflow."""
    if k < 0 or k > n:
        return 0.0
    if n <= 1000 or min(k, n - k) <= 64:
        try:
            return float(math.comb(n, k))
        except OverflowError:
            return math.inf
    return math.exp(math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1))


@lru_cache(maxsize=None)
def stirling2(m: int, k: int) -> int:
    if m == k:
        return 1
    if k == 0 or k > m:
        return 0
    return k * stirling2(m - 1, k) + stirling2(m - 1, k - 1)


@dataclass(frozen=True)
class MomentSet:
    mu1: float
    mu2: float
    mu3: float
    variance: float


class InvalidDistributionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class IsotropicDistribution:
    n: int
    basis: str
    coeffs: tuple

    def __init__(self, n: int, basis: str, coeffs: Sequence[float], tol: float | None = DEFAULT_TOL,
                 _exact: tuple | None = None):
        if n < 1:
            raise ValueError("n must be positive")
        if basis not in BASES:
            raise ValueError("basis must be one of %s, got %r" % (BASES, basis))
        coeffs = tuple(float(c) for c in coeffs)
        if len(coeffs) != n + 1:
            raise ValueError("need n+1=%d coefficients, got %d" % (n + 1, len(coeffs)))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "coeffs", coeffs)
        # exact rational values behind the floats, kept so chained conversions lose nothing
        object.__setattr__(self, "_exact", _exact)
        if tol is not None:
            self.validate(tol)

    def _values(self):
        """Coefficients to compute with: exact fractions for small n, floats otherwise."""
        if self.n > EXACT_MAX_N:
            return self.coeffs
        if self._exact is None:
            object.__setattr__(self, "_exact", tuple(Fraction(c) for c in self.coeffs))
        return self._exact

    def validate(self, tol: float = DEFAULT_TOL):
        c = np.asarray(self.coeffs)
        if self.basis == "P":
            if c.min() < -tol:
                raise InvalidDistributionError("negative probability %g" % c.min())
            total = math.fsum(binom(self.n, k) * c[k] for k in range(self.n + 1))
            if abs(total - 1.0) > tol:
                raise InvalidDistributionError("probabilities sum to %r, not 1" % total)
        elif self.basis == "F":
            if c[0] < -tol or abs(c[-1] - 1.0) > tol or np.any(np.diff(c) < -tol):
                raise InvalidDistributionError("F coefficients must rise from >=0 to F_n=1")
        else:
            if abs(c[0] - 1.0) > tol or c[-1] < -tol or np.any(np.diff(c) > tol):
                raise InvalidDistributionError("G coefficients must fall from G_0=1 to >=0")

    def __getitem__(self, k: int) -> float:
        return self.coeffs[k]

    def __repr__(self):
        return "IsotropicDistribution(n=%d, basis=%r)" % (self.n, self.basis)

    # -- conversions -------------------------------------------------------

    def to_basis(self, target: str, tol: float | None = None) -> "IsotropicDistribution":
        if target not in BASES:
            raise ValueError("unknown basis %r" % target)
        if target == self.basis:
            return self
        n = self.n
        if self.basis != "P":
            _warn_unstable(n)
        if target == "F":
            vals = [self._F(a) for a in range(n + 1)]
        elif target == "G":
            vals = [self._G(m) for m in range(n + 1)]
        else:
            vals = [self._P(m) for m in range(n + 1)]
        exact = tuple(vals) if n <= EXACT_MAX_N else None
        return IsotropicDistribution(n, target, [float(v) for v in vals], tol=tol, _exact=exact)

    def _P(self, m):
        n, c = self.n, self._values()
        if self.basis == "P":
            return c[m]
        if self.basis == "F":
            return _sum((-1) ** (m + k) * math.comb(m, k) * c[k] for k in range(m + 1))
        return _sum((-1) ** (k - m) * math.comb(n - m, k - m) * c[k] for k in range(m, n + 1))

    def _F(self, a):
        n, c = self.n, self._values()
        if self.basis == "F":
            return c[a]
        if self.basis == "P":
            return _sum(_comb(a, k, n) * c[k] for k in range(a + 1))
        # F_a = sum_k (-1)^k C(n-a, k) G_k, the dual of the G-from-F identity
        return _sum((-1) ** k * math.comb(n - a, k) * c[k] for k in range(n - a + 1))

    def _G(self, m):
        n, c = self.n, self._values()
        if self.basis == "G":
            return c[m]
        if self.basis == "P":
            return _sum(_comb(n - m, k - m, n) * c[k] for k in range(m, n + 1))
        # only m + 1 terms are needed from F
        return _sum((-1) ** k * math.comb(m, k) * c[n - k] for k in range(m + 1))

    def F(self, a: int) -> float:
        """Single F coefficient, computed directly from the stored basis."""
        if self.basis == "F":
            return self.coeffs[a]
        return float(self._F(a))

    def G(self, m: int) -> float:
        """Single G coefficient, computed directly from the stored basis."""
        if self.basis == "G":
            return self.coeffs[m]
        return float(self._G(m))

    def complement(self) -> "IsotropicDistribution":
        """Distribution of the bitwise complement; swaps the roles of F and G."""
        basis = {"P": "P", "F": "G", "G": "F"}[self.basis]
        exact = self._exact[::-1] if self._exact is not None else None
        return IsotropicDistribution(self.n, basis, self.coeffs[::-1], tol=None, _exact=exact)

    # -- generating functions ---------------------------------------------

    def f(self, t: float) -> float:
        return _poly(self.n, self.to_basis("P")._values(), t)

    def F_gf(self, t: float) -> float:
        return _poly(self.n, self.to_basis("F")._values(), t)

    def G_gf(self, t: float) -> float:
        return _poly(self.n, self.to_basis("G")._values()[::-1], t)

    # -- moments -----------------------------------------------------------

    def raw_moment(self, m: int) -> float:
        """E[weight^m] from the Taylor coefficients of f at 1.

        f(1 + e) = sum_k C(n, k) G_k e^k gives the factorial moments
        k! C(n, k) G_k; Stirling numbers of the second kind turn those into
        raw moments.
        """
        n = self.n
        return math.fsum(stirling2(m, k) * math.factorial(k) * binom(n, k) * self.G(k)
                         for k in range(1, min(m, n) + 1))

    def moments(self) -> MomentSet:
        mu1, mu2, mu3 = (self.raw_moment(m) for m in (1, 2, 3))
        return MomentSet(mu1, mu2, mu3, mu2 - mu1 * mu1)

    def weight_pmf(self) -> np.ndarray:
        """Probability of each total weight 0..n, i.e. C(n, k) p_k."""
        p = np.asarray(self.to_basis("P").coeffs)
        return np.array([binom(self.n, k) for k in range(self.n + 1)]) * p


def _comb(n, k, size):
    # integer binomials keep the exact path exact; floats beyond it avoid huge ints
    return math.comb(n, k) if size <= EXACT_MAX_N else binom(n, k)


def _sum(terms):
    terms = list(terms)
    if terms and isinstance(terms[0], float):
        return math.fsum(terms)
    return sum(terms)


def _poly(n, coeffs, t):
    """sum_k C(n, k) c_k t^k; negative t cancels badly, so small n is summed exactly."""
    if n <= EXACT_MAX_N:
        ft = Fraction(t)
        return float(sum(math.comb(n, k) * c * ft ** k for k, c in enumerate(coeffs)))
    return math.fsum(binom(n, k) * c * t ** k for k, c in enumerate(coeffs))


def _warn_unstable(n):
    if n > EXACT_MAX_N:
        warnings.warn("alternating-sign basis conversion at n=%d > %d is numerically unreliable"
                      % (n, EXACT_MAX_N), RuntimeWarning, stacklevel=3)


def from_binomial(n: int, q: float) -> IsotropicDistribution:
    """Each bit set independently with probability ``1 - q``: F_m = q^(n-m)."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1], got %r" % q)
    return IsotropicDistribution(n, "F", [q ** (n - m) for m in range(n + 1)])


def from_fixed_weight(n: int, w: int) -> IsotropicDistribution:
    """Uniform over the weight-``w`` patterns: F_m = C(n-w, n-m) / C(n, m)."""
    if not 0 <= w <= n:
        raise ValueError("w must lie in [0, %d], got %r" % (n, w))
    return IsotropicDistribution(n, "F", [fixed_weight_F(n, w, m) for m in range(n + 1)])


def fixed_weight_F(n: int, w: int, m: int) -> float:
    if m < w:
        return 0.0
    # ratio of falling factorials, stable for large n
    out = 1.0
    for i in range(w):
        out *= (m - i) / (n - i)
    return out


def to_basis(d: IsotropicDistribution, target: str) -> IsotropicDistribution:
    return d.to_basis(target)


def gf_f(d: IsotropicDistribution, t: float) -> float:
    return d.f(t)


def gf_F(d: IsotropicDistribution, t: float) -> float:
    return d.F_gf(t)


def gf_G(d: IsotropicDistribution, t: float) -> float:
    return d.G_gf(t)


def moments(d: IsotropicDistribution) -> MomentSet:
    return d.moments()
