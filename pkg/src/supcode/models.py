"""Source-bit models and design reports shared by analysis, optimizer and simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .isotropic import MomentSet, binom

HIST_TOL = 1e-9


@dataclass(frozen=True)
class SourceModel:
    """Statistics of the source bit patterns (length ``N``).

    ``kind`` is one of ``"fixed"`` (exactly ``r`` bits set, uniformly placed),
    ``"independent"`` (bit ``j`` set with probability ``p[j]``) or
    ``"empirical"`` (weight drawn from ``hist``, then a uniform pattern of
    that weight).
    """

    N: int
    kind: str
    r: Optional[int] = None
    p: Optional[tuple] = None
    hist: Optional[tuple] = None

    @classmethod
    def fixed_weight(cls, N: int, r: int) -> "SourceModel":
        if N < 1 or not 0 <= r <= N:
            raise ValueError("need 0 <= r <= N, got r=%r N=%r" % (r, N))
        return cls(N, "fixed", r=int(r))

    @classmethod
    def independent(cls, p: Sequence[float]) -> "SourceModel":
        p = tuple(float(x) for x in p)
        if not p:
            raise ValueError("need at least one bit probability")
        if any(not 0.0 <= x <= 1.0 for x in p):
            raise ValueError("bit probabilities must lie in [0, 1]")
        return cls(len(p), "independent", p=p)

    @classmethod
    def empirical(cls, N: int, hist) -> "SourceModel":
        """``hist`` maps weight -> probability (a dict or a length N+1 sequence)."""
        if isinstance(hist, Mapping):
            arr = [0.0] * (N + 1)
            for k, v in hist.items():
                if not 0 <= int(k) <= N:
                    raise ValueError("histogram weight %r outside [0, %d]" % (k, N))
                arr[int(k)] += float(v)
        else:
            arr = [float(v) for v in hist]
            if len(arr) != N + 1:
                raise ValueError("histogram needs N+1=%d entries" % (N + 1))
        if min(arr) < 0 or abs(math.fsum(arr) - 1.0) > HIST_TOL:
            raise ValueError("histogram must be non-negative and sum to 1")
        return cls(N, "empirical", hist=tuple(arr))

    @classmethod
    def from_pattern_distribution(cls, N: int, probs: Mapping[int, float]) -> "SourceModel":
        """Isotropic projection of an arbitrary distribution over source patterns.

        ``probs`` maps a pattern (as an int bit mask) to its probability; only
        the weight histogram survives, which is all the generating function needs.
        """
        hist = [0.0] * (N + 1)
        for bits, pr in probs.items():
            hist[int(bits).bit_count()] += pr
        return cls.empirical(N, hist)

    def gf(self, t: float) -> float:
        """Generating function of the source weight, sum_beta P(beta) t^|beta|."""
        if self.kind == "fixed":
            return t ** self.r
        if self.kind == "independent":
            if self.N > 64 and t >= 0:
                return math.exp(math.fsum(math.log1p(pj * (t - 1.0)) if pj * (1.0 - t) < 1.0
                                          else -math.inf for pj in self.p))
            return math.prod(1.0 - pj + pj * t for pj in self.p)
        return math.fsum(h * t ** k for k, h in enumerate(self.hist) if h)

    def weight_pmf(self) -> np.ndarray:
        if self.kind == "fixed":
            out = np.zeros(self.N + 1)
            out[self.r] = 1.0
            return out
        if self.kind == "empirical":
            return np.array(self.hist)
        out = np.zeros(self.N + 1)
        out[0] = 1.0
        for j, pj in enumerate(self.p):
            out[1:j + 2] = out[1:j + 2] * (1.0 - pj) + out[:j + 1] * pj
            out[0] *= 1.0 - pj
        return out

    def moments(self) -> MomentSet:
        if self.kind == "fixed":
            r = float(self.r)
            return MomentSet(r, r * r, r ** 3, 0.0)
        pmf = self.weight_pmf()
        k = np.arange(self.N + 1, dtype=float)
        mu1, mu2, mu3 = (math.fsum(pmf * k ** m) for m in (1, 2, 3))
        return MomentSet(mu1, mu2, mu3, mu2 - mu1 * mu1)

    def pattern_probability(self, bits: int) -> float:
        w = bits.bit_count()
        if self.kind == "fixed":
            return 1.0 / binom(self.N, self.r) if w == self.r else 0.0
        if self.kind == "empirical":
            return self.hist[w] / binom(self.N, w)
        return math.prod(pj if bits >> j & 1 else 1.0 - pj for j, pj in enumerate(self.p))


@dataclass
class DesignReport:
    """Predicted behaviour of one coding design.

    ``theta`` is the expected fraction of records a random query selects by
    chance (false drops); ``approximation`` marks values that come from an
    asymptotic formula rather than an exact one.
    """

    n: int
    q: float
    w: Optional[int] = None
    theta: Optional[float] = None
    log_theta: Optional[float] = None
    target_mean: Optional[float] = None
    target_variance: Optional[float] = None
    approximation: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.theta is not None and not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1], got %r" % self.theta)
