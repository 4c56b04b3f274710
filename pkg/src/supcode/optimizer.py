"""Choosing code parameters.

Two routes:

* independent, non-uniform source bits: per-bit fixed weights from a closed
  form that aims the signature at half-full (``optimal_weights_independent``);
* anything else: one shared fixed weight, found from the moments of the
  source weight by a short series, then refined exactly against the full
  weight histogram when it is known (``general_design``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

from scipy.optimize import brentq

from .analysis import target_moments
from .codegen import CodeSpec
from .isotropic import IsotropicDistribution, MomentSet, binom, from_fixed_weight
from .models import DesignReport, SourceModel

LN2 = math.log(2.0)


@dataclass(frozen=True)
class WeightPlan:
    n: int
    weights: tuple
    lambda_diag: float
    max_p: float = 0.0
    excluded: tuple = ()
    bound_violations: tuple = ()

    def specs(self) -> list[CodeSpec]:
        return [CodeSpec.fixed(self.n, w) for w in self.weights]


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def optimal_weights_independent(p: Sequence[float], n: int) -> WeightPlan:
    """Per-bit code weights for independent source bits with probabilities ``p``.

    w_j = n / (1 - p_j) * ln 2 / sum_k p_k / (1 - p_k), rounded half up and
    clamped to [1, n]. Bits with p_j <= 0 never fire; they get weight 0 and
    are reported in ``excluded``.
    """
    p = [float(x) for x in p]
    if n < 2:
        raise ValueError("n must be at least 2")
    for j, pj in enumerate(p):
        if pj >= 1.0:
            raise ValueError("bit %d has p=%r >= 1; an always-set bit carries no information" % (j, pj))
    excluded = tuple(j for j, pj in enumerate(p) if pj <= 0.0)
    if excluded:
        warnings.warn("%d bits with p <= 0 get weight 0" % len(excluded), RuntimeWarning, stacklevel=2)
    odds = math.fsum(pj / (1.0 - pj) for pj in p if pj > 0.0)
    if odds == 0.0:
        raise ValueError("no source bit has positive probability")
    weights, violations = [], []
    for j, pj in enumerate(p):
        if pj <= 0.0:
            weights.append(0)
            continue
        real = n / (1.0 - pj) * LN2 / odds
        if real > n - 1:
            # u_j would leave its admissible range [1 - (n-1) p_j / n, 1]
            violations.append(j)
        weights.append(min(n, max(1, _round_half_up(real))))
    if violations:
        warnings.warn("%d bits exceed the admissible weight n-1 and were clamped" % len(violations),
                      RuntimeWarning, stacklevel=2)
    return WeightPlan(n=n, weights=tuple(weights), lambda_diag=1.0 / n - 2.0 * LN2 / odds,
                      max_p=max(p), excluded=excluded, bound_violations=tuple(violations))


def independent_target_F(p: Sequence[float], code_F: Sequence[float]) -> float:
    """F_a of the signatures: prod_j (p_j F_a^(j) + 1 - p_j), given each bit's F_a^(j)."""
    return math.prod(pj * f + 1.0 - pj for pj, f in zip(p, code_F))


def independent_target_distribution(p: Sequence[float], codes: Sequence[IsotropicDistribution]) -> IsotropicDistribution:
    n = codes[0].n
    return IsotropicDistribution(
        n, "F", [independent_target_F(p, [c.F(a) for c in codes]) for a in range(n + 1)])


def plan_half_full(plan: WeightPlan, p: Sequence[float]) -> float:
    """Predicted F_{n-1} of the signatures under ``plan`` (0.5 means half-full on average)."""
    n = plan.n
    return independent_target_F(p, [(n - w) / n for w in plan.weights])


def isotropize(weight_hist, N: int) -> IsotropicDistribution:
    """Isotropic distribution on length-N patterns with the given weight histogram."""
    src = SourceModel.empirical(N, weight_hist)
    return IsotropicDistribution(N, "P", [h / binom(N, k) for k, h in enumerate(src.hist)])


def g1_series(moments: MomentSet, eps: float) -> float:
    """1 - Pi(exp(-eps)) to third order in eps."""
    return moments.mu1 * eps - moments.mu2 * eps ** 2 / 2.0 + moments.mu3 * eps ** 3 / 6.0


def solve_epsilon(moments: MomentSet, target_G1: float = 0.5) -> float:
    """Three-term series inversion of :func:`g1_series`; q = exp(-eps) makes the signature 1 - target_G1 empty."""
    m1, m2, m3 = moments.mu1, moments.mu2, moments.mu3
    if m1 <= 0:
        raise ValueError("mean source weight must be positive")
    if not 0.0 < target_G1 < 1.0:
        raise ValueError("target_G1 must lie in (0, 1)")
    g = target_G1
    return g / m1 + m2 * g ** 2 / (2 * m1 ** 3) + (3 * m2 ** 2 - m1 * m3) * g ** 3 / (6 * m1 ** 5)


def general_design(weight_hist, N: int, n: int, target_G1: float = 0.5,
                   refine: bool = True) -> tuple[CodeSpec, DesignReport]:
    """One shared fixed code weight for an arbitrary source weight histogram."""
    if n < 2:
        raise ValueError("n must be at least 2")
    src = SourceModel.empirical(N, weight_hist)
    if src.hist[0] >= 1.0 - 1e-12:
        raise ValueError("degenerate histogram: all mass at weight 0")
    mom = src.moments()
    eps = solve_epsilon(mom, target_G1)
    q_series = math.exp(-eps)
    goal = 1.0 - target_G1
    q = q_series
    if refine:
        if src.hist[0] < goal:
            q = brentq(lambda x: src.gf(x) - goal, 0.0, 1.0, xtol=1e-15, rtol=1e-15)
        else:
            warnings.warn("P(weight 0) >= %g; the target fill cannot be reached" % goal,
                          RuntimeWarning, stacklevel=2)
    w = min(n, max(1, _round_half_up(n * (1.0 - q))))
    spec = CodeSpec.fixed(n, w)
    tm = target_moments(src, from_fixed_weight(n, w))
    report = DesignReport(n=n, q=q, w=w, target_mean=tm.mu1, target_variance=tm.variance,
                          approximation=not refine)
    report.extra.update(epsilon=eps, q_series=q_series, pi_q=src.gf(q),
                        pi_q_series=src.gf(q_series), mu1=mom.mu1, mu2=mom.mu2, mu3=mom.mu3)
    return spec, report
