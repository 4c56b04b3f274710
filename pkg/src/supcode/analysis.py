"""Target-signature distributions and false-drop predictions.

The central fact: if every source bit is coded with the same code word
distribution (coefficients ``F_m``), the signatures are isotropic with
coefficients ``Pi(F_m)``, where ``Pi`` is the generating function of the
source weight. Everything else here is built on top of that, plus an exact
weight-chain computation (adding one random code word at a time) used where
the full signature weight distribution is needed at large ``n``.
"""

from __future__ import annotations

import math
from typing import Sequence, Union

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .codegen import CodeSpec
from .isotropic import IsotropicDistribution, MomentSet, fixed_weight_F, from_binomial, from_fixed_weight
from .models import DesignReport, SourceModel

LN2 = math.log(2.0)

Codes = Union[IsotropicDistribution, CodeSpec, Sequence[CodeSpec], Sequence[IsotropicDistribution]]


def source_gf(model: SourceModel, t: float) -> float:
    return model.gf(t)


def target_distribution(model: SourceModel, code: IsotropicDistribution) -> IsotropicDistribution:
    """Signature distribution for uniform coding: F-basis with coefficients Pi(F_m)."""
    return IsotropicDistribution(code.n, "F", [model.gf(code.F(m)) for m in range(code.n + 1)])


def _moments_from_top_F(n, f1, f2, f3):
    # G_1..G_3 from F_{n-1}, F_{n-2}, F_{n-3}; then raw moments via factorial moments
    g1 = 1.0 - f1
    g2 = 1.0 - 2.0 * f1 + f2
    g3 = 1.0 - 3.0 * f1 + 3.0 * f2 - f3
    mu1 = n * g1
    mu2 = n * ((n - 1) * g2 + g1)
    mu3 = n * g1 + 3.0 * n * (n - 1) * g2 + n * (n - 1) * (n - 2) * g3
    var = n * (f1 - n * f1 * f1 + (n - 1) * f2)
    return MomentSet(mu1, mu2, mu3, var)


def target_moments(model: SourceModel, code: IsotropicDistribution) -> MomentSet:
    n = code.n
    top = [model.gf(code.F(n - k)) if n - k >= 0 else 0.0 for k in (1, 2, 3)]
    return _moments_from_top_F(n, *top)


def moments_from_target_F(n: int, target_F) -> MomentSet:
    """Moments of a signature distribution given a callable ``a -> F_a``."""
    return _moments_from_top_F(n, *(target_F(n - k) if n - k >= 0 else 0.0 for k in (1, 2, 3)))


# -- general (per-bit) coefficients ----------------------------------------

def _as_code_list(codes, N):
    if isinstance(codes, (IsotropicDistribution, CodeSpec)):
        return [codes] * N
    codes = list(codes)
    if len(codes) != N:
        raise ValueError("need one code per source bit: %d codes for N=%d" % (len(codes), N))
    return codes


def _code_F(code, a):
    if isinstance(code, CodeSpec):
        if code.kind == "fixed":
            return fixed_weight_F(code.n, code.param, a)
        return code.param ** (code.n - a)
    return code.F(a)


def _uniform(codes):
    return all(c == codes[0] for c in codes)


def target_F(model: SourceModel, codes: Codes, a: int) -> float:
    """F coefficient of the signature distribution for any source model and code assignment.

    Uniform codes use Pi(F_a); independent sources use the per-bit product;
    otherwise the source is exchangeable given its weight and the average of
    products over weight-w subsets is accumulated by a normalised
    elementary-symmetric recursion.
    """
    codes = _as_code_list(codes, model.N)
    if _uniform(codes):
        return model.gf(_code_F(codes[0], a))
    xs = [_code_F(c, a) for c in codes]
    if model.kind == "independent":
        from .optimizer import independent_target_F
        return independent_target_F(model.p, xs)
    pmf = model.weight_pmf()
    wmax = int(np.flatnonzero(pmf).max())
    # e[w] = mean over w-subsets of the first j bits of prod x
    e = np.zeros(wmax + 1)
    e[0] = 1.0
    for j, x in enumerate(xs, start=1):
        top = min(j, wmax)
        w = np.arange(1, top + 1)
        e[1:top + 1] = (j - w) / j * e[1:top + 1] + w / j * x * e[:top]
    return float(np.dot(pmf[:wmax + 1], e))


def target_coefficients(model: SourceModel, codes: Codes) -> IsotropicDistribution:
    codes = _as_code_list(codes, model.N)
    n = codes[0].n
    return IsotropicDistribution(n, "F", [target_F(model, codes, a) for a in range(n + 1)])


# -- exact signature weight distribution -------------------------------------

def _transition(spec: CodeSpec) -> np.ndarray:
    """T[a, b] = P(weight b after OR-ing one code word into a weight-a signature)."""
    n = spec.n
    a = np.arange(n + 1)[:, None]
    b = np.arange(n + 1)[None, :]
    k = b - a
    if spec.kind == "fixed":
        # k new bits: hypergeometric draw of w positions, n - a of them free
        pmf = stats.hypergeom.pmf(k, n, n - a, spec.param)
    else:
        pmf = stats.binom.pmf(k, n - a, 1.0 - spec.param)
    return np.where(k >= 0, np.nan_to_num(pmf), 0.0)


def target_weight_pmf(model: SourceModel, codes) -> np.ndarray:
    """Exact distribution of the signature weight, stable for large ``n``.

    ``codes`` is one :class:`CodeSpec` (uniform coding) or a per-bit list.
    Per-bit lists are only supported for independent sources.
    """
    codes = _as_code_list(codes, model.N)
    n = codes[0].n
    start = np.zeros(n + 1)
    start[0] = 1.0
    cache = {}

    def trans(spec):
        if spec not in cache:
            cache[spec] = _transition(spec)
        return cache[spec]

    if model.kind == "independent":
        v = start
        for pj, spec in zip(model.p, codes):
            if pj:
                v = (1.0 - pj) * v + pj * (v @ trans(spec))
        return v
    if not _uniform(codes):
        raise NotImplementedError("per-bit codes need an independent source model")
    T = trans(codes[0])
    pmf = model.weight_pmf()
    out = np.zeros(n + 1)
    v = start
    for w in range(int(np.flatnonzero(pmf).max()) + 1):
        if pmf[w]:
            out += pmf[w] * v
        v = v @ T
    return out


def cover_matrix(n: int) -> np.ndarray:
    """H[a, k] = C(a, k) / C(n, k): chance a fixed weight-a mask covers a random weight-k pattern."""
    a = np.arange(n + 1)[:, None].astype(float)
    k = np.arange(n + 1)[None, :].astype(float)
    with np.errstate(invalid="ignore"):
        logh = gammaln(a + 1) - gammaln(a - k + 1) - gammaln(n + 1) + gammaln(n - k + 1)
    return np.where(k <= a, np.exp(np.where(k <= a, logh, 0.0)), 0.0)


def false_drop_exact(record_pmf: np.ndarray, query_pmf: np.ndarray) -> float:
    """P(query signature <= record signature) for independent isotropic signatures."""
    n = len(record_pmf) - 1
    return float(record_pmf @ cover_matrix(n) @ query_pmf)


# -- closed forms for binomial and fixed-weight codes -------------------------

def log_false_drop_binomial(n: int, r: int, s: int, q: float) -> float:
    return n * math.log1p(-(q ** r) * (1.0 - q ** s))


def false_drop_binomial(n: int, r: int, s: int, q: float) -> float:
    """Expected false-drop fraction with binomial codes, record weight r, query weight s."""
    return math.exp(log_false_drop_binomial(n, r, s, q))


def optimal_q_binomial(r: int, s: int) -> float:
    if r < 1 or s < 1:
        raise ValueError("r and s must be positive")
    return (r / (r + s)) ** (1.0 / s)


def required_length(r: int, s_min: int, theta_max: float) -> int:
    """Asymptotic signature length keeping binomial false drops under ``theta_max`` (valid for r >> s)."""
    if not 0.0 < theta_max <= 1.0:
        raise ValueError("theta_max must lie in (0, 1], got %r" % theta_max)
    return math.ceil(r * math.e / s_min * abs(math.log(theta_max)))


def required_length_exact(r: int, s_min: int, theta_max: float) -> int:
    """Bump :func:`required_length` upward until the exact binomial rate at the optimal q meets ``theta_max``."""
    n = required_length(r, s_min, theta_max)
    q = optimal_q_binomial(r, s_min)
    limit = math.log(theta_max)
    per_bit = math.log1p(-(q ** r) * (1.0 - q ** s_min))
    # jump close to the answer, then walk; float rounding decides the last step
    n = max(n, math.ceil(limit / per_bit) - 1)
    while n * per_bit > limit:
        n += 1
    return n


def log_false_drop_fixed_weight(n: int, r: int, s: int, w: int) -> float:
    q = 1.0 - w / n
    if q == 0.0:
        return 0.0
    return n * (1.0 - q ** s) * math.log1p(-(q ** r))


def false_drop_fixed_weight(n: int, r: int, s: int, w: int) -> float:
    """Roberts' approximation (1 - q^r)^(n (1 - q^s)) with q = 1 - w/n."""
    if not 1 <= w <= n:
        raise ValueError("w must lie in [1, n]")
    return math.exp(log_false_drop_fixed_weight(n, r, s, w))


def roberts_optimal_weight(n: int, r: int) -> int:
    """Code weight putting q^r closest to 1/2."""
    return max(1, min(n, math.floor(n * (1.0 - 2.0 ** (-1.0 / r)) + 0.5)))


def fixed_weight_variance_asymptotic(n: int, r: int, q: float) -> float:
    qr = q ** r
    return n * qr * (1.0 - qr) * (1.0 - r * (1.0 - q) * q ** (r - 1) / (1.0 - qr))


def roberts_query_variance(n: int, r: int, s: int) -> float:
    """Rough query-signature variance at the Roberts optimum, n s^2 (ln 2)^2 / r^2."""
    return n * s * s * LN2 ** 2 / (r * r)


def expected_candidates(target: IsotropicDistribution, query_weight: int, db_size: int) -> float:
    if not 0 <= query_weight <= target.n:
        raise ValueError("query weight outside [0, %d]" % target.n)
    return db_size * target.G(query_weight)


# -- reports -------------------------------------------------------------------

def design_binomial(n: int, r: int, s: int, q: float | None = None) -> DesignReport:
    if q is None:
        q = optimal_q_binomial(r, s)
    src = SourceModel.fixed_weight(max(r, 1), r)
    mom = target_moments(src, from_binomial(n, q))
    lt = log_false_drop_binomial(n, r, s, q)
    return DesignReport(n=n, q=q, theta=math.exp(lt), log_theta=lt,
                        target_mean=mom.mu1, target_variance=mom.variance)


def design_fixed_weight(n: int, r: int, s: int, w: int | None = None) -> DesignReport:
    if w is None:
        w = roberts_optimal_weight(n, r)
    q = 1.0 - w / n
    src = SourceModel.fixed_weight(max(r, 1), r)
    mom = target_moments(src, from_fixed_weight(n, w))
    lt = log_false_drop_fixed_weight(n, r, s, w)
    rep = DesignReport(n=n, q=q, w=w, theta=math.exp(lt), log_theta=lt,
                       target_mean=mom.mu1, target_variance=mom.variance, approximation=True)
    # exact rate for independently coded record/query, from the weight chains
    spec = CodeSpec.fixed(n, w)
    rec = target_weight_pmf(SourceModel.fixed_weight(max(r, 1), r), spec)
    qry = target_weight_pmf(SourceModel.fixed_weight(max(s, 1), s), spec)
    rep.extra["theta_exact"] = false_drop_exact(rec, qry)
    return rep
