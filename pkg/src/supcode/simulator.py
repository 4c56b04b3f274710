"""Monte Carlo and exact-enumeration checks of the analytic predictions.

Every trial ``t`` owns the stream state ``derive_state(seed ^ TRIAL_SALT, t)``.
Within a trial the record pattern uses that stream from output 0, the query
pattern (false-drop runs) from output ``QUERY_OFFSET``. In regenerate mode the
trial's codebook is ``build_codebook(specs, seed=trial_state)``, so code word
``j`` comes from ``derive_state(trial_state, j)`` and a bit shared by record
and query gets the same word. Trials are processed in chunks with numpy; the
chunk size never changes the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .analysis import (
    false_drop_binomial, false_drop_exact, false_drop_fixed_weight, target_F, target_weight_pmf,
)
from .bitkit import BitPattern
from .codegen import (
    CodeSpec, SplitMix64, build_codebook, derive_state_array, fisher_yates_batch,
    fisher_yates_positions, spec_coefficients, stream_float,
)
from .isotropic import IsotropicDistribution
from .models import SourceModel

TRIAL_SALT = 0x243F6A8885A308D3
QUERY_OFFSET = 1 << 32
MAX_ENUM_N = 20
Z_FAIL = 4.0

_CELL_BUDGET = 1 << 23


@dataclass
class SimConfig:
    trials: int
    seed: int
    source: SourceModel
    specs: Union[CodeSpec, Sequence[CodeSpec]]
    regenerate_codebook: bool = True
    masks: Optional[Sequence[BitPattern]] = None
    chunk_size: int = 8192

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if isinstance(self.specs, CodeSpec):
            self.specs = (self.specs,) * self.source.N
        self.specs = tuple(self.specs)
        if len(self.specs) != self.source.N:
            raise ValueError("need one code spec per source bit (%d), got %d"
                             % (self.source.N, len(self.specs)))
        if any(s.n != self.specs[0].n for s in self.specs):
            raise ValueError("code specs must share n")

    @property
    def n(self) -> int:
        return self.specs[0].n


@dataclass
class Comparison:
    name: str
    predicted: float
    observed: float
    se: float

    @property
    def z(self) -> float:
        diff = self.observed - self.predicted
        if self.se > 0:
            return diff / self.se
        return 0.0 if abs(diff) <= 1e-12 else math.copysign(math.inf, diff)


@dataclass
class SimResult:
    trials: int
    weight_hist: dict
    mean: float
    variance: float
    empirical_G1: float
    G1_se: float
    empirical_theta: Optional[float] = None
    theta_se: Optional[float] = None
    comparisons: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def failures(self, threshold: float = Z_FAIL) -> list:
        return [c for c in self.comparisons if not abs(c.z) <= threshold]


# -- sampling ------------------------------------------------------------------

def sample_source(model: SourceModel, rng: SplitMix64) -> BitPattern:
    N = model.N
    if model.kind == "fixed":
        return BitPattern.from_positions(N, fisher_yates_positions(rng, N, model.r))
    if model.kind == "independent":
        return BitPattern.from_positions(N, [j for j, pj in enumerate(model.p) if rng.next_float() < pj])
    w = _weight_from_uniform(model, rng.next_float())
    return BitPattern.from_positions(N, fisher_yates_positions(rng, N, w))


def _cdf(model):
    cdf = np.cumsum(model.hist)
    cdf[-1] = max(cdf[-1], 1.0)
    return cdf


def _weight_from_uniform(model, u):
    return int(np.searchsorted(_cdf(model), u, side="right"))


def source_positions_batch(model: SourceModel, states: np.ndarray, offset: int = 0) -> np.ndarray:
    """Vectorised :func:`sample_source`: (T, k) set positions, padded with -1."""
    N = model.N
    t = states.shape[0]
    if model.kind == "fixed":
        return fisher_yates_batch(states, N, model.r, offset)
    if model.kind == "independent":
        u = stream_float(states[:, None], offset + np.arange(N)[None, :])
        hit = u < np.asarray(model.p)[None, :]
        k = hit.sum(axis=1)
        out = np.full((t, int(k.max()) if t else 0), -1, dtype=np.int64)
        rows, cols = np.nonzero(hit)
        slot = np.arange(rows.size) - np.repeat(np.cumsum(k) - k, k)
        out[rows, slot] = cols
        return out
    u = stream_float(states, offset)
    w = np.searchsorted(_cdf(model), u, side="right").astype(np.int64)
    return fisher_yates_batch(states, N, w, offset + 1)


def trial_states(seed: int, start: int, stop: int) -> np.ndarray:
    return derive_state_array(np.uint64((seed ^ TRIAL_SALT) & ((1 << 64) - 1)), np.arange(start, stop))


def _words_for(states, j, is_fixed, params, n):
    # code word of source bit j[i] drawn from stream states[i]
    m = states.shape[0]
    out = np.zeros((m, n), dtype=bool)
    fx = is_fixed[j]
    idx = np.flatnonzero(fx)
    if idx.size:
        pos = fisher_yates_batch(states[idx], n, params[j[idx]].astype(np.int64))
        r, c = np.nonzero(pos >= 0)
        out[idx[r], pos[r, c]] = True
    idx = np.flatnonzero(~fx)
    if idx.size:
        u = stream_float(states[idx][:, None], np.arange(n)[None, :])
        out[idx] = u < (1.0 - params[j[idx]])[:, None]
    return out


class _Encoder:
    """Turns padded source positions into signatures for one configuration."""

    def __init__(self, cfg: SimConfig):
        self.n = cfg.n
        self.regenerate = cfg.regenerate_codebook
        self.is_fixed = np.array([s.kind == "fixed" for s in cfg.specs])
        self.params = np.array([s.param for s in cfg.specs], dtype=float)
        if not self.regenerate:
            book = build_codebook(cfg.specs, cfg.seed)
            self.codebook = book
            self.words = book.as_array()

    def encode(self, states, pos):
        t = pos.shape[0]
        rows, cols = np.nonzero(pos >= 0)
        j = pos[rows, cols]
        if self.regenerate:
            words = _words_for(derive_state_array(states[rows], j), j, self.is_fixed, self.params, self.n)
        else:
            words = self.words[j]
        out = np.zeros((t, self.n), dtype=bool)
        if rows.size:
            starts = np.flatnonzero(np.r_[True, rows[1:] != rows[:-1]])
            out[rows[starts]] = np.logical_or.reduceat(words, starts, axis=0)
        return out


def _chunks(cfg: SimConfig, width: int):
    size = max(64, min(cfg.chunk_size, _CELL_BUDGET // max(width, 1)))
    for start in range(0, cfg.trials, size):
        stop = min(cfg.trials, start + size)
        yield trial_states(cfg.seed, start, stop)


def _mean_weight(model: SourceModel) -> float:
    return model.moments().mu1


def _default_masks(n):
    masks = [BitPattern.from_positions(n, range(n - 1))]
    if n >= 2:
        masks.append(BitPattern.from_positions(n, range(n - 2)))
    if n >= 4:
        masks.append(BitPattern.from_positions(n, range(n // 2)))
    return masks


def _mask_array(mask: BitPattern) -> np.ndarray:
    out = np.zeros(mask.length, dtype=bool)
    out[mask.positions()] = True
    return out


def _prop_se(p, t):
    return math.sqrt(max(p * (1.0 - p), 0.0) / t)


# -- experiments -------------------------------------------------------------------

def run_target_experiment(cfg: SimConfig) -> SimResult:
    """Empirical signature weights and cover probabilities against their predictions."""
    n = cfg.n
    masks = list(cfg.masks) if cfg.masks is not None else _default_masks(n)
    for m in masks:
        if m.length != n:
            raise ValueError("mask length %d does not match n=%d" % (m.length, n))
    mask_arrays = [~_mask_array(m) for m in masks]
    enc = _Encoder(cfg)
    counts = np.zeros(n + 1, dtype=np.int64)
    covered = np.zeros(len(masks), dtype=np.int64)
    width = int(math.ceil(_mean_weight(cfg.source) + 1)) * n + cfg.source.N
    for states in _chunks(cfg, width):
        sig = enc.encode(states, source_positions_batch(cfg.source, states))
        counts += np.bincount(sig.sum(axis=1), minlength=n + 1)
        for i, outside in enumerate(mask_arrays):
            covered[i] += int((~(sig & outside).any(axis=1)).sum())

    t = cfg.trials
    k = np.arange(n + 1, dtype=float)
    freq = counts / t
    mean = float(freq @ k)
    var = float(freq @ (k - mean) ** 2)
    m4 = float(freq @ (k - mean) ** 4)
    res = SimResult(trials=t, weight_hist={int(w): int(c) for w, c in enumerate(counts) if c},
                    mean=mean, variance=var, empirical_G1=mean / n,
                    G1_se=math.sqrt(var / t) / n)

    F = lambda a: target_F(cfg.source, cfg.specs, a)
    f1 = F(n - 1)
    f2 = F(n - 2) if n >= 2 else 0.0
    pred_mean = n * (1.0 - f1)
    pred_var = n * (f1 - n * f1 * f1 + (n - 1) * f2)
    res.comparisons.append(Comparison("mean_weight", pred_mean, mean, math.sqrt(max(pred_var, 0.0) / t)))
    res.comparisons.append(Comparison("G1", 1.0 - f1, mean / n, math.sqrt(max(pred_var, 0.0) / t) / n))
    res.comparisons.append(Comparison("variance", pred_var, var, math.sqrt(max(m4 - var * var, 0.0) / t)))
    for m, c in zip(masks, covered):
        fa = F(m.weight)
        res.comparisons.append(Comparison("F_%d" % m.weight, fa, float(c) / t, _prop_se(fa, t)))
    res.extra["predicted_variance"] = pred_var
    return res


def run_false_drop_experiment(cfg: SimConfig, query_model: SourceModel,
                              estimator: str = "pairs") -> SimResult:
    """Fraction of queries whose signature is covered by a record's signature.

    ``estimator="pairs"`` draws one record and one query per trial and counts
    covers. ``estimator="conditional"`` (fixed codebook only) draws records
    and averages exactly over the query distribution given the codebook,
    which reaches false-drop rates far below 1/trials. Both report all pairs,
    pairs whose sources do not match (query not a subset of the record), and
    pairs with disjoint source supports.
    """
    if query_model.N != cfg.source.N:
        raise ValueError("record and query models must share N")
    if estimator == "pairs":
        res = _false_drop_pairs(cfg, query_model)
    elif estimator == "conditional":
        if cfg.regenerate_codebook:
            raise ValueError("the conditional estimator needs a fixed codebook")
        res = _false_drop_conditional(cfg, query_model)
    else:
        raise ValueError("unknown estimator %r" % estimator)
    _add_theta_predictions(res, cfg, query_model)
    return res


def _false_drop_pairs(cfg, query_model):
    n = cfg.n
    enc = _Encoder(cfg)
    counts = np.zeros(n + 1, dtype=np.int64)
    cov = nonmatch = cov_nonmatch = disjoint = cov_disjoint = 0
    width = int(math.ceil(_mean_weight(cfg.source) + _mean_weight(query_model) + 2)) * n \
        + 2 * cfg.source.N
    for states in _chunks(cfg, width):
        rpos = source_positions_batch(cfg.source, states)
        qpos = source_positions_batch(query_model, states, QUERY_OFFSET)
        rsig = enc.encode(states, rpos)
        qsig = enc.encode(states, qpos)
        counts += np.bincount(rsig.sum(axis=1), minlength=n + 1)
        c = ~(qsig & ~rsig).any(axis=1)
        inside, shared = _membership(qpos, rpos)
        nm = ~inside
        dj = ~shared
        cov += int(c.sum())
        nonmatch += int(nm.sum())
        cov_nonmatch += int((c & nm).sum())
        disjoint += int(dj.sum())
        cov_disjoint += int((c & dj).sum())
    t = cfg.trials
    res = _base_result(counts, t, n)
    res.empirical_theta = cov / t
    res.theta_se = _prop_se(res.empirical_theta, t)
    res.extra.update(
        theta_nonmatch=cov_nonmatch / nonmatch if nonmatch else math.nan,
        theta_nonmatch_se=_prop_se(cov_nonmatch / nonmatch, nonmatch) if nonmatch else math.nan,
        theta_disjoint=cov_disjoint / disjoint if disjoint else math.nan,
        theta_disjoint_se=_prop_se(cov_disjoint / disjoint, disjoint) if disjoint else math.nan,
        nonmatching_pairs=nonmatch, disjoint_pairs=disjoint, estimator="pairs")
    return res


def _membership(qpos, rpos):
    """Per trial: is every query bit a record bit, and do they share any bit."""
    qv = qpos >= 0
    if qpos.shape[1] == 0 or rpos.shape[1] == 0:
        t = qpos.shape[0]
        return np.full(t, qpos.shape[1] == 0) | ~qv.any(axis=1), np.zeros(t, dtype=bool)
    hit = ((qpos[:, :, None] == rpos[:, None, :]) & (rpos[:, None, :] >= 0)).any(axis=2) & qv
    inside = (hit | ~qv).all(axis=1)
    return inside, hit.any(axis=1)


def _base_result(counts, t, n):
    k = np.arange(n + 1, dtype=float)
    freq = counts / t
    mean = float(freq @ k)
    var = float(freq @ (k - mean) ** 2)
    return SimResult(trials=t, weight_hist={int(w): int(c) for w, c in enumerate(counts) if c},
                     mean=mean, variance=var, empirical_G1=mean / n, G1_se=math.sqrt(var / t) / n)


def _subset_average(model: SourceModel, k: np.ndarray, N: int) -> np.ndarray:
    """For each entry of ``k``: P(random query pattern lies inside a fixed set of k source bits)."""
    pmf = model.weight_pmf()
    out = np.zeros(k.shape, dtype=float)
    for w in np.flatnonzero(pmf):
        out += pmf[w] * _comb_ratio(k, w, N)
    return out


def _comb_ratio(k, w, N):
    # C(k, w) / C(N, w) as a falling-factorial product
    out = np.ones(k.shape, dtype=float)
    for i in range(int(w)):
        out *= np.clip(k - i, 0, None) / (N - i)
    return out


def _false_drop_conditional(cfg, query_model):
    n, N = cfg.n, cfg.source.N
    enc = _Encoder(cfg)
    words = enc.words.astype(np.float32)
    counts = np.zeros(n + 1, dtype=np.int64)
    all_est, sub_est, dj_est = [], [], []
    width = int(math.ceil(_mean_weight(cfg.source) + 1)) * n + N + n
    for states in _chunks(cfg, width):
        rpos = source_positions_batch(cfg.source, states)
        rsig = enc.encode(states, rpos)
        counts += np.bincount(rsig.sum(axis=1), minlength=n + 1)
        # c[t, j]: code word j lies under record signature t
        c = (words @ (~rsig).T.astype(np.float32)).T == 0
        rweight = (rpos >= 0).sum(axis=1)
        if query_model.kind == "independent":
            p = np.asarray(query_model.p)
            in_rec = np.zeros((rpos.shape[0], N), dtype=bool)
            rr, cc = np.nonzero(rpos >= 0)
            in_rec[rr, rpos[rr, cc]] = True
            a = np.prod(np.where(c, 1.0, 1.0 - p[None, :]), axis=1)
            s = np.prod(np.where(in_rec, 1.0, 1.0 - p[None, :]), axis=1)
            all_est.append(a)
            sub_est.append(s)
            dj_est.append(a)
        else:
            k = c.sum(axis=1)
            all_est.append(_subset_average(query_model, k, N))
            sub_est.append(_subset_average(query_model, rweight, N))
            dj_est.append(_disjoint_average(query_model, k - rweight, N - rweight))
    t = cfg.trials
    a, s, d = (np.concatenate(x) for x in (all_est, sub_est, dj_est))
    res = _base_result(counts, t, n)
    res.empirical_theta = float(a.mean())
    res.theta_se = float(a.std(ddof=1) / math.sqrt(t)) if t > 1 else 0.0
    nm = 1.0 - float(s.mean())
    res.extra.update(
        theta_nonmatch=(res.empirical_theta - float(s.mean())) / nm if nm > 0 else math.nan,
        theta_nonmatch_se=float((a - s).std(ddof=1) / math.sqrt(t)) / nm if nm > 0 and t > 1 else math.nan,
        theta_disjoint=float(d.mean()),
        theta_disjoint_se=float(d.std(ddof=1) / math.sqrt(t)) if t > 1 else 0.0,
        estimator="conditional")
    return res


def _disjoint_average(model, k, m):
    # query drawn uniformly among patterns avoiding the record's bits (m of them left)
    pmf = model.weight_pmf()
    out = np.zeros(k.shape, dtype=float)
    for w in np.flatnonzero(pmf):
        ratio = np.ones(k.shape, dtype=float)
        for i in range(int(w)):
            ratio *= np.clip(k - i, 0, None) / np.maximum(m - i, 1)
        out += pmf[w] * ratio
    return out


def _add_theta_predictions(res: SimResult, cfg: SimConfig, query_model: SourceModel):
    specs = cfg.specs
    uniform = all(s == specs[0] for s in specs)
    if not (uniform or (cfg.source.kind == "independent" and query_model.kind == "independent")):
        return
    rec = target_weight_pmf(cfg.source, specs)
    qry = target_weight_pmf(query_model, specs)
    theta = false_drop_exact(rec, qry)
    res.extra["theta_predicted"] = theta
    if res.extra.get("estimator") == "conditional":
        # rates this small are swamped by queries inside the record, so the
        # independent-coding prediction is checked on disjoint supports only
        res.comparisons.append(Comparison("theta_disjoint", theta, res.extra["theta_disjoint"],
                                          res.extra["theta_disjoint_se"]))
    else:
        res.comparisons.append(Comparison("theta", theta, res.empirical_theta,
                                          _prop_se(theta, cfg.trials)))
    if uniform and cfg.source.kind == "fixed" and query_model.kind == "fixed":
        spec, r, s = specs[0], cfg.source.r, query_model.r
        if spec.kind == "binomial":
            res.extra["theta_closed_form"] = false_drop_binomial(cfg.n, r, s, spec.param)
        elif spec.param >= 1:
            res.extra["theta_roberts"] = false_drop_fixed_weight(cfg.n, r, s, spec.param)


# -- exact enumeration -----------------------------------------------------------------

def exact_enumeration(source: Union[SourceModel, Mapping[int, float]], codes, N: Optional[int] = None
                      ) -> IsotropicDistribution:
    """Signature F coefficients by summing over every source pattern.

    ``source`` is a :class:`SourceModel` or an explicit mapping from pattern
    (int bit mask) to probability, in which case ``N`` must be given.
    ``codes`` is one code (spec or distribution) or one per source bit.
    """
    if isinstance(source, SourceModel):
        N = source.N
        prob = source.pattern_probability
    else:
        if N is None:
            raise ValueError("N is required with an explicit pattern distribution")
        table = dict(source)
        prob = lambda bits: table.get(bits, 0.0)
    if N > MAX_ENUM_N:
        raise ValueError("exact enumeration is limited to N <= %d" % MAX_ENUM_N)
    if isinstance(codes, (CodeSpec, IsotropicDistribution)):
        codes = [codes] * N
    codes = [c if isinstance(c, IsotropicDistribution) else spec_coefficients(c) for c in codes]
    if len(codes) != N:
        raise ValueError("need one code per source bit")
    n = codes[0].n
    probs = np.array([prob(b) for b in range(1 << N)])
    out = []
    for a in range(n + 1):
        prods = np.ones(1)
        for c in codes:
            prods = np.concatenate([prods, prods * c.F(a)])
        out.append(math.fsum(probs * prods))
    return IsotropicDistribution(n, "F", out, tol=1e-9)
