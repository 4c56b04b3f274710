"""Reproducible random code words and codebooks.

All randomness comes from SplitMix64 so a codebook is fully determined by its
specs and a 64-bit seed, in any language. Code word ``j`` of a codebook is
drawn from its own stream, seeded with ``derive_state(seed, j)``; that makes
generation order irrelevant.

SplitMix64 is counter based: output ``k`` of a stream with state ``s`` is
``mix(s + (k + 1) * GOLDEN)``. The ``*_batch`` functions exploit this to
generate many streams at once with numpy and produce exactly the same bits
as the scalar path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bitkit import BitPattern
from .isotropic import IsotropicDistribution, from_binomial, from_fixed_weight

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_M53 = 2.0 ** -53


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_state(seed: int, j: int) -> int:
    """Initial state of sub-stream ``j`` of ``seed``."""
    return mix64(seed ^ ((GOLDEN * (j + 1)) & MASK64))


class SplitMix64:
    def __init__(self, state: int):
        self.state = state & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def next_float(self) -> float:
        """Uniform in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * _TWO_M53

    def below(self, bound: int) -> int:
        if bound < 1:
            raise ValueError("bound must be positive")
        return self.next_u64() % bound


@dataclass(frozen=True)
class CodeSpec:
    """How one code word is drawn: ``kind`` is ``"fixed"`` (param = w) or ``"binomial"`` (param = q)."""

    n: int
    kind: str
    param: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.kind == "fixed":
            if self.param != int(self.param) or not 0 <= self.param <= self.n:
                raise ValueError("fixed weight must be an integer in [0, %d], got %r"
                                 % (self.n, self.param))
            object.__setattr__(self, "param", int(self.param))
        elif self.kind == "binomial":
            if not 0.0 < self.param < 1.0:
                raise ValueError("binomial q must lie in (0, 1), got %r" % self.param)
        else:
            raise ValueError("unknown code kind %r" % self.kind)

    @classmethod
    def fixed(cls, n: int, w: int) -> "CodeSpec":
        return cls(n, "fixed", w)

    @classmethod
    def binomial(cls, n: int, q: float) -> "CodeSpec":
        return cls(n, "binomial", float(q))

    @property
    def w(self) -> int:
        return self.param if self.kind == "fixed" else None

    @property
    def q(self) -> float:
        return self.param if self.kind == "binomial" else None


def spec_coefficients(spec: CodeSpec) -> IsotropicDistribution:
    if spec.kind == "fixed":
        return from_fixed_weight(spec.n, spec.param)
    return from_binomial(spec.n, spec.param)


def fisher_yates_positions(rng: SplitMix64, n: int, w: int) -> list[int]:
    """First ``w`` slots of a partial Fisher-Yates shuffle of ``0..n-1``.

    Slots are kept in a dict so the cost is O(w) regardless of ``n``.
    """
    slots = {}
    out = []
    for i in range(w):
        j = i + rng.below(n - i)
        vi, vj = slots.get(i, i), slots.get(j, j)
        slots[i], slots[j] = vj, vi
        out.append(vj)
    return out


def sample_codeword(spec: CodeSpec, rng: SplitMix64) -> BitPattern:
    n = spec.n
    if spec.kind == "fixed":
        return BitPattern.from_positions(n, fisher_yates_positions(rng, n, spec.param))
    threshold = 1.0 - spec.param
    bits = 0
    for i in range(n):
        if rng.next_float() < threshold:
            bits |= 1 << i
    return BitPattern(n, bits)


@dataclass(frozen=True)
class Codebook:
    n: int
    N: int
    words: tuple
    specs: tuple
    seed: int

    def __len__(self):
        return self.N

    def __getitem__(self, j):
        return self.words[j]

    @property
    def uniform(self) -> bool:
        return all(s == self.specs[0] for s in self.specs)

    def as_array(self) -> np.ndarray:
        """Boolean (N, n) matrix of the code words."""
        out = np.zeros((self.N, self.n), dtype=bool)
        for j, word in enumerate(self.words):
            out[j, word.positions()] = True
        return out


def build_codebook(specs: Sequence[CodeSpec], seed: int) -> Codebook:
    specs = tuple(specs)
    if not specs:
        raise ValueError("need at least one code spec")
    n = specs[0].n
    if any(s.n != n for s in specs):
        raise ValueError("all code specs must share n")
    seed &= MASK64
    words = tuple(sample_codeword(spec, SplitMix64(derive_state(seed, j)))
                  for j, spec in enumerate(specs))
    return Codebook(n, len(specs), words, specs, seed)


# -- vectorised streams ------------------------------------------------------

_U30, _U27, _U31, _U11 = (np.uint64(k) for k in (30, 27, 31, 11))


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    # uint64 products wrap modulo 2**64 on purpose
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U30)) * np.uint64(_M1)
        z = (z ^ (z >> _U27)) * np.uint64(_M2)
    return z ^ (z >> _U31)


def derive_state_array(seeds, j) -> np.ndarray:
    """Vectorised :func:`derive_state` (broadcasts ``seeds`` against ``j``)."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    j = np.asarray(j, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64_array(seeds ^ ((j + np.uint64(1)) * np.uint64(GOLDEN)))


def stream_u64(states, k) -> np.ndarray:
    """Output number ``k`` (0-based) of the streams with the given initial states."""
    states = np.asarray(states, dtype=np.uint64)
    k = np.asarray(k, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64_array(states + (k + np.uint64(1)) * np.uint64(GOLDEN))


def stream_float(states, k) -> np.ndarray:
    return (stream_u64(states, k) >> _U11).astype(np.float64) * _TWO_M53


def fisher_yates_batch(states, n: int, w, offset: int = 0) -> np.ndarray:
    """Partial Fisher-Yates for many streams at once.

    ``states`` has shape (M,), ``w`` is an int or an (M,) array of weights.
    Returns an (M, max w) int64 array of chosen positions, padded with -1.
    Draws start at stream output ``offset``. Bit-identical to
    :func:`fisher_yates_positions`.
    """
    states = np.asarray(states, dtype=np.uint64)
    m = states.shape[0]
    w = np.broadcast_to(np.asarray(w, dtype=np.int64), (m,))
    wmax = int(w.max()) if m else 0
    out = np.full((m, wmax), -1, dtype=np.int64)
    if wmax == 0:
        return out
    if n <= 4096:
        _fy_dense(states, n, w, wmax, offset, out)
    else:
        _fy_sparse(states, n, w, wmax, offset, out)
    return out


def _fy_dense(states, n, w, wmax, offset, out):
    m = states.shape[0]
    perm = np.tile(np.arange(n, dtype=np.int32 if n > 32767 else np.int16), (m, 1))
    rows = np.arange(m)
    for i in range(wmax):
        active = rows[w > i]
        if active.size == 0:
            break
        u = stream_u64(states[active], offset + i)
        j = (np.uint64(i) + u % np.uint64(n - i)).astype(np.int64)
        vi = perm[active, i].copy()
        vj = perm[active, j]
        perm[active, i] = vj
        perm[active, j] = vi
        out[active, i] = vj


def _fy_sparse(states, n, w, wmax, offset, out):
    # touched[:, k] is the slot written at step k (the swap target j_k) and
    # value[:, k] what was written there; slot i itself is never read again.
    m = states.shape[0]
    touched = np.full((m, wmax), -1, dtype=np.int64)
    value = np.zeros((m, wmax), dtype=np.int64)
    steps = np.arange(wmax)
    for i in range(wmax):
        active = w > i
        u = stream_u64(states, offset + i)
        j = (np.uint64(i) + u % np.uint64(n - i)).astype(np.int64)
        vj = _lookup(touched[:, :i], value[:, :i], steps[:i], j)
        vi = _lookup(touched[:, :i], value[:, :i], steps[:i], np.full(m, i))
        out[active, i] = vj[active]
        touched[active, i] = j[active]
        value[active, i] = vi[active]


def _lookup(touched, value, steps, slot):
    if touched.shape[1] == 0:
        return slot.copy()
    hit = touched == slot[:, None]
    last = np.where(hit, steps, -1).max(axis=1)
    found = last >= 0
    res = slot.copy()
    res[found] = value[found, last[found]]
    return res


def codewords_batch(states, specs: Sequence[CodeSpec]) -> np.ndarray:
    """Code words for many (stream state, spec) pairs as a boolean (M, n) array.

    Row ``i`` equals ``sample_codeword(specs[i], SplitMix64(states[i]))``.
    """
    states = np.asarray(states, dtype=np.uint64)
    m = states.shape[0]
    if m == 0:
        return np.zeros((0, 0), dtype=bool)
    n = specs[0].n
    out = np.zeros((m, n), dtype=bool)
    kinds = np.array([s.kind == "fixed" for s in specs], dtype=bool)
    params = np.array([s.param for s in specs], dtype=np.float64)

    fixed = np.flatnonzero(kinds)
    if fixed.size:
        pos = fisher_yates_batch(states[fixed], n, params[fixed].astype(np.int64))
        r, c = np.nonzero(pos >= 0)
        out[fixed[r], pos[r, c]] = True
    binom = np.flatnonzero(~kinds)
    if binom.size:
        u = stream_float(states[binom][:, None], np.arange(n)[None, :])
        out[binom] = u < (1.0 - params[binom])[:, None]
    return out
