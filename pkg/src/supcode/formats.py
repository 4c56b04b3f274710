"""On-disk formats: record lists, signature files, codebooks, weight plans.

All binary integers are little-endian. Bit ``i`` of a packed pattern sits in
byte ``i // 8`` at bit ``i % 8`` (least significant first).

RecordFile (text)::

    N=<int>
    <ascending 0-based positions separated by single spaces>   # one line per record

SignatureFile::

    b"SIC1" | u32 n | u64 record_count | record_count * ceil(n/8) bytes

CodebookFile::

    b"SCB1" | u32 n | u32 N | u64 seed | N * (u8 kind, f64 param) | N * ceil(n/8) bytes

where kind 0 is fixed weight (param = w) and 1 is binomial (param = q).
"""

from __future__ import annotations

import struct
from typing import Iterable, Sequence

from .bitkit import BitPattern
from .codegen import Codebook, CodeSpec, build_codebook

SIG_MAGIC = b"SIC1"
CODEBOOK_MAGIC = b"SCB1"
_SIG_HEADER = struct.Struct("<4sIQ")
_CB_HEADER = struct.Struct("<4sIIQ")
_CB_SPEC = struct.Struct("<Bd")


class FormatError(ValueError):
    """Malformed or corrupted file."""


def _nbytes(n):
    return (n + 7) // 8


# -- records --------------------------------------------------------------------

def parse_record_line(line: str, N: int, where: str = "record") -> BitPattern:
    line = line.rstrip("\r\n")
    if not line:
        return BitPattern.zeros(N)
    try:
        pos = [int(tok) for tok in line.split(" ")]
    except ValueError:
        raise FormatError("%s: expected space-separated integers, got %r" % (where, line)) from None
    if any(b <= a for a, b in zip(pos, pos[1:])):
        raise FormatError("%s: positions must be strictly ascending" % where)
    if pos[0] < 0 or pos[-1] >= N:
        raise FormatError("%s: positions must lie in [0, %d)" % (where, N))
    return BitPattern.from_positions(N, pos)


def format_record(pattern: BitPattern) -> str:
    return " ".join(str(i) for i in pattern.positions())


def loads_records(text: str) -> tuple[int, list[BitPattern]]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].startswith("N="):
        raise FormatError("record file must start with a 'N=<int>' header")
    try:
        N = int(lines[0][2:])
    except ValueError:
        raise FormatError("bad header %r" % lines[0]) from None
    if N < 1:
        raise FormatError("N must be positive")
    return N, [parse_record_line(l, N, "line %d" % (i + 2)) for i, l in enumerate(lines[1:])]


def dumps_records(N: int, records: Iterable[BitPattern]) -> str:
    return "N=%d\n" % N + "".join(format_record(r) + "\n" for r in records)


def read_records(path) -> tuple[int, list[BitPattern]]:
    with open(path, encoding="utf-8") as fh:
        return loads_records(fh.read())


def write_records(path, N: int, records: Iterable[BitPattern]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_records(N, records))


# -- signatures -------------------------------------------------------------------

def dumps_signatures(n: int, signatures: Sequence[BitPattern]) -> bytes:
    parts = [_SIG_HEADER.pack(SIG_MAGIC, n, len(signatures))]
    for sig in signatures:
        if sig.length != n:
            raise ValueError("signature length %d != %d" % (sig.length, n))
        parts.append(sig.to_bytes())
    return b"".join(parts)


def loads_signatures(data: bytes) -> tuple[int, list[BitPattern]]:
    if len(data) < _SIG_HEADER.size:
        raise FormatError("signature file too short")
    magic, n, count = _SIG_HEADER.unpack_from(data)
    if magic != SIG_MAGIC:
        raise FormatError("not a signature file (magic %r)" % magic)
    if n < 1:
        raise FormatError("signature length must be positive")
    width = _nbytes(n)
    if len(data) != _SIG_HEADER.size + count * width:
        raise FormatError("signature file length does not match its header")
    off = _SIG_HEADER.size
    try:
        return n, [BitPattern.from_bytes(n, data[off + i * width: off + (i + 1) * width])
                   for i in range(count)]
    except ValueError as exc:
        raise FormatError("corrupt signature: %s" % exc) from None


def write_signatures(path, n: int, signatures: Sequence[BitPattern]):
    with open(path, "wb") as fh:
        fh.write(dumps_signatures(n, signatures))


def read_signatures(path) -> tuple[int, list[BitPattern]]:
    with open(path, "rb") as fh:
        return loads_signatures(fh.read())


# -- codebooks --------------------------------------------------------------------

def dumps_codebook(book: Codebook) -> bytes:
    parts = [_CB_HEADER.pack(CODEBOOK_MAGIC, book.n, book.N, book.seed)]
    for spec in book.specs:
        parts.append(_CB_SPEC.pack(0 if spec.kind == "fixed" else 1, float(spec.param)))
    parts.extend(w.to_bytes() for w in book.words)
    return b"".join(parts)


def loads_codebook(data: bytes, verify: bool = True) -> Codebook:
    """Parse a codebook; with ``verify`` the words are regenerated from seed and specs and compared."""
    if len(data) < _CB_HEADER.size:
        raise FormatError("codebook file too short")
    magic, n, N, seed = _CB_HEADER.unpack_from(data)
    if magic != CODEBOOK_MAGIC:
        raise FormatError("not a codebook file (magic %r)" % magic)
    width = _nbytes(n)
    if n < 1 or N < 1 or len(data) != _CB_HEADER.size + N * (_CB_SPEC.size + width):
        raise FormatError("codebook file length does not match its header")
    off = _CB_HEADER.size
    specs = []
    for j in range(N):
        kind, param = _CB_SPEC.unpack_from(data, off + j * _CB_SPEC.size)
        if kind not in (0, 1):
            raise FormatError("bit %d: unknown code kind %d" % (j, kind))
        try:
            specs.append(CodeSpec(n, ("fixed", "binomial")[kind], param))
        except ValueError as exc:
            raise FormatError("bit %d: %s" % (j, exc)) from None
    off += N * _CB_SPEC.size
    try:
        words = tuple(BitPattern.from_bytes(n, data[off + j * width: off + (j + 1) * width])
                      for j in range(N))
    except ValueError as exc:
        raise FormatError("corrupt code word: %s" % exc) from None
    book = Codebook(n, N, words, tuple(specs), seed)
    if verify and build_codebook(specs, seed).words != words:
        raise FormatError("stored code words do not match their seed and specs")
    return book


def write_codebook(path, book: Codebook):
    with open(path, "wb") as fh:
        fh.write(dumps_codebook(book))


def read_codebook(path, verify: bool = True) -> Codebook:
    with open(path, "rb") as fh:
        return loads_codebook(fh.read(), verify)


# -- weight plans and frequency lists ------------------------------------------------

def dumps_weight_plan(n: int, weights: Sequence[int], seed: int | None = None) -> str:
    head = "n=%d\n" % n + ("seed=%d\n" % seed if seed is not None else "")
    return head + "".join("%d\n" % w for w in weights)


def loads_weight_plan(text: str) -> tuple[int, list[int], int | None]:
    n = seed = None
    weights = []
    for i, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("n="):
            n = int(line[2:])
        elif line.startswith("seed="):
            seed = int(line[5:])
        else:
            try:
                weights.append(int(line))
            except ValueError:
                raise FormatError("weight plan line %d: not an integer: %r" % (i, line)) from None
    if n is None:
        raise FormatError("weight plan lacks an 'n=<int>' header")
    return n, weights, seed


def loads_frequencies(text: str) -> list[float]:
    """One probability per non-empty line; raises ValueError naming the line."""
    out = []
    for i, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            p = float(line)
        except ValueError:
            raise ValueError("line %d: not a number: %r" % (i, line)) from None
        if not 0.0 <= p < 1.0:
            raise ValueError("line %d: probability %r outside [0, 1)" % (i, p))
        out.append(p)
    if not out:
        raise ValueError("no probabilities given")
    return out


def loads_histogram(text: str) -> dict[int, float]:
    """``<weight> <probability>`` per line."""
    hist = {}
    for i, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            k, v = line.split()
            hist[int(k)] = hist.get(int(k), 0.0) + float(v)
        except ValueError:
            raise ValueError("line %d: expected '<weight> <probability>'" % i) from None
    return hist
