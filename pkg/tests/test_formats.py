import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supcode import formats
from supcode.bitkit import BitPattern
from supcode.codegen import CodeSpec, build_codebook
from supcode.formats import FormatError


def test_records_roundtrip(tmp_path):
    recs = [BitPattern.from_positions(8, p) for p in ([0, 3], [], [7], list(range(8)))]
    text = formats.dumps_records(8, recs)
    assert text == "N=8\n0 3\n\n7\n0 1 2 3 4 5 6 7\n"
    assert formats.loads_records(text) == (8, recs)
    formats.write_records(tmp_path / "r.txt", 8, recs)
    assert formats.read_records(tmp_path / "r.txt") == (8, recs)


@pytest.mark.parametrize("text", [
    "0 1\n", "N=x\n", "N=0\n", "N=4\n1 0\n", "N=4\n1 1\n", "N=4\n4\n", "N=4\n-1\n", "N=4\n1  2\n", "N=4\na\n",
])
def test_records_reject_bad_input(text):
    with pytest.raises(FormatError):
        formats.loads_records(text)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 100).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.integers(0, (1 << n) - 1), max_size=20))))
def test_signatures_roundtrip(args):
    n, ints = args
    sigs = [BitPattern(n, b) for b in ints]
    blob = formats.dumps_signatures(n, sigs)
    assert len(blob) == 16 + len(sigs) * ((n + 7) // 8)
    assert struct.unpack_from("<4sIQ", blob) == (b"SIC1", n, len(sigs))
    assert formats.loads_signatures(blob) == (n, sigs)


def test_signature_errors():
    good = formats.dumps_signatures(12, [BitPattern(12, 0xABC)])
    for bad in (good[:10], b"XXXX" + good[4:], good + b"\0", good[:-1] + b"\xff",
                struct.pack("<4sIQ", b"SIC1", 0, 0)):
        with pytest.raises(FormatError):
            formats.loads_signatures(bad)
    with pytest.raises(ValueError):
        formats.dumps_signatures(12, [BitPattern(13, 0)])


def test_codebook_roundtrip_and_verification(tmp_path):
    specs = [CodeSpec.fixed(20, 3), CodeSpec.binomial(20, 0.75), CodeSpec.fixed(20, 0)]
    book = build_codebook(specs, 2 ** 63 + 11)
    blob = formats.dumps_codebook(book)
    assert len(blob) == 20 + 3 * 9 + 3 * 3
    back = formats.loads_codebook(blob)
    assert back.words == book.words and back.specs == book.specs and back.seed == book.seed
    formats.write_codebook(tmp_path / "cb.bin", book)
    assert formats.read_codebook(tmp_path / "cb.bin").words == book.words
    tampered = bytearray(blob)
    tampered[-1] ^= 0x01
    with pytest.raises(FormatError):
        formats.loads_codebook(bytes(tampered))
    # without verification the stored words are taken as they are
    assert formats.loads_codebook(bytes(tampered), verify=False).words[2].bits == 1 << 16


def test_codebook_errors():
    blob = formats.dumps_codebook(build_codebook([CodeSpec.fixed(10, 2)] * 2, 1))
    bad_kind = bytearray(blob)
    bad_kind[20] = 7
    bad_param = bytearray(blob)
    bad_param[21:29] = struct.pack("<d", 11.0)
    for bad in (blob[:8], b"SIC1" + blob[4:], blob + b"\0", bytes(bad_kind), bytes(bad_param)):
        with pytest.raises(FormatError):
            formats.loads_codebook(bad)


def test_weight_plan_and_frequencies():
    text = formats.dumps_weight_plan(64, [3, 4, 0], seed=5)
    assert text == "n=64\nseed=5\n3\n4\n0\n"
    assert formats.loads_weight_plan(text) == (64, [3, 4, 0], 5)
    assert formats.loads_weight_plan("n=8\n1\n") == (8, [1], None)
    with pytest.raises(FormatError):
        formats.loads_weight_plan("1\n2\n")
    with pytest.raises(FormatError):
        formats.loads_weight_plan("n=8\nx\n")
    assert formats.loads_frequencies("0.1\n\n0.2\n") == [0.1, 0.2]
    with pytest.raises(ValueError, match="line 2"):
        formats.loads_frequencies("0.1\n1.0\n")
    with pytest.raises(ValueError, match="line 1"):
        formats.loads_frequencies("abc\n")
    with pytest.raises(ValueError):
        formats.loads_frequencies("\n")
    assert formats.loads_histogram("2 0.5\n3 0.25\n2 0.25\n") == {2: 0.75, 3: 0.25}
    with pytest.raises(ValueError):
        formats.loads_histogram("2\n")
