import numpy as np
import pytest

from vpgrid.errors import DomainError, ParseError
from vpgrid.pgm import decode_pgm, encode_pgm, read_pgm, write_pgm


def test_golden_bytes():
    img = np.array([[0.0, 1.0], [0.5, 0.5]])
    data = encode_pgm(img)
    header, payload = data[:-4], data[-4:]
    assert header.split() == [b"P5", b"2", b"2", b"255"]
    assert list(payload) == [0, 255, 128, 128]


def test_round_trip_equals_quantized(tmp_path):
    rng = np.random.default_rng(3)
    img = rng.uniform(0, 1, size=(7, 11))
    write_pgm(img, tmp_path / "a.pgm")
    back = read_pgm(tmp_path / "a.pgm")
    np.testing.assert_array_equal(back, np.floor(img * 255 + 0.5) / 255)
    write_pgm(back, tmp_path / "b.pgm")
    assert (tmp_path / "a.pgm").read_bytes() == (tmp_path / "b.pgm").read_bytes()


def test_comments_in_header():
    img = decode_pgm(b"P5\n# made by hand\n2 1\n255\n\x00\xff")
    np.testing.assert_array_equal(img, [[0.0, 1.0]])


@pytest.mark.parametrize(
    "blob, offset",
    [
        (b"P2\n2 2\n255\n", 0),
        (b"P5\n2 2\n65535\n" + bytes(8), 7),
        (b"P5\n2 2\n255\n\x00", 12),
        (b"P5\n2 x\n255\n" + bytes(4), 5),
        (b"P5\n2", 4),
    ],
)
def test_parse_errors_carry_offsets(blob, offset):
    with pytest.raises(ParseError) as err:
        decode_pgm(blob)
    assert err.value.offset == offset


def test_write_rejects_out_of_range():
    with pytest.raises(DomainError):
        encode_pgm(np.array([[1.2]]))
