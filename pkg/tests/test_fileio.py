"""CSV and PGM readers/writers."""

import numpy as np
import pytest

from proxdist.fileio import (
    ParseError,
    read_matrix_csv,
    read_pgm,
    write_matrix_csv,
    write_pgm,
)


def test_csv_fixture(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2\n3,4\n")
    np.testing.assert_array_equal(read_matrix_csv(p), [[1.0, 2.0], [3.0, 4.0]])


def test_csv_roundtrip_bit_exact(tmp_path, rng):
    M = rng.standard_normal((5, 3)) * 1e3
    p1 = tmp_path / "a.csv"
    p2 = tmp_path / "b.csv"
    write_matrix_csv(p1, M)
    write_matrix_csv(p2, read_matrix_csv(p1))
    assert p1.read_bytes() == p2.read_bytes()
    np.testing.assert_array_equal(read_matrix_csv(p1), M)


def test_csv_errors(tmp_path):
    ragged = tmp_path / "r.csv"
    ragged.write_text("1,2\n3\n")
    with pytest.raises(ParseError, match=":2"):
        read_matrix_csv(ragged)
    bad = tmp_path / "x.csv"
    bad.write_text("1,zap\n")
    with pytest.raises(ParseError, match=":1"):
        read_matrix_csv(bad)
    empty = tmp_path / "e.csv"
    empty.write_text("")
    with pytest.raises(ParseError):
        read_matrix_csv(empty)


def test_pgm_p2_normalization(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P2\n# comment\n2 2\n255\n0 128 255 64\n")
    img, maxval = read_pgm(p)
    assert maxval == 255
    np.testing.assert_allclose(
        img, [[0.0, 128 / 255], [1.0, 64 / 255]], atol=1e-12
    )


def test_pgm_p5_roundtrip_byte_identical(tmp_path, rng):
    raw = rng.integers(0, 256, size=(16, 16))
    p1 = tmp_path / "a.pgm"
    p2 = tmp_path / "b.pgm"
    write_pgm(p1, raw / 255.0, maxval=255)
    img, maxval = read_pgm(p1)
    write_pgm(p2, img, maxval=maxval)
    assert p1.read_bytes() == p2.read_bytes()
    np.testing.assert_array_equal(np.rint(img * 255), raw)


def test_pgm_16bit(tmp_path, rng):
    raw = rng.integers(0, 65536, size=(4, 6))
    p = tmp_path / "w.pgm"
    write_pgm(p, raw / 65535.0, maxval=65535)
    img, maxval = read_pgm(p)
    assert maxval == 65535
    np.testing.assert_array_equal(np.rint(img * 65535), raw)


def test_pgm_p2_write_and_read(tmp_path, rng):
    raw = rng.integers(0, 256, size=(3, 5))
    p = tmp_path / "t.pgm"
    write_pgm(p, raw / 255.0, maxval=255, binary=False)
    assert p.read_bytes().startswith(b"P2")
    img, _ = read_pgm(p)
    np.testing.assert_array_equal(np.rint(img * 255), raw)


def test_pgm_errors(tmp_path):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P7\n1 1\n255\n\x00")
    with pytest.raises(ParseError):
        read_pgm(bad)
    trunc = tmp_path / "trunc.pgm"
    trunc.write_bytes(b"P5\n4 4\n255\nxx")
    with pytest.raises(ParseError):
        read_pgm(trunc)
    toolarge = tmp_path / "big.pgm"
    toolarge.write_bytes(b"P2\n1 1\n70000\n1\n")
    with pytest.raises(ParseError):
        read_pgm(toolarge)
