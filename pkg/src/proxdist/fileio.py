"""CSV matrix and PGM image readers/writers used by the CLI.

CSV: RFC-4180 subset, comma-separated decimal floats, '.' separator.
PGM: binary P5 or ASCII P2, maxval <= 65535; pixels map to [0, 1] by
value/maxval on read, nearest integer on write, so write(read(f)) is
byte-identical for P5 payloads.
"""

import numpy as np

from .errors import ContractViolationError


class ParseError(ContractViolationError):
    """Malformed input file; carries a line number where possible."""


def read_matrix_csv(path):
    rows = []
    width = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise ParseError(f"{path}:{lineno}: ragged row")
            try:
                rows.append([float(f) for f in fields])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ParseError(f"{path}: empty matrix")
    return np.asarray(rows, dtype=np.float64)


def write_matrix_csv(path, matrix):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    with open(path, "w", encoding="ascii", newline="") as fh:
        for row in matrix:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def _read_pgm_tokens(data, count):
    """Yield whitespace-separated header tokens, skipping '#' comments."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise ParseError("pgm: truncated header")
        ch = data[pos: pos + 1]
        if ch == b"#":
            while pos < len(data) and data[pos: pos + 1] != b"\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos: pos + 1].isspace():
                pos += 1
            tokens.append(data[start:pos])
    return tokens, pos + 1  # single whitespace after the last header token


def read_pgm(path):
    """Read P2/P5 into a float array in [0, 1]; returns (image, maxval)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] not in (b"P2", b"P5"):
        raise ParseError(f"{path}: not a PGM (P2/P5) file")
    binary = data[:2] == b"P5"
    (magic, w_tok, h_tok, max_tok), offset = _read_pgm_tokens(data, 4)
    try:
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except ValueError:
        raise ParseError(f"{path}: bad PGM header") from None
    if maxval <= 0 or maxval > 65535:
        raise ParseError(f"{path}: maxval {maxval} out of range")
    if binary:
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = width * height * dtype.itemsize
        payload = data[offset: offset + need]
        if len(payload) != need:
            raise ParseError(f"{path}: truncated P5 payload")
        raw = np.frombuffer(payload, dtype=dtype).astype(np.float64)
    else:
        try:
            raw = np.array(data[offset - 1:].split(), dtype=np.float64)
        except ValueError as exc:
            raise ParseError(f"{path}: {exc}") from None
        if raw.size != width * height:
            raise ParseError(f"{path}: expected {width * height} pixels")
    if raw.max(initial=0) > maxval:
        raise ParseError(f"{path}: pixel exceeds maxval")
    return raw.reshape(height, width) / maxval, maxval


def write_pgm(path, image, maxval=255, binary=True):
    """Write a [0, 1] image as P5 (default) or P2 with the given maxval."""
    if maxval <= 0 or maxval > 65535:
        raise ContractViolationError("maxval out of range")
    image = np.asarray(image, dtype=np.float64)
    raw = np.rint(np.clip(image, 0.0, 1.0) * maxval).astype(np.int64)
    height, width = image.shape
    header = f"{'P5' if binary else 'P2'}\n{width} {height}\n{maxval}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
            fh.write(raw.astype(dtype).tobytes())
        else:
            for row in raw:
                fh.write((" ".join(str(v) for v in row) + "\n").encode("ascii"))
