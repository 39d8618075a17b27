"""CSV and PGM readers/writers with bit-stable formatting.

CSV: one point per row, comma-separated decimal floats, ``#`` comment lines
allowed, no header.  Labels CSV: one integer per row in input order.  PGM:
binary P5 and ASCII P2 are read; label images are written as P2.
"""

import numpy as np

from .errors import InputError

__all__ = [
    "read_points_csv",
    "write_points_csv",
    "read_labels_csv",
    "write_labels_csv",
    "read_pgm",
    "write_pgm",
]

_FLOAT_FMT = "%.17g"


def read_points_csv(path):
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"{path}: malformed CSV ({exc})") from exc
    if data.size == 0:
        raise InputError(f"{path}: no data rows")
    return data


def write_points_csv(path, points):
    np.savetxt(path, np.atleast_2d(points), fmt=_FLOAT_FMT, delimiter=",")


def read_labels_csv(path):
    try:
        labels = np.loadtxt(path, comments="#", dtype=np.int64)
    except ValueError as exc:
        raise InputError(f"{path}: malformed labels CSV ({exc})") from exc
    return np.atleast_1d(labels)


def write_labels_csv(path, labels):
    np.savetxt(path, np.asarray(labels, dtype=np.int64), fmt="%d")


def _read_pgm_tokens(raw, count):
    """Yield whitespace-separated ASCII tokens, skipping # comments."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(raw):
            raise InputError("truncated PGM header or ASCII data")
        chunk = raw[pos]
        if chunk in b"#":
            end = raw.find(b"\n", pos)
            pos = len(raw) if end < 0 else end + 1
            continue
        if chunk in b" \t\r\n":
            pos += 1
            continue
        end = pos
        while end < len(raw) and raw[end] not in b" \t\r\n":
            end += 1
        tokens.append(raw[pos:end])
        pos = end
    return tokens, pos


def read_pgm(path):
    """Read a P2 or P5 PGM file; returns (image array, maxval)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] not in (b"P2", b"P5"):
        raise InputError(f"{path}: not a PGM file (P2/P5)")
    binary = raw[:2] == b"P5"
    (magic, w_tok, h_tok, max_tok), pos = _read_pgm_tokens(raw, 4)
    try:
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except ValueError as exc:
        raise InputError(f"{path}: malformed PGM header") from exc
    if width < 1 or height < 1 or maxval < 1 or maxval > 65535:
        raise InputError(f"{path}: invalid PGM dimensions or maxval")
    n = width * height
    if binary:
        pos += 1  # single whitespace after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.uint8
        data = np.frombuffer(raw, dtype=dtype, count=n, offset=pos)
        img = data.astype(np.int64).reshape(height, width)
    else:
        tokens, _ = _read_pgm_tokens(raw[pos:], n)
        img = np.array([int(t) for t in tokens], dtype=np.int64).reshape(height, width)
    if img.max(initial=0) > maxval:
        raise InputError(f"{path}: pixel value exceeds declared maxval")
    return img, maxval


def write_pgm(path, image, maxval=None):
    """Write an integer image as ASCII P2.

    A single-cluster label image would declare maxval 0, which the format
    forbids; the declared maxval is floored at 1 (pixel values are kept).
    """
    img = np.asarray(image, dtype=np.int64)
    if img.ndim != 2:
        raise InputError("PGM output expects a 2-D array")
    if img.min(initial=0) < 0:
        raise InputError("PGM output expects nonnegative values")
    if maxval is None:
        maxval = int(img.max(initial=0))
    maxval = max(1, int(maxval))
    if img.max(initial=0) > maxval:
        raise InputError("pixel value exceeds maxval")
    lines = [b"P2", f"{img.shape[1]} {img.shape[0]}".encode(), str(maxval).encode()]
    for row in img:
        lines.append(" ".join(str(v) for v in row).encode())
    with open(path, "wb") as fh:
        fh.write(b"\n".join(lines) + b"\n")
