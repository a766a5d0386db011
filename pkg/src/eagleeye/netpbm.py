"""Binary netpbm image I/O (P5 gray / P6 color, maxval 255), plus PNG.

PPM/PGM are the canonical formats here: bit-exact, trivially parsed, and
sufficient for the synthetic pipelines. PNG read/write goes through Pillow
as a convenience.
"""

from __future__ import annotations

import numpy as np


class ImageFormatError(ValueError):
    pass


def _read_header_tokens(data: bytes, count: int):
    """Parse `count` whitespace/comment-separated header tokens; returns
    (tokens, offset of first data byte)."""
    tokens = []
    i = 0
    while len(tokens) < count:
        if i >= len(data):
            raise ImageFormatError("truncated netpbm header")
        c = data[i:i + 1]
        if c == b"#":
            while i < len(data) and data[i:i + 1] != b"\n":
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
    if i >= len(data) or not data[i:i + 1].isspace():
        raise ImageFormatError("malformed netpbm header")
    return tokens, i + 1


def read_netpbm(path) -> np.ndarray:
    """Read a binary PGM (P5) or PPM (P6); returns float64 in [0, 1],
    (H, W) for gray or (H, W, 3) for color."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] not in (b"P5", b"P6"):
        raise ImageFormatError(f"{path}: not a binary PGM/PPM file")
    color = data[:2] == b"P6"
    tokens, offset = _read_header_tokens(data[2:], 3)
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise ImageFormatError(f"{path}: bad netpbm header") from exc
    if w <= 0 or h <= 0:
        raise ImageFormatError(f"{path}: bad dimensions {w}x{h}")
    if maxval != 255:
        raise ImageFormatError(f"{path}: unsupported maxval {maxval}")
    channels = 3 if color else 1
    need = w * h * channels
    raw = data[2 + offset:2 + offset + need]
    if len(raw) != need:
        raise ImageFormatError(f"{path}: expected {need} data bytes, got {len(raw)}")
    arr = np.frombuffer(raw, dtype=np.uint8).astype(np.float64) / 255.0
    if color:
        return arr.reshape(h, w, 3)
    return arr.reshape(h, w)


def write_pgm(path, gray: np.ndarray) -> None:
    """Write a binary PGM. Accepts uint8 or float in [0, 1]."""
    data = _to_u8(gray)
    if data.ndim != 2:
        raise ImageFormatError("PGM wants a 2-D array")
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (data.shape[1], data.shape[0]))
        fh.write(data.tobytes())


def write_ppm(path, rgb: np.ndarray) -> None:
    """Write a binary PPM. Accepts uint8 or float in [0, 1]."""
    data = _to_u8(rgb)
    if data.ndim != 3 or data.shape[2] != 3:
        raise ImageFormatError("PPM wants an (H, W, 3) array")
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (data.shape[1], data.shape[0]))
        fh.write(data.tobytes())


def _to_u8(arr: np.ndarray) -> np.ndarray:
    a = np.asarray(arr)
    if a.dtype == np.uint8:
        return np.ascontiguousarray(a)
    return np.ascontiguousarray(
        np.floor(np.clip(a, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    )


def load_image(path) -> np.ndarray:
    """Load PGM/PPM/PNG as (H, W, 3) float64 in [0, 1]; gray replicates."""
    name = str(path).lower()
    if name.endswith((".pgm", ".ppm")):
        arr = read_netpbm(path)
    elif name.endswith(".png"):
        from PIL import Image

        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    else:
        raise ImageFormatError(f"{path}: unsupported image format (use .pgm/.ppm/.png)")
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return arr
