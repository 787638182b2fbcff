"""Minimal PNG rendering for Wigner heat maps.

CSV/binary grids are the authoritative artifacts; these images are viewing
conveniences, so the rasterizer is deliberately small: a fixed
viridis-style palette applied to the field, diverging around zero so
negative Wigner regions are visually distinct, encoded as an uncompressed-
filter PNG through zlib.  No plotting framework is involved.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

# sampled viridis-like control points (dark blue -> teal -> green -> yellow)
_PALETTE = np.array(
    [
        (68, 1, 84),
        (71, 44, 122),
        (59, 81, 139),
        (44, 113, 142),
        (33, 144, 141),
        (39, 173, 129),
        (92, 200, 99),
        (170, 220, 50),
        (253, 231, 37),
    ],
    dtype=float,
)


def _palette_rgb(v: np.ndarray) -> np.ndarray:
    """Map values in [0, 1] to RGB via piecewise-linear palette interpolation."""
    v = np.clip(v, 0.0, 1.0)
    pos = v * (len(_PALETTE) - 1)
    idx = np.minimum(pos.astype(int), len(_PALETTE) - 2)
    frac = (pos - idx)[..., None]
    rgb = _PALETTE[idx] * (1.0 - frac) + _PALETTE[idx + 1] * frac
    return rgb.astype(np.uint8)


def write_png(path, rgb: np.ndarray):
    """Write an (h, w, 3) uint8 array as a PNG file."""
    h, w, _ = rgb.shape
    raw = b"".join(b"\x00" + rgb[row].tobytes() for row in range(h))

    def chunk(tag: bytes, payload: bytes) -> bytes:
        return (
            struct.pack(">I", len(payload))
            + tag
            + payload
            + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF)
        )

    header = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    png = (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", header)
        + chunk(b"IDAT", zlib.compress(raw, 9))
        + chunk(b"IEND", b"")
    )
    with open(path, "wb") as fh:
        fh.write(png)


def heatmap_png(path, field: np.ndarray, symmetric: bool = True, max_px: int = 1024):
    """Render a 2D field (x along rows, p along columns) as a PNG heat map.

    With ``symmetric`` the colour scale is centred on zero (so Wigner
    negativity sits below the palette midpoint); the image is oriented with
    p increasing upward and x to the right.
    """
    f = np.asarray(field, dtype=float)
    # image rows = p (flipped so p grows upward), columns = x
    img = f.T[::-1, :]
    if symmetric:
        scale = float(np.max(np.abs(img))) or 1.0
        norm = 0.5 + 0.5 * img / scale
    else:
        lo, hi = float(img.min()), float(img.max())
        norm = (img - lo) / ((hi - lo) or 1.0)
    # integer upscale for small grids, downsample for huge ones
    h, w = norm.shape
    if max(h, w) > max_px:
        step = int(np.ceil(max(h, w) / max_px))
        norm = norm[::step, ::step]
    elif max(h, w) < 256:
        rep = int(np.ceil(256 / max(h, w)))
        norm = np.kron(norm, np.ones((rep, rep)))
    write_png(path, _palette_rgb(norm))
