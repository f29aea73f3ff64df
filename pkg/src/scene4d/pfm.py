"""Portable float map (PFM) reader/writer for depth images.

Grayscale ("Pf") and 3-channel ("PF") variants, little-endian (negative
scale header), scanlines stored bottom-to-top per the format. Round trips
are byte-identical for float32 input.
"""

from __future__ import annotations

import numpy as np


def write_pfm(path, image: np.ndarray, scale: float = -1.0) -> None:
    """Write a float32 image as PFM. 2-D arrays become grayscale "Pf" files,
    (H, W, 3) arrays become color "PF" files."""
    data = np.asarray(image, dtype=np.float32)
    if data.ndim == 2:
        tag = b"Pf"
    elif data.ndim == 3 and data.shape[2] == 3:
        tag = b"PF"
    else:
        raise ValueError(f"expected HxW or HxWx3 image, got shape {data.shape}")
    if scale >= 0:
        raise ValueError("only little-endian PFM is supported (scale must be < 0)")
    height, width = data.shape[:2]
    with open(path, "wb") as f:
        f.write(tag + b"\n")
        f.write(f"{width} {height}\n".encode("ascii"))
        f.write(f"{scale:.1f}\n".encode("ascii"))
        f.write(np.flipud(data).tobytes())


def read_pfm(path) -> np.ndarray:
    """Read a PFM file into a float32 array (H, W) or (H, W, 3)."""
    with open(path, "rb") as f:
        tag = f.readline().rstrip()
        if tag == b"Pf":
            channels = 1
        elif tag == b"PF":
            channels = 3
        else:
            raise ValueError(f"not a PFM file: bad tag {tag!r}")
        dims = f.readline().split()
        if len(dims) != 2:
            raise ValueError("malformed PFM dimension line")
        width, height = int(dims[0]), int(dims[1])
        scale = float(f.readline())
        byte_order = "<" if scale < 0 else ">"
        raw = f.read(width * height * channels * 4)
    if len(raw) != width * height * channels * 4:
        raise ValueError("truncated PFM payload")
    data = np.frombuffer(raw, dtype=byte_order + "f4")
    if channels == 1:
        data = data.reshape(height, width)
    else:
        data = data.reshape(height, width, 3)
    return np.flipud(data).astype(np.float32)
