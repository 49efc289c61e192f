"""Binary PPM snapshots of planar runs, coloured by occupation-time class."""
from __future__ import annotations

from pathlib import Path

import numpy as np

BACKGROUND = (255, 255, 255)
# six-class palette, early (dark blue) to late (red)
PALETTE = np.array([
    (49, 54, 149),
    (69, 117, 180),
    (116, 173, 209),
    (253, 174, 97),
    (244, 109, 67),
    (165, 0, 38),
], dtype=np.uint8)


def palette(classes: int) -> np.ndarray:
    """``classes`` RGB colours; the fixed six-colour ramp, interpolated when needed."""
    if classes < 1:
        raise ValueError("need at least one class")
    if classes == len(PALETTE):
        return PALETTE.copy()
    pos = np.linspace(0, len(PALETTE) - 1, classes)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, len(PALETTE) - 1)
    w = (pos - lo)[:, None]
    return np.rint(PALETTE[lo] * (1 - w) + PALETTE[hi] * w).astype(np.uint8)


def time_classes(times: np.ndarray, t: float, classes: int = 6) -> np.ndarray:
    """Class 1..classes of each occupation time, equispaced on [0, t]."""
    if t <= 0:
        return np.ones(len(times), dtype=np.int64)
    c = np.ceil(np.asarray(times) / t * classes).astype(np.int64)
    return np.clip(c, 1, classes)


def image(coords: np.ndarray, times: np.ndarray, t: float, classes: int = 6) -> np.ndarray:
    """RGB array of the sites occupied by time t; origin at the centre pixel."""
    coords = np.asarray(coords, dtype=np.int64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ValueError("rendering is supported for d = 2 only")
    keep = np.asarray(times) <= t
    pts, tt = coords[keep], np.asarray(times)[keep]
    m = int(np.abs(pts).max()) if len(pts) else 0
    side = 2 * m + 1
    img = np.empty((side, side, 3), dtype=np.uint8)
    img[:] = BACKGROUND
    cls = time_classes(tt, t, classes)
    # row 0 at the top: y decreases downwards
    img[m - pts[:, 1], pts[:, 0] + m] = palette(classes)[cls - 1]
    return img


def write_ppm(path, rgb: np.ndarray) -> None:
    h, w, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(np.ascontiguousarray(rgb, dtype=np.uint8).tobytes())


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4], dtype=np.uint8, count=w * h * 3).reshape(h, w, 3)


def snapshot_name(t: float) -> str:
    return f"snapshot_{t:g}.ppm"
