"""Escape-time rasters written as binary PGM (P5) or PPM (P6).

Rows are computed independently and assembled in order, so the bytes do not
depend on the number of worker threads (``RAYFORGE_THREADS``).
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from .core import MapSpec, PeriodicPointRecord, evaluate_array

MAX_SIDE = 16384
RAY_COLOR = (255, 0, 0)
POINT_COLOR = (0, 255, 0)


@dataclass(frozen=True)
class RenderConfig:
    viewport: tuple  # (re_min, re_max, im_min, im_max)
    width: int
    height: int
    max_iter: int = 100
    escape_radius: float = 50.0
    overlays: tuple = ()

    def __post_init__(self):
        vp = tuple(float(v) for v in self.viewport)
        object.__setattr__(self, "viewport", vp)
        object.__setattr__(self, "overlays", tuple(self.overlays))
        if len(vp) != 4 or not all(np.isfinite(vp)) or not (vp[0] < vp[1] and vp[2] < vp[3]):
            raise ValueError("viewport must be re_min < re_max, im_min < im_max")
        for side in (self.width, self.height):
            if not (isinstance(side, int) and 1 <= side <= MAX_SIDE):
                raise ValueError(f"width and height must be integers in [1, {MAX_SIDE}]")
        if not (isinstance(self.max_iter, int) and self.max_iter >= 1):
            raise ValueError("max_iter must be a positive integer")
        if not self.escape_radius > 0:
            raise ValueError("escape_radius must be positive")

    def pixel_center(self, i, j):
        re0, re1, im0, im1 = self.viewport
        x = re0 + (np.asarray(i) + 0.5) * (re1 - re0) / self.width
        y = im1 - (np.asarray(j) + 0.5) * (im1 - im0) / self.height
        return x, y

    def to_pixel(self, z: complex) -> tuple[float, float]:
        re0, re1, im0, im1 = self.viewport
        return (z.real - re0) / (re1 - re0) * self.width - 0.5, (im1 - z.imag) / (im1 - im0) * self.height - 0.5


def thread_count(env: Optional[dict] = None) -> int:
    env = os.environ if env is None else env
    raw = env.get("RAYFORGE_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    n = int(raw)
    if n < 1:
        raise ValueError("RAYFORGE_THREADS must be a positive integer")
    return n


def escape_counts_row(m: MapSpec, cfg: RenderConfig, j: int) -> np.ndarray:
    """Iteration at which each pixel of row ``j`` left the escape disk (0 = never)."""
    x, y = cfg.pixel_center(np.arange(cfg.width), j)
    z = x + 1j * y
    counts = np.zeros(cfg.width, dtype=np.int64)
    alive = np.ones(cfg.width, dtype=bool)
    with np.errstate(all="ignore"):
        for n in range(1, cfg.max_iter + 1):
            idx = np.flatnonzero(alive)
            if idx.size == 0:
                break
            w = evaluate_array(m, z[idx])
            z[idx] = w
            out = ~np.isfinite(w) | (np.abs(w) > cfg.escape_radius)
            counts[idx[out]] = n
            alive[idx[out]] = False
    return counts


def shade(counts: np.ndarray, max_iter: int) -> np.ndarray:
    """1..255 for escaping pixels, brighter for faster escape; 0 otherwise."""
    v = 1 + (254 * (max_iter - counts)) // max(max_iter - 1, 1)
    return np.where(counts > 0, v, 0).astype(np.uint8)


def escape_image(m: MapSpec, cfg: RenderConfig, threads: int = 1) -> np.ndarray:
    def row(j: int) -> np.ndarray:
        return shade(escape_counts_row(m, cfg, j), cfg.max_iter)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(row, range(cfg.height)))
    return np.stack(rows)


def _bresenham(x0: int, y0: int, x1: int, y1: int):
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx, sy = (1 if x0 < x1 else -1), (1 if y0 < y1 else -1)
    err = dx + dy
    while True:
        yield x0, y0
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def draw_polyline(rgb: np.ndarray, cfg: RenderConfig, z: Sequence[complex], color=RAY_COLOR) -> None:
    h, w = rgb.shape[:2]
    lim = 4 * max(w, h)
    pix = []
    for p in z:
        px, py = cfg.to_pixel(complex(p))
        pix.append((int(np.clip(np.floor(px + 0.5), -lim, lim)), int(np.clip(np.floor(py + 0.5), -lim, lim))))
    if len(pix) == 1:
        pix = pix * 2
    for (x0, y0), (x1, y1) in zip(pix, pix[1:]):
        if (x0 < 0 and x1 < 0) or (y0 < 0 and y1 < 0) or (x0 >= w and x1 >= w) or (y0 >= h and y1 >= h):
            continue
        for x, y in _bresenham(x0, y0, x1, y1):
            if 0 <= x < w and 0 <= y < h:
                rgb[y, x] = color


def draw_point(rgb: np.ndarray, cfg: RenderConfig, z: complex, color=POINT_COLOR) -> None:
    h, w = rgb.shape[:2]
    px, py = cfg.to_pixel(complex(z))
    cx, cy = int(np.floor(px + 0.5)), int(np.floor(py + 0.5))
    for y in range(cy - 1, cy + 2):
        for x in range(cx - 1, cx + 2):
            if 0 <= x < w and 0 <= y < h:
                rgb[y, x] = color


def encode_pgm(gray: np.ndarray) -> bytes:
    h, w = gray.shape
    return f"P5 {w} {h} 255\n".encode("ascii") + gray.astype(np.uint8).tobytes()


def encode_ppm(rgb: np.ndarray) -> bytes:
    h, w = rgb.shape[:2]
    return f"P6 {w} {h} 255\n".encode("ascii") + rgb.astype(np.uint8).tobytes()


def decode_pnm(data: bytes) -> np.ndarray:
    """Inverse of :func:`encode_pgm` / :func:`encode_ppm`."""
    head, _, rest = data.partition(b"\n")
    magic, w, h, maxval = head.split()
    w, h = int(w), int(h)
    if magic == b"P5":
        return np.frombuffer(rest, dtype=np.uint8).reshape(h, w)
    if magic == b"P6":
        return np.frombuffer(rest, dtype=np.uint8).reshape(h, w, 3)
    raise ValueError("not a P5/P6 file")


def render(m: MapSpec, cfg: RenderConfig, rays: Sequence[Sequence[complex]] = (),
           points: Sequence[PeriodicPointRecord] = (), threads: int = 1) -> bytes:
    gray = escape_image(m, cfg, threads)
    if not rays and not points:
        return encode_pgm(gray)
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    for z in rays:
        draw_polyline(rgb, cfg, z)
    for rec in points:
        draw_point(rgb, cfg, rec.point)
    return encode_ppm(rgb)
