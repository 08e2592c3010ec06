"""Dynamic structure of a video: optical-flow magnitude quantized into a few bins.

Flow comes either from the built-in coarse-to-fine block matcher or from
Middlebury ``.flo`` files computed by an external estimator. Only the
magnitude is kept.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit, prange

from .video import as_video, resize_nearest

FLO_MAGIC = b"PIEH"
DEFAULT_BINS = 5


class FlowFormatError(ValueError):
    pass


@dataclass
class QuantizedDynamics:
    """Per-voxel bin ids (stored as float in a 1-channel video) and ascending centroids."""

    labels: np.ndarray
    centroids: np.ndarray

    @property
    def k(self) -> int:
        return len(self.centroids)

    def values(self) -> np.ndarray:
        """Centroid magnitude at every voxel."""
        return self.centroids.astype(np.float32)[self.labels.astype(np.int64)]

    def assign(self, magnitudes) -> np.ndarray:
        """Label new magnitudes with these centroids (nearest, ties to the lower bin)."""
        return _assign(np.asarray(magnitudes, dtype=np.float64), self.centroids).astype(np.float32)


# -- block matching -------------------------------------------------------------


@njit(cache=True)
def _block_ssd(a, b, y, x, dy, dx, r):
    H, W = a.shape
    s = 0.0
    for i in range(-r, r + 1):
        ya = min(max(y + i, 0), H - 1)
        yb = min(max(y + i + dy, 0), H - 1)
        for j in range(-r, r + 1):
            xa = min(max(x + j, 0), W - 1)
            xb = min(max(x + j + dx, 0), W - 1)
            d = a[ya, xa] - b[yb, xb]
            s += d * d
    return s


@njit(cache=True, parallel=True)
def _match(a, b, r, center, radius, max_disp, out):
    # out[y, x] = best (dy, dx) within ``radius`` of center[y, x], clipped to
    # +-max_disp; the centre is tried first and only strict improvements win
    H, W = a.shape
    for y in prange(H):
        for x in range(W):
            cy = center[y, x, 0]
            cx = center[y, x, 1]
            best = _block_ssd(a, b, y, x, cy, cx, r)
            by = cy
            bx = cx
            for dy in range(max(cy - radius, -max_disp), min(cy + radius, max_disp) + 1):
                for dx in range(max(cx - radius, -max_disp), min(cx + radius, max_disp) + 1):
                    if dy == cy and dx == cx:
                        continue
                    d = _block_ssd(a, b, y, x, dy, dx, r)
                    if d < best:
                        best = d
                        by = dy
                        bx = dx
            out[y, x, 0] = by
            out[y, x, 1] = bx


def _half(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    p = np.pad(img, ((0, h % 2), (0, w % 2)), mode="edge")
    return 0.25 * (p[0::2, 0::2] + p[1::2, 0::2] + p[0::2, 1::2] + p[1::2, 1::2])


def block_flow(a: np.ndarray, b: np.ndarray, window: int, max_disp: int) -> np.ndarray:
    """Integer displacement ``(dy, dx)`` per pixel from frame ``a`` to frame ``b``.

    Two-level coarse-to-fine: a full search over ``+-ceil(max_disp / 2)`` at
    half resolution, then a +-1 refinement around twice the coarse estimate.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    H, W = a.shape
    r = window // 2
    a2, b2 = _half(a), _half(b)
    coarse_disp = math.ceil(max_disp / 2)
    coarse = np.empty(a2.shape + (2,), dtype=np.int64)
    _match(a2, b2, r, np.zeros_like(coarse), coarse_disp, coarse_disp, coarse)
    center = np.clip(2 * coarse[np.arange(H)[:, None] // 2, np.arange(W)[None, :] // 2],
                     -max_disp, max_disp)
    center = np.ascontiguousarray(center)
    fine = np.empty((H, W, 2), dtype=np.int64)
    _match(a, b, r, center, 1, max_disp, fine)
    return fine


def estimate_flow_magnitude(v, window: int = 7, max_disp: int = 6) -> np.ndarray:
    """Per-voxel displacement magnitude (pixels/frame) as a 1-channel video.

    Frame ``t`` holds the flow from ``t`` to ``t + 1``; the last frame repeats
    the one before it. Matching runs on the channel mean.
    """
    v = as_video(v)
    T, H, W, _ = v.shape
    if window < 1 or window > min(H, W):
        raise ValueError(f"window {window} does not fit frames of {H}x{W}")
    if max_disp < 0:
        raise ValueError("max_disp must be >= 0")
    out = np.zeros((T, H, W, 1), dtype=np.float32)
    if T < 2:
        return out
    gray = v.mean(axis=3, dtype=np.float64)
    for t in range(T - 1):
        d = block_flow(gray[t], gray[t + 1], window, max_disp)
        out[t, ..., 0] = np.hypot(d[..., 0], d[..., 1])
    out[T - 1] = out[T - 2]
    return out


# -- .flo files ------------------------------------------------------------------


def write_flo(path, u, v) -> None:
    u = np.asarray(u, dtype="<f4")
    v = np.asarray(v, dtype="<f4")
    if u.shape != v.shape or u.ndim != 2:
        raise ValueError("u and v must be equal-shape 2-D arrays")
    h, w = u.shape
    with open(path, "wb") as f:
        f.write(FLO_MAGIC)
        f.write(struct.pack("<ii", w, h))
        f.write(np.stack([u, v], axis=-1).astype("<f4").tobytes())


def read_flo(path) -> np.ndarray:
    """Read one Middlebury ``.flo`` file as an ``(H, W, 2)`` float32 array of (u, v)."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 12:
        raise FlowFormatError(f"{path}: truncated header ({len(data)} bytes)")
    if data[:4] != FLO_MAGIC:
        raise FlowFormatError(f"{path}: bad magic {data[:4]!r}, expected {FLO_MAGIC!r}")
    w, h = struct.unpack("<ii", data[4:12])
    if w < 1 or h < 1:
        raise FlowFormatError(f"{path}: invalid dims {w}x{h}")
    need = 12 + 8 * w * h
    if len(data) < need:
        raise FlowFormatError(f"{path}: truncated, {len(data)} of {need} bytes")
    flow = np.frombuffer(data, dtype="<f4", count=2 * w * h, offset=12)
    return flow.reshape(h, w, 2).astype(np.float32)


def load_flo(paths) -> np.ndarray:
    """Flow magnitudes from a sequence of ``.flo`` files (one per frame pair).

    Returns ``len(paths) + 1`` frames, the last one repeating the one before.
    """
    paths = [Path(p) for p in paths]
    if not paths:
        raise FlowFormatError("no .flo files given")
    frames = []
    for p in paths:
        f = read_flo(p)
        if frames and f.shape[:2] != frames[0].shape:
            raise FlowFormatError(
                f"{p}: dims {f.shape[1]}x{f.shape[0]} differ from "
                f"{frames[0].shape[1]}x{frames[0].shape[0]} of {paths[0]}"
            )
        frames.append(np.hypot(f[..., 0], f[..., 1]))
    frames.append(frames[-1])
    return np.stack(frames)[..., None].astype(np.float32)


# -- k-means --------------------------------------------------------------------


def _assign(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # centroids ascending; a value exactly halfway goes to the lower one
    mids = 0.5 * (centroids[1:] + centroids[:-1])
    return np.searchsorted(mids, x, side="left")


def kmeans_quantize(m, k: int = DEFAULT_BINS, seed: int = 0, max_iter: int = 100) -> QuantizedDynamics:
    """1-D Lloyd k-means over all magnitudes with seeded k-means++ init.

    ``k`` drops to the number of distinct values when there are fewer; empty
    clusters are dropped. Labels are renumbered so centroids ascend.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    m = np.asarray(m, dtype=np.float64)
    x = m.ravel()
    if x.size == 0:
        raise ValueError("no values to quantize")
    distinct, counts = np.unique(x, return_counts=True)
    k = min(k, len(distinct))
    rng = np.random.default_rng(seed)

    # k-means++ on the distinct values, weighted by multiplicity
    cents = [distinct[rng.choice(len(distinct), p=counts / counts.sum())]]
    for _ in range(1, k):
        d2 = np.min((distinct[:, None] - np.asarray(cents)[None, :]) ** 2, axis=1) * counts
        if d2.sum() == 0:
            break
        cents.append(distinct[rng.choice(len(distinct), p=d2 / d2.sum())])
    c = np.sort(np.asarray(cents))

    for _ in range(max_iter):
        lab = _assign(distinct, c)
        sums = np.bincount(lab, weights=distinct * counts, minlength=len(c))
        cnt = np.bincount(lab, weights=counts, minlength=len(c))
        keep = cnt > 0
        new = np.sort(sums[keep] / cnt[keep])
        moved = len(new) != len(c) or np.max(np.abs(new - c)) > 1e-6 * max(np.max(np.abs(c)), 1e-12)
        c = new
        if not moved:
            break
    labels = _assign(x, c).reshape(m.shape)
    if m.ndim == 3:
        labels = labels[..., None]
    return QuantizedDynamics(labels.astype(np.float32), c)


# -- dyn --------------------------------------------------------------------------


def flow_magnitude(v, flow_source="builtin", **kwargs) -> np.ndarray:
    """Magnitudes from the built-in estimator or from a list of ``.flo`` paths."""
    if isinstance(flow_source, str) and flow_source == "builtin":
        return estimate_flow_magnitude(v, **kwargs)
    mag = load_flo(flow_source)
    if mag.shape[:3] != as_video(v).shape[:3]:
        raise FlowFormatError(
            f"flow dims {mag.shape[:3]} do not match video dims {as_video(v).shape[:3]}"
        )
    return mag


def dyn(v, k: int = DEFAULT_BINS, flow_source="builtin", seed: int = 0, **kwargs) -> np.ndarray:
    """Centroid-valued dynamic structure of ``v`` (1 channel)."""
    return kmeans_quantize(flow_magnitude(v, flow_source, **kwargs), k, seed).values()


def dyn_pair(c, s, k: int = DEFAULT_BINS, flow_sources=("builtin", "builtin"), seed: int = 0,
             **kwargs):
    """Dynamic structure of two videos quantized with one shared set of bins.

    Returns ``(dyn_c, dyn_s, quantization)``.
    """
    mc = flow_magnitude(c, flow_sources[0], **kwargs)
    ms = flow_magnitude(s, flow_sources[1], **kwargs)
    joint = kmeans_quantize(np.concatenate([mc.ravel(), ms.ravel()]), k, seed)
    qc = QuantizedDynamics(joint.assign(mc), joint.centroids)
    qs = QuantizedDynamics(joint.assign(ms), joint.centroids)
    return qc.values(), qs.values(), joint


def dyn_levels(d, level_dims) -> list[np.ndarray]:
    """Downscale a dyn raster to each pyramid level by nearest-neighbour sampling."""
    return [resize_nearest(d, ld) for ld in level_dims]
