"""Synthetic clips shared by the tests."""

import numpy as np
from scipy.ndimage import gaussian_filter


def _normalize(a, lo=0.0, hi=1.0):
    a = (a - a.min()) / np.ptp(a)
    return (lo + (hi - lo) * a).astype(np.float32)


def smooth_tile(period=16, seed=0, sigma=1.5):
    rng = np.random.default_rng(seed)
    return _normalize(gaussian_filter(rng.random((period, period, 3)), (sigma, sigma, 0), mode="wrap"))


def periodic_texture(T=13, H=64, W=64, period=16, seed=0, speed=1):
    """A smooth random tile repeated in space and scrolling ``speed`` px/frame."""
    tile = smooth_tile(period, seed)
    t, h, w = np.meshgrid(np.arange(T), np.arange(H), np.arange(W), indexing="ij")
    return np.ascontiguousarray(tile[h % period, (w + speed * t) % period])


def stationary_texture(T=13, H=64, W=64, seed=0, sigma=1.5):
    """Smooth non-periodic random texture scrolling 1 px/frame."""
    rng = np.random.default_rng(seed)
    base = _normalize(gaussian_filter(rng.random((H, W + T, 3)), (sigma, sigma, 0), mode="wrap"))
    return np.ascontiguousarray(np.stack([base[:, t:t + W] for t in range(T)]))


def random_video(shape, seed=0):
    return np.random.default_rng(seed).random(shape, dtype=np.float32)


def blurred_video(shape, sigma=2.0, seed=0):
    rng = np.random.default_rng(seed)
    v = gaussian_filter(rng.random(shape), (0, sigma, sigma, 0))
    return _normalize(v, 0.1, 0.9)


def square_clip(T=13, H=64, W=64, size=16, speed=3, seed=1):
    """Red square moving left to right over a smooth static background."""
    rng = np.random.default_rng(seed)
    bg = _normalize(gaussian_filter(rng.random((H, W, 3)), (3, 3, 0)), 0.3, 0.7)
    v = np.repeat(bg[None], T, 0)
    y0 = (H - size) // 2
    for t in range(T):
        x0 = 4 + speed * t
        v[t, y0:y0 + size, x0:x0 + size] = (0.9, 0.2, 0.2)
    return v


def disc_clip(T=13, H=64, W=64, radius=9, speed=3, seed=2, flat=None):
    """Textured disc moving right to left; background smooth noise or a flat colour."""
    rng = np.random.default_rng(seed)
    if flat is None:
        bg = _normalize(gaussian_filter(rng.random((H, W, 3)), (2, 2, 0)), 0.2, 0.5)
    else:
        bg = np.broadcast_to(np.asarray(flat, np.float32), (H, W, 3))
    tex = _normalize(gaussian_filter(rng.random((H, W, 3)), (1, 1, 0)), 0.6, 1.0)
    v = np.repeat(np.asarray(bg)[None], T, 0).copy()
    yy, xx = np.mgrid[0:H, 0:W]
    for t in range(T):
        cx = W - 1 - radius - 4 - speed * t
        m = (yy - H // 2) ** 2 + (xx - cx) ** 2 <= radius**2
        v[t][m] = np.roll(tex, -speed * t, axis=1)[m]
    return v


def shifting_texture(T=4, H=48, W=64, shift=2, seed=0):
    """Random texture circularly shifted by ``shift`` px/frame along W."""
    base = random_video((1, H, W, 3), seed)[0]
    return np.stack([np.roll(base, shift * t, axis=1) for t in range(T)])


def two_region_clip(T=5, H=48, W=64, seed=0):
    """Left half static, right half shifting by 1 px/frame."""
    base = random_video((1, H, W, 3), seed)[0]
    frames = []
    for t in range(T):
        f = base.copy()
        f[:, W // 2:] = np.roll(base, t, axis=1)[:, W // 2:]
        frames.append(f)
    return np.stack(frames)
