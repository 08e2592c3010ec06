"""Small synthetic clips used by the demo scripts."""

import numpy as np
from scipy.ndimage import gaussian_filter


def _normalize(a, lo=0.0, hi=1.0):
    a = (a - a.min()) / np.ptp(a)
    return (lo + (hi - lo) * a).astype(np.float32)


def scrolling_texture(T=13, H=64, W=64, seed=0, sigma=1.5):
    """Smooth random texture sliding left by one pixel per frame."""
    rng = np.random.default_rng(seed)
    base = _normalize(gaussian_filter(rng.random((H, W + T, 3)), (sigma, sigma, 0), mode="wrap"))
    return np.ascontiguousarray(np.stack([base[:, t:t + W] for t in range(T)]))


def moving_square(T=13, H=64, W=64, size=16, speed=3, seed=1):
    rng = np.random.default_rng(seed)
    bg = _normalize(gaussian_filter(rng.random((H, W, 3)), (3, 3, 0)), 0.3, 0.7)
    v = np.repeat(bg[None], T, 0)
    y0 = (H - size) // 2
    for t in range(T):
        v[t, y0:y0 + size, 4 + speed * t:4 + speed * t + size] = (0.9, 0.2, 0.2)
    return v


def moving_disc(T=13, H=64, W=64, radius=9, speed=3, seed=2, flat=None):
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
