"""Video rasters, resampling, space-time pyramids and noise injection.

A video is a plain ``float32`` array of shape ``(T, H, W, C)`` with values
nominally in ``[0, 1]``. Nothing in this module clamps; clamping happens only
when a pipeline emits its final result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

Dims = tuple[int, int, int]

DEFAULT_MIN_DIMS: Dims = (3, 21, 21)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def as_video(v, *, copy: bool = False) -> np.ndarray:
    """Validate ``v`` as a (T, H, W, C) video and return it as contiguous float32.

    A 3-D array is treated as a single-channel video.
    """
    arr = np.asarray(v)
    if arr.ndim == 3:
        arr = arr[..., None]
    if arr.ndim != 4:
        raise ValueError(f"video must be 4-D (T, H, W, C), got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ValueError(f"video has an empty axis: {arr.shape}")
    out = np.ascontiguousarray(arr, dtype=np.float32)
    if copy and out is arr:
        out = out.copy()
    if not np.isfinite(out).all():
        raise ValueError("video contains NaN or Inf")
    return out


def dims(v: np.ndarray) -> Dims:
    return (int(v.shape[0]), int(v.shape[1]), int(v.shape[2]))


@dataclass(frozen=True)
class ScaleFactor:
    """Per-axis downscale ratios between consecutive pyramid levels."""

    r_t: float = 0.75
    r_h: float = 0.75
    r_w: float = 0.75

    def __post_init__(self):
        for name in ("r_t", "r_h", "r_w"):
            r = getattr(self, name)
            if not 0.0 < r <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.r_t, self.r_h, self.r_w)


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 0.5
    seed: int = 0
    temporal_replicate: bool = True

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass
class SpaceTimePyramid:
    """Levels of a video from finest (index 0) to coarsest (index N)."""

    levels: list[np.ndarray]
    factor: ScaleFactor
    min_dims: Dims = DEFAULT_MIN_DIMS
    level_dims: list[Dims] = field(init=False)

    def __post_init__(self):
        self.level_dims = [dims(v) for v in self.levels]

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, n):
        return self.levels[n]

    @property
    def coarsest(self) -> int:
        return len(self.levels) - 1


# -- resampling ---------------------------------------------------------------


def _catmull_rom(d: np.ndarray, a: float = -0.5) -> np.ndarray:
    d = np.abs(d)
    w = np.zeros_like(d)
    near = d <= 1
    far = (d > 1) & (d < 2)
    w[near] = (a + 2) * d[near] ** 3 - (a + 3) * d[near] ** 2 + 1
    w[far] = a * d[far] ** 3 - 5 * a * d[far] ** 2 + 8 * a * d[far] - 4 * a
    return w


def _resample_matrix(n_in: int, n_out: int, kernel: str) -> sparse.csr_matrix:
    # half-pixel centred sampling; taps outside the input are clamped to the edge
    x = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    base = np.floor(x)
    frac = x - base
    if kernel == "cubic":
        offsets = np.arange(-1, 3)
        weights = _catmull_rom(frac[:, None] - offsets[None, :])
    elif kernel == "linear":
        offsets = np.arange(0, 2)
        weights = np.stack([1.0 - frac, frac], axis=1)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    cols = np.clip(base[:, None].astype(np.int64) + offsets[None, :], 0, n_in - 1)
    rows = np.repeat(np.arange(n_out), len(offsets))
    m = sparse.coo_matrix(
        (weights.ravel(), (rows, cols.ravel())), shape=(n_out, n_in)
    ).tocsr()
    return m.astype(np.float32)


def _resample_axis(v: np.ndarray, axis: int, n_out: int, kernel: str) -> np.ndarray:
    n_in = v.shape[axis]
    if n_in == n_out:
        return v
    m = _resample_matrix(n_in, n_out, kernel)
    moved = np.moveaxis(v, axis, 0)
    rest = moved.shape[1:]
    out = m @ moved.reshape(n_in, -1)
    out = np.moveaxis(np.asarray(out).reshape((n_out,) + rest), 0, axis)
    return np.ascontiguousarray(out, dtype=np.float32)


def resize_video(v: np.ndarray, target: Dims) -> np.ndarray:
    """Resample ``v`` to ``target = (T', H', W')``.

    Separable: Catmull-Rom cubic (a = -0.5) along H and W, linear along T,
    with edge-clamped sample coordinates. Axes whose size already matches
    are passed through untouched, so resizing to the same dims is exact.
    """
    v = as_video(v)
    target = tuple(int(n) for n in target)
    if len(target) != 3 or min(target) < 1:
        raise ValueError(f"target dims must be three positive ints, got {target}")
    out = _resample_axis(v, 0, target[0], "linear")
    out = _resample_axis(out, 1, target[1], "cubic")
    out = _resample_axis(out, 2, target[2], "cubic")
    return out


def resize_nearest(v: np.ndarray, target: Dims) -> np.ndarray:
    """Nearest-neighbour resample, for label-like rasters that must not blend."""
    v = as_video(v)
    idx = []
    for n_in, n_out in zip(v.shape[:3], target):
        x = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        idx.append(np.clip(np.floor(x + 0.5).astype(np.int64), 0, n_in - 1))
    return np.ascontiguousarray(v[np.ix_(idx[0], idx[1], idx[2])])


# -- pyramid ------------------------------------------------------------------


def pyramid_dims(src: Dims, r: ScaleFactor, min_dims: Dims = DEFAULT_MIN_DIMS) -> list[Dims]:
    """Level dims from finest to coarsest.

    Each level is ``round_half_up(prev * r)`` per axis. An axis that has
    already reached its minimum stays clamped there; any other axis dropping
    below its minimum ends the pyramid.
    """
    if any(s < m for s, m in zip(src, min_dims)):
        raise ValueError(f"input dims {src} are smaller than the minimum {min_dims}")
    if all(x == 1.0 for x in r.as_tuple()):
        raise ValueError("scale factor (1, 1, 1) does not contract")
    out = [tuple(src)]
    while True:
        prev = out[-1]
        nxt = []
        for p, ratio, m in zip(prev, r.as_tuple(), min_dims):
            n = round_half_up(p * ratio)
            if n < m:
                if p > m:
                    return out
                n = m
            nxt.append(n)
        nxt = tuple(nxt)
        if nxt == prev:
            return out
        out.append(nxt)


def build_pyramid(
    v: np.ndarray, r: ScaleFactor, min_dims: Dims = DEFAULT_MIN_DIMS
) -> SpaceTimePyramid:
    """Build a space-time pyramid by repeatedly resizing the previous level."""
    v = as_video(v)
    level_dims = pyramid_dims(dims(v), r, min_dims)
    levels = [v]
    for d in level_dims[1:]:
        levels.append(resize_video(levels[-1], d))
    return SpaceTimePyramid(levels, r, tuple(min_dims))


# -- noise --------------------------------------------------------------------


def add_noise(v: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Return ``v + z`` with ``z ~ N(0, sigma^2)``, no clamping.

    With ``temporal_replicate`` one (H, W, C) noise slice is drawn and added
    to every frame.
    """
    v = as_video(v)
    if spec.sigma == 0:
        return v.copy()
    rng = np.random.default_rng(spec.seed)
    t, h, w, c = v.shape
    shape = (1, h, w, c) if spec.temporal_replicate else (t, h, w, c)
    z = rng.normal(0.0, spec.sigma, size=shape).astype(np.float32)
    return v + z
