"""Coarse-to-fine synthesis: generation, analogies, retargeting, inpainting.

Every pipeline walks a space-time pyramid from the coarsest level to the
finest. At each level it runs ``em_iters_per_level`` patch-replacement steps,
feeding each step's output back in as the next query. The first step of a
finer level compares the upscaled coarser result against an equally blurred
key (the coarser input level upscaled) and copies sharp values from the
current level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .nnf import NNField, PatchShape, SolverParams, scaled_identity_targets
from .video import (
    DEFAULT_MIN_DIMS,
    Dims,
    NoiseSpec,
    ScaleFactor,
    add_noise,
    as_video,
    build_pyramid,
    dims,
    pyramid_dims,
    resize_nearest,
    resize_video,
    round_half_up,
)
from .vpnn import QKVBundle, vpnn_step

RETARGET_STAGE_RATIO = 1.25


class UnsatisfiableConstraintError(ValueError):
    """No key patch satisfies the constraints (e.g. an inpainting hole covers them all)."""


@dataclass(frozen=True)
class GenerationConfig:
    """Settings shared by all pipelines.

    ``seed`` is the only source of randomness: the noise seed and every
    solver seed are derived from it, so ``noise.seed`` and ``solver.seed``
    are ignored by the pipelines.
    """

    scale_factor: ScaleFactor = ScaleFactor()
    noise: NoiseSpec = NoiseSpec()
    em_iters_per_level: int = 5
    solver: SolverParams = SolverParams()
    patch_shape: PatchShape = PatchShape()
    output_time_scale: float = 0.85
    output_space_scale: float = 1.0
    min_dims: Dims = DEFAULT_MIN_DIMS
    seed: int = 0

    def __post_init__(self):
        if self.em_iters_per_level < 1:
            raise ValueError("em_iters_per_level must be >= 1")
        if not 0.0 < self.output_time_scale <= 1.0:
            raise ValueError("output_time_scale must lie in (0, 1]")
        if self.output_space_scale <= 0:
            raise ValueError("output_space_scale must be positive")
        if any(m < p for m, p in zip(self.min_dims, self.patch_shape.as_tuple())):
            raise ValueError(
                f"min_dims {self.min_dims} smaller than patch shape {self.patch_shape.as_tuple()}"
            )


@dataclass
class StepRecord:
    """What one patch-replacement step did; collected when ``history`` is passed."""

    level: int
    iteration: int
    stage: int
    mean_distance: float
    nnf: NNField
    params: SolverParams
    bundle: QKVBundle | None = None


@dataclass
class AnalogyInputs:
    """Content supplies the layout (through its dynamics), style the appearance."""

    content: np.ndarray
    style: np.ndarray
    dyn_content: np.ndarray
    dyn_style: np.ndarray
    dyn_weight: float = 1.0

    def __post_init__(self):
        self.content = as_video(self.content)
        self.style = as_video(self.style)
        self.dyn_content = as_video(self.dyn_content)
        self.dyn_style = as_video(self.dyn_style)
        if dims(self.dyn_content) != dims(self.content):
            raise ValueError("dyn_content must share (T, H, W) with content")
        if dims(self.dyn_style) != dims(self.style):
            raise ValueError("dyn_style must share (T, H, W) with style")
        if self.dyn_content.shape[3] != self.dyn_style.shape[3]:
            raise ValueError("dyn rasters must have the same channel count")
        if self.dyn_weight < 0:
            raise ValueError("dyn_weight must be nonnegative")


def child_seed(master: int, *keys: int) -> int:
    """Seed for one (level, stage, iteration) slot; independent of other slots."""
    ss = np.random.SeedSequence([int(master) & (2**64 - 1), *keys])
    return int(ss.generate_state(1, np.uint64)[0])


_NOISE_KEY = 0x6E6F


def output_dims(level_dims: Dims, cfg: GenerationConfig) -> Dims:
    scale = (cfg.output_time_scale, cfg.output_space_scale, cfg.output_space_scale)
    return tuple(
        max(round_half_up(d * s), p)
        for d, s, p in zip(level_dims, scale, cfg.patch_shape.as_tuple())
    )


def _em_level(
    guess: np.ndarray,
    make_bundle: Callable[[np.ndarray, int], QKVBundle],
    level: int,
    cfg: GenerationConfig,
    history: list | None,
    *,
    stage: int = 0,
    first_init: str | None = None,
    key_mask=None,
    post: Callable[[np.ndarray], np.ndarray] | None = None,
    record_bundles: bool = False,
) -> np.ndarray:
    shape = cfg.patch_shape
    nnf = None
    for it in range(cfg.em_iters_per_level):
        bundle = make_bundle(guess, it)
        params = replace(cfg.solver, seed=child_seed(cfg.seed, level, stage, it))
        if nnf is not None:
            init = nnf.targets
        elif first_init == "scaled":
            init = scaled_identity_targets(shape.grid(dims(bundle.q)), shape.grid(dims(bundle.k)))
        else:
            init = None
        guess, nnf = vpnn_step(
            bundle, shape, params, return_nnf=True, init_targets=init, key_mask=key_mask
        )
        if post is not None:
            guess = post(guess)
        if history is not None:
            history.append(
                StepRecord(level, it, stage, nnf.mean_distance(), nnf, params,
                           bundle if record_bundles else None)
            )
    return guess


def generate(
    x,
    cfg: GenerationConfig = GenerationConfig(),
    *,
    history: list | None = None,
    record_bundles: bool = False,
) -> np.ndarray:
    """Sample a new video with the space-time patch statistics of ``x``.

    The coarsest guess is the coarsest input level plus Gaussian noise that is
    replicated along time. The output is ``output_time_scale`` times as long as
    the input, which makes different regions draw their motion from
    different moments.
    """
    x = as_video(x)
    pyr = build_pyramid(x, cfg.scale_factor, cfg.min_dims)
    top = pyr.coarsest
    out = [output_dims(d, cfg) for d in pyr.level_dims]

    noise = replace(cfg.noise, seed=child_seed(cfg.seed, top, _NOISE_KEY))
    guess = add_noise(resize_video(pyr[top], out[top]), noise)
    xn = pyr[top]
    y = _em_level(guess, lambda g, it: QKVBundle(g, xn, xn), top, cfg, history,
                  record_bundles=record_bundles)

    for n in range(top - 1, -1, -1):
        guess = resize_video(y, out[n])
        y = _em_level(guess, _blur_matched(pyr[n], pyr[n + 1]), n, cfg, history,
                      record_bundles=record_bundles)
    return np.clip(y, 0.0, 1.0)


def _blur_matched(xn: np.ndarray, coarser: np.ndarray):
    k_first = resize_video(coarser, dims(xn))

    def make(g, it):
        return QKVBundle(g, k_first if it == 0 else xn, xn)

    return make


# -- analogies ----------------------------------------------------------------


def analogy(
    a: AnalogyInputs,
    cfg: GenerationConfig = GenerationConfig(),
    *,
    history: list | None = None,
    record_bundles: bool = False,
) -> np.ndarray:
    """Render the style video's appearance along the content video's dynamics.

    The coarsest level matches on dynamics only. Finer levels match on
    ``dyn || rgb``. The dyn channels are scaled by ``dyn_weight``, and the
    RGB part of the query is the upscaled previous output. No noise is
    injected.
    """
    shape = cfg.patch_shape
    c_dims = pyramid_dims(dims(a.content), cfg.scale_factor, cfg.min_dims)
    s_dims = pyramid_dims(dims(a.style), cfg.scale_factor, cfg.min_dims)
    top = min(len(c_dims), len(s_dims)) - 1
    c_dims, s_dims = c_dims[: top + 1], s_dims[: top + 1]

    s_levels = [a.style]
    for d in s_dims[1:]:
        s_levels.append(resize_video(s_levels[-1], d))
    dyn_c = [resize_nearest(a.dyn_content, d) for d in c_dims]
    dyn_s = [resize_nearest(a.dyn_style, d) for d in s_dims]

    n_dyn = a.dyn_content.shape[3]
    weights = np.concatenate(
        [np.full(n_dyn, a.dyn_weight, np.float32), np.ones(a.style.shape[3], np.float32)]
    )

    y = _em_level(
        dyn_c[top],
        lambda g, it: QKVBundle(dyn_c[top], dyn_s[top], s_levels[top]),
        top, cfg, history, record_bundles=record_bundles,
    )

    for n in range(top - 1, -1, -1):
        guess = resize_video(y, c_dims[n])
        k_first = np.concatenate([dyn_s[n], resize_video(s_levels[n + 1], s_dims[n])], axis=3)
        k_rest = np.concatenate([dyn_s[n], s_levels[n]], axis=3)

        def make(g, it, n=n, k_first=k_first, k_rest=k_rest):
            q = np.concatenate([dyn_c[n], g], axis=3)
            return QKVBundle(q, k_first if it == 0 else k_rest, s_levels[n], weights)

        y = _em_level(guess, make, n, cfg, history, record_bundles=record_bundles)
    return np.clip(y, 0.0, 1.0)


# -- retargeting ----------------------------------------------------------------


def retarget_stages(src: Dims, dst: Dims, ratio: float = RETARGET_STAGE_RATIO) -> list[Dims]:
    """Intermediate dims from ``src`` to ``dst``, each axis changing by at most ``ratio``."""
    n_stages = 1
    for s, d in zip(src, dst):
        r = max(d / s, s / d)
        if r > ratio:
            n_stages = max(n_stages, math.ceil(math.log(r) / math.log(ratio) - 1e-9))
    stages = []
    for j in range(1, n_stages):
        stages.append(tuple(round_half_up(s * (d / s) ** (j / n_stages)) for s, d in zip(src, dst)))
    stages.append(tuple(dst))
    return stages


def retarget(
    x,
    target_dims: Dims,
    cfg: GenerationConfig = GenerationConfig(),
    *,
    history: list | None = None,
) -> np.ndarray:
    """Resynthesize ``x`` at ``target_dims = (T', H', W')``.

    Every level's output follows the target aspect. Large changes at the
    coarsest level are reached in stages of at most 1.25x per axis. Each
    level's solve starts from the proportional (scaled identity) mapping.
    """
    x = as_video(x)
    target_dims = tuple(int(d) for d in target_dims)
    if len(target_dims) != 3 or any(
        d < p for d, p in zip(target_dims, cfg.patch_shape.as_tuple())
    ):
        raise ValueError(f"target dims {target_dims} must be >= the patch shape on every axis")
    pyr = build_pyramid(x, cfg.scale_factor, cfg.min_dims)
    top = pyr.coarsest
    ratio = [t / s for t, s in zip(target_dims, dims(x))]
    out = [
        tuple(max(round_half_up(d * r), p) for d, r, p in zip(ld, ratio, cfg.patch_shape.as_tuple()))
        for ld in pyr.level_dims
    ]
    out[0] = target_dims

    xn = pyr[top]
    y = xn
    for stage, sd in enumerate(retarget_stages(dims(xn), out[top])):
        y = _em_level(resize_video(y, sd), lambda g, it: QKVBundle(g, xn, xn), top, cfg,
                      history, stage=stage, first_init="scaled")

    for n in range(top - 1, -1, -1):
        y = _em_level(resize_video(y, out[n]), _blur_matched(pyr[n], pyr[n + 1]), n, cfg,
                      history, first_init="scaled")
    return np.clip(y, 0.0, 1.0)


# -- inpainting ---------------------------------------------------------------


def _as_mask(m, shape) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim == 4:
        if m.shape[3] != 1:
            raise ValueError("inpainting mask must have a single channel")
        m = m[..., 0]
    if m.shape != tuple(shape):
        raise ValueError(f"mask dims {m.shape} do not match video dims {tuple(shape)}")
    if not np.isin(m, (0, 1)).all():
        raise ValueError("mask values must be 0 or 1")
    return m.astype(bool)


def valid_key_patches(hole: np.ndarray, shape: PatchShape) -> np.ndarray:
    """Boolean key-grid mask of patches that do not touch the hole."""
    win = sliding_window_view(hole, shape.as_tuple())
    return ~win.any(axis=(3, 4, 5))


def inpaint(
    x,
    mask,
    cfg: GenerationConfig = GenerationConfig(),
    *,
    history: list | None = None,
) -> np.ndarray:
    """Fill the voxels where ``mask == 1`` using patches from the rest of ``x``.

    Key patches touching the hole are never used. After every fold the known
    voxels are reset to their input values, and the result equals ``x``
    exactly outside the hole.
    """
    x = as_video(x)
    hole = _as_mask(mask, dims(x))
    if not hole.any():
        return x.copy()
    if hole.all():
        raise UnsatisfiableConstraintError("the mask covers the whole video")
    shape = cfg.patch_shape
    pyr = build_pyramid(x, cfg.scale_factor, cfg.min_dims)
    top = pyr.coarsest

    holes = [hole]
    for d in pyr.level_dims[1:]:
        holes.append(resize_video(hole.astype(np.float32), d)[..., 0] > 0.5)
    key_masks = []
    for n, h in enumerate(holes):
        km = valid_key_patches(h, shape)
        if not km.any():
            raise UnsatisfiableConstraintError(
                f"every key patch at pyramid level {n} overlaps the hole"
            )
        key_masks.append(km)

    def conditioner(n):
        known = ~holes[n][..., None]
        xn = pyr[n]

        def post(g):
            return np.where(known, xn, g).astype(np.float32)

        return post

    xn = pyr[top]
    guess = xn.copy()
    known = ~holes[top]
    guess[holes[top]] = xn[known].mean(axis=0)
    y = _em_level(guess, lambda g, it: QKVBundle(g, xn, xn), top, cfg, history,
                  key_mask=key_masks[top], post=conditioner(top))

    for n in range(top - 1, -1, -1):
        guess = conditioner(n)(resize_video(y, pyr.level_dims[n]))
        y = _em_level(guess, lambda g, it, n=n: QKVBundle(g, pyr[n], pyr[n]), n, cfg, history,
                      key_mask=key_masks[n], post=conditioner(n))

    y = np.clip(y, 0.0, 1.0)
    y[~hole] = x[~hole]
    return y
