"""Quality metrics and the runtime benchmark."""

from __future__ import annotations

import time

import numpy as np

from .nnf import PatchShape, SolverParams, brute_force_nnf, patchmatch_nnf
from .video import as_video, dims

# brute force re-verification budget, in query x key patch pairs
EXACT_PAIR_LIMIT = 2 * 10**7


def coherence(
    output,
    source,
    shape: PatchShape = PatchShape(),
    *,
    seed: int = 0,
    exact_pair_limit: int = EXACT_PAIR_LIMIT,
) -> float:
    """Mean over output patches of the smallest SSD to any source patch.

    Each SSD is divided by the patch element count (voxels x channels).
    Minima come from an 8-sweep PatchMatch solve, which gives an upper
    bound; when the problem is small enough they are replaced by exact
    brute-force minima.
    """
    output = as_video(output)
    source = as_video(source)
    qgrid = shape.grid(dims(output))
    kgrid = shape.grid(dims(source))
    n_pairs = int(np.prod(qgrid)) * int(np.prod(kgrid))
    if n_pairs <= exact_pair_limit:
        d = brute_force_nnf(output, source, shape).distances
    else:
        init = "identity" if qgrid == kgrid else "random"
        d = patchmatch_nnf(output, source, shape, SolverParams(8, 0.5, init, seed)).distances
    return float(d.mean() / (shape.volume * output.shape[3]))


def diversity(samples) -> float:
    """Mean over voxels and channels of the population std across samples."""
    arr = np.stack([as_video(s) for s in samples])
    if arr.shape[0] < 1:
        raise ValueError("need at least one sample")
    return float(arr.std(axis=0).mean())


def pairwise_mean_abs_diff(samples) -> np.ndarray:
    arr = [as_video(s) for s in samples]
    n = len(arr)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = float(np.abs(arr[i] - arr[j]).mean())
    return out


def bench(resolutions, cfg=None, *, frames: int = 13, make_input=None, warmup: bool = True) -> dict:
    """Time ``generate`` at each ``(H, W)`` and fit the log-log slope of time vs voxels.

    ``make_input(T, H, W)`` builds the input clip; by default a seeded
    smooth random texture.
    """
    from .pipeline import GenerationConfig, generate

    resolutions = [tuple(int(v) for v in r) for r in resolutions]
    if not resolutions:
        raise ValueError("bench needs at least one resolution")
    cfg = cfg or GenerationConfig()
    make_input = make_input or _bench_clip
    if warmup:
        generate(make_input(frames, *cfg.min_dims[1:]), cfg)
    runs = []
    for h, w in resolutions:
        x = make_input(frames, h, w)
        t0 = time.perf_counter()
        generate(x, cfg)
        runs.append({"height": h, "width": w, "frames": frames,
                     "voxels": frames * h * w, "seconds": time.perf_counter() - t0})
    report = {"schema": 1, "runs": runs}
    if len(runs) >= 2:
        lv = np.log([r["voxels"] for r in runs])
        lt = np.log([r["seconds"] for r in runs])
        report["slope"] = float(np.polyfit(lv, lt, 1)[0])
    return report


def _bench_clip(t, h, w, seed=0):
    from scipy.ndimage import gaussian_filter

    rng = np.random.default_rng(seed)
    base = gaussian_filter(rng.random((h, w + t, 3)), sigma=(2, 2, 0), mode="wrap")
    base = (base - base.min()) / (np.ptp(base) + 1e-12)
    return np.stack([base[:, i : i + w] for i in range(t)]).astype(np.float32)
