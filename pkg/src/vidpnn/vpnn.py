"""One patch-nearest-neighbour layer: unfold, match, replace, fold.

The public ``unfold`` / ``replace`` / ``fold_median`` functions materialise
patch sets and are meant for small inputs and tests. ``vpnn_step`` never
builds a patch set; it folds straight from the NNF and the value video, which
gives the same result as ``fold_median(replace(nnf, V, shape), ...)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange
from numpy.lib.stride_tricks import sliding_window_view

from .nnf import NNField, PatchShape, SolverParams, patchmatch_nnf
from .video import as_video, dims


@dataclass
class QKVBundle:
    """Query, key and value videos for one step.

    Distances are measured between ``q`` and ``k`` after scaling each channel
    by ``channel_weights``; copied content always comes from ``v``.
    """

    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    channel_weights: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.q = as_video(self.q)
        self.k = as_video(self.k)
        self.v = as_video(self.v)
        if self.q.shape[3] != self.k.shape[3]:
            raise ValueError(
                f"Q has {self.q.shape[3]} channels but K has {self.k.shape[3]}"
            )
        if dims(self.k) != dims(self.v):
            raise ValueError(f"K dims {dims(self.k)} != V dims {dims(self.v)}")
        if self.channel_weights is None:
            self.channel_weights = np.ones(self.q.shape[3], dtype=np.float32)
        w = np.asarray(self.channel_weights, dtype=np.float32).ravel()
        if w.shape[0] != self.q.shape[3]:
            raise ValueError(f"{w.shape[0]} channel weights for {self.q.shape[3]} channels")
        if (w < 0).any():
            raise ValueError("channel weights must be nonnegative")
        self.channel_weights = w

    def weighted(self) -> tuple[np.ndarray, np.ndarray]:
        """Q and K as seen by the distance.

        Zero-weight channels are dropped rather than zeroed so the distance
        sums are identical to a call that never had those channels.
        """
        w = self.channel_weights
        if np.all(w == 1):
            return self.q, self.k
        keep = w > 0
        if not keep.any():
            zeros = lambda a: np.zeros(a.shape[:3] + (1,), np.float32)  # noqa: E731
            return zeros(self.q), zeros(self.k)
        q, k = self.q[..., keep], self.k[..., keep]
        w = w[keep]
        if np.all(w == 1):
            return np.ascontiguousarray(q), np.ascontiguousarray(k)
        return q * w, k * w


# -- patch sets ---------------------------------------------------------------


def unfold(v, shape: PatchShape) -> np.ndarray:
    """All valid patches of ``v`` as a ``(G_T, G_H, G_W, p_T*p_H*p_W*C)`` copy."""
    v = as_video(v)
    grid = shape.grid(dims(v))
    win = sliding_window_view(v, shape.as_tuple(), axis=(0, 1, 2))
    # window axes come last after the channel axis; reorder to (pt, ph, pw, c)
    win = np.moveaxis(win, 3, -1)
    return np.ascontiguousarray(win.reshape(grid + (-1,)))


def replace(nnf: NNField, v, shape: PatchShape) -> np.ndarray:
    """Patch set whose cell ``i`` is the V patch at ``nnf.targets[i]``."""
    v = as_video(v)
    vgrid = shape.grid(dims(v))
    tgt = nnf.targets
    if tgt.ndim != 4 or tgt.shape[3] != 3:
        raise ValueError(f"targets must have shape (G_T, G_H, G_W, 3), got {tgt.shape}")
    if (tgt < 0).any() or (tgt >= np.asarray(vgrid)).any():
        raise ValueError(f"NNF targets fall outside V's patch grid {vgrid}")
    patches = unfold(v, shape)
    return patches[tgt[..., 0], tgt[..., 1], tgt[..., 2]]


@njit(cache=True)
def _select(buf, n, kth):
    # in-place quickselect: after return buf[kth] is the kth smallest of buf[:n]
    lo = 0
    hi = n - 1
    while lo < hi:
        pivot = buf[(lo + hi) // 2]
        i = lo
        j = hi
        while i <= j:
            while buf[i] < pivot:
                i += 1
            while buf[j] > pivot:
                j -= 1
            if i <= j:
                tmp = buf[i]
                buf[i] = buf[j]
                buf[j] = tmp
                i += 1
                j -= 1
        if kth <= j:
            hi = j
        elif kth >= i:
            lo = i
        else:
            break
    return buf[kth]


@njit(cache=True, parallel=True)
def _fold_patches(patches, T, H, W, C, pt, ph, pw, out):
    GT, GH, GW = patches.shape[0], patches.shape[1], patches.shape[2]
    for row in prange(T * H):
        t = row // H
        h = row % H
        buf = np.empty(pt * ph * pw, dtype=np.float32)
        for w in range(W):
            for c in range(C):
                n = 0
                for dt in range(pt):
                    ot = t - dt
                    if ot < 0 or ot >= GT:
                        continue
                    for dh in range(ph):
                        oh = h - dh
                        if oh < 0 or oh >= GH:
                            continue
                        for dw in range(pw):
                            ow = w - dw
                            if ow < 0 or ow >= GW:
                                continue
                            buf[n] = patches[ot, oh, ow, ((dt * ph + dh) * pw + dw) * C + c]
                            n += 1
                out[t, h, w, c] = _select(buf, n, (n - 1) // 2)


@njit(cache=True, parallel=True)
def _fold_field(v, tgt, T, H, W, pt, ph, pw, out):
    GT, GH, GW = tgt.shape[0], tgt.shape[1], tgt.shape[2]
    C = v.shape[3]
    for row in prange(T * H):
        t = row // H
        h = row % H
        buf = np.empty((C, pt * ph * pw), dtype=np.float32)
        for w in range(W):
            n = 0
            for dt in range(pt):
                ot = t - dt
                if ot < 0 or ot >= GT:
                    continue
                for dh in range(ph):
                    oh = h - dh
                    if oh < 0 or oh >= GH:
                        continue
                    for dw in range(pw):
                        ow = w - dw
                        if ow < 0 or ow >= GW:
                            continue
                        st = tgt[ot, oh, ow, 0] + dt
                        sh = tgt[ot, oh, ow, 1] + dh
                        sw = tgt[ot, oh, ow, 2] + dw
                        for c in range(C):
                            buf[c, n] = v[st, sh, sw, c]
                        n += 1
            for c in range(C):
                out[t, h, w, c] = _select(buf[c], n, (n - 1) // 2)


def fold_median(patches, out_dims, shape: PatchShape) -> np.ndarray:
    """Fold a patch set back into a video by per-channel lower-median voting.

    Every voxel takes the lower median of the values that all covering
    patches suggest for it.
    """
    patches = np.ascontiguousarray(patches, dtype=np.float32)
    out_dims = tuple(int(d) for d in out_dims)
    grid = shape.grid(out_dims)
    if patches.ndim != 4 or patches.shape[:3] != grid:
        raise ValueError(f"patch grid {patches.shape[:3]} inconsistent with dims {out_dims}")
    if patches.shape[3] % shape.volume:
        raise ValueError(f"patch length {patches.shape[3]} is not a multiple of {shape.volume}")
    C = patches.shape[3] // shape.volume
    out = np.empty(out_dims + (C,), dtype=np.float32)
    _fold_patches(patches, *out_dims, C, *shape.as_tuple(), out)
    return out


def fold_field(nnf: NNField, v, shape: PatchShape) -> np.ndarray:
    """Fused ``fold_median(replace(nnf, v, shape))`` without the patch set."""
    v = as_video(v)
    vgrid = shape.grid(dims(v))
    tgt = np.ascontiguousarray(nnf.targets, dtype=np.int32)
    if (tgt < 0).any() or (tgt >= np.asarray(vgrid)).any():
        raise ValueError(f"NNF targets fall outside V's patch grid {vgrid}")
    out_dims = tuple(g + p - 1 for g, p in zip(tgt.shape[:3], shape.as_tuple()))
    out = np.empty(out_dims + (v.shape[3],), dtype=np.float32)
    _fold_field(v, tgt, *out_dims, *shape.as_tuple(), out)
    return out


def solve(bundle: QKVBundle, shape: PatchShape, params: SolverParams, **kwargs) -> NNField:
    """NNF between the weighted query and key of ``bundle``."""
    q, k = bundle.weighted()
    return patchmatch_nnf(q, k, shape, params, **kwargs)


def vpnn_step(
    bundle: QKVBundle,
    shape: PatchShape = PatchShape(),
    params: SolverParams = SolverParams(),
    *,
    return_nnf: bool = False,
    **solver_kwargs,
):
    """Replace every query patch by the value patch of its nearest key patch.

    Returns a video with Q's space-time dims and V's channels, or
    ``(video, nnf)`` when ``return_nnf`` is set. Extra keyword arguments
    (``key_mask``, ``init_targets``, ``trace``) go to the solver.
    """
    nnf = solve(bundle, shape, params, **solver_kwargs)
    out = fold_field(nnf, bundle.v, shape)
    return (out, nnf) if return_nnf else out
