"""Nearest-neighbour fields between space-time patches.

Two solvers share one SSD kernel: an exhaustive search used as the oracle
and a randomized PatchMatch solver (propagation + shrinking random search).
Patches are valid-only: a video of dims ``D`` with patch shape ``p`` has a
patch grid of ``D - p + 1`` cells per axis, indexed by the patch origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from numba import njit, prange

from .video import as_video, dims


@dataclass(frozen=True)
class PatchShape:
    p_t: int = 3
    p_h: int = 7
    p_w: int = 7

    def __post_init__(self):
        if min(self.as_tuple()) < 1:
            raise ValueError(f"patch shape must be >= 1 on every axis, got {self.as_tuple()}")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.p_t, self.p_h, self.p_w)

    @property
    def volume(self) -> int:
        return self.p_t * self.p_h * self.p_w

    def grid(self, video_dims) -> tuple[int, int, int]:
        """Patch-grid dims for a video of ``video_dims``; raises if it does not fit."""
        g = tuple(int(d) - p + 1 for d, p in zip(video_dims[:3], self.as_tuple()))
        if min(g) < 1:
            raise ValueError(
                f"patch shape {self.as_tuple()} does not fit video dims {tuple(video_dims[:3])}"
            )
        return g


@dataclass(frozen=True)
class SolverParams:
    """PatchMatch settings. ``init`` is ``"random"`` or ``"identity"``."""

    iterations: int = 5
    alpha: float = 0.5
    init: str = "random"
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.init not in ("random", "identity"):
            raise ValueError(f"init must be 'random' or 'identity', got {self.init!r}")


@dataclass
class NNField:
    """Per query patch: target origin in the key patch grid and its exact SSD.

    ``targets`` has shape ``(G_T, G_H, G_W, 3)`` (int32), ``distances`` has
    shape ``(G_T, G_H, G_W)`` (float64).
    """

    targets: np.ndarray
    distances: np.ndarray

    @property
    def grid(self) -> tuple[int, int, int]:
        return tuple(self.distances.shape)

    def mean_distance(self) -> float:
        return float(self.distances.mean())

    def copy(self) -> "NNField":
        return NNField(self.targets.copy(), self.distances.copy())


# -- kernels ------------------------------------------------------------------


@njit(cache=True, fastmath=True)
def _row_ssd(qf, qb, kf, kb, n):
    s = np.float32(0.0)
    for j in range(n):
        d = qf[qb + j] - kf[kb + j]
        s += d * d
    return s


@njit(cache=True)
def _ssd(q, qt, qh, qw, k, kt, kh, kw, pt, ph, pw, bound):
    # q, k: contiguous (T, H, W, C) float32. Rows are summed in a fixed order
    # and the sum bails out once it reaches ``bound``; a bailed-out value is
    # never strictly below ``bound``.
    C = q.shape[3]
    qH, qW = q.shape[1], q.shape[2]
    kH, kW = k.shape[1], k.shape[2]
    qf = q.ravel()
    kf = k.ravel()
    row = pw * C
    acc = 0.0
    for dt in range(pt):
        qb = (((qt + dt) * qH + qh) * qW + qw) * C
        kb = (((kt + dt) * kH + kh) * kW + kw) * C
        for dh in range(ph):
            acc += _row_ssd(qf, qb + dh * qW * C, kf, kb + dh * kW * C, row)
            if acc >= bound:
                return acc
    return acc


@njit(cache=True, parallel=True)
def _eval_field(q, k, tgt, pt, ph, pw, out):
    GT, GH, GW = out.shape
    for i in prange(GT * GH * GW):
        t = i // (GH * GW)
        h = (i // GW) % GH
        w = i % GW
        out[t, h, w] = _ssd(
            q, t, h, w, k, tgt[t, h, w, 0], tgt[t, h, w, 1], tgt[t, h, w, 2],
            pt, ph, pw, np.inf,
        )


@njit(cache=True, parallel=True)
def _brute_force(q, k, pt, ph, pw, kvalid, tgt, dist):
    GT, GH, GW = dist.shape
    KT, KH, KW = kvalid.shape
    for i in prange(GT * GH * GW):
        t = i // (GH * GW)
        h = (i // GW) % GH
        w = i % GW
        best = np.inf
        bt = -1
        bh = -1
        bw = -1
        for a in range(KT):
            for b in range(KH):
                for c in range(KW):
                    if not kvalid[a, b, c]:
                        continue
                    d = _ssd(q, t, h, w, k, a, b, c, pt, ph, pw, best)
                    if d < best:
                        best = d
                        bt = a
                        bh = b
                        bw = c
        tgt[t, h, w, 0] = bt
        tgt[t, h, w, 1] = bh
        tgt[t, h, w, 2] = bw
        dist[t, h, w] = best


@njit(cache=True)
def _try(q, k, t, h, w, ct, ch, cw, pt, ph, pw, kvalid, tgt, dist):
    KT, KH, KW = kvalid.shape
    if ct < 0 or ch < 0 or cw < 0 or ct >= KT or ch >= KH or cw >= KW:
        return
    if not kvalid[ct, ch, cw]:
        return
    if ct == tgt[t, h, w, 0] and ch == tgt[t, h, w, 1] and cw == tgt[t, h, w, 2]:
        return
    d = _ssd(q, t, h, w, k, ct, ch, cw, pt, ph, pw, dist[t, h, w])
    if d < dist[t, h, w]:
        dist[t, h, w] = d
        tgt[t, h, w, 0] = ct
        tgt[t, h, w, 1] = ch
        tgt[t, h, w, 2] = cw


@njit(cache=True)
def _sweep(q, k, pt, ph, pw, kvalid, tgt, dist, reverse, radii, seed):
    np.random.seed(seed)
    GT, GH, GW = dist.shape
    KT, KH, KW = kvalid.shape
    n = GT * GH * GW
    s = 1
    if reverse:
        s = -1
    for ii in range(n):
        i = n - 1 - ii if reverse else ii
        t = i // (GH * GW)
        h = (i // GW) % GH
        w = i % GW
        # propagation: the already-visited neighbour's target, shifted by one
        nt = t - s
        if 0 <= nt < GT:
            _try(q, k, t, h, w, tgt[nt, h, w, 0] + s, tgt[nt, h, w, 1], tgt[nt, h, w, 2],
                 pt, ph, pw, kvalid, tgt, dist)
        nh = h - s
        if 0 <= nh < GH:
            _try(q, k, t, h, w, tgt[t, nh, w, 0], tgt[t, nh, w, 1] + s, tgt[t, nh, w, 2],
                 pt, ph, pw, kvalid, tgt, dist)
        nw = w - s
        if 0 <= nw < GW:
            _try(q, k, t, h, w, tgt[t, h, nw, 0], tgt[t, h, nw, 1], tgt[t, h, nw, 2] + s,
                 pt, ph, pw, kvalid, tgt, dist)
        # random search in a shrinking cube around the current best, cut to the grid
        for r in radii:
            ct = tgt[t, h, w, 0]
            ch = tgt[t, h, w, 1]
            cw = tgt[t, h, w, 2]
            a0 = max(ct - r, 0)
            a1 = min(ct + r, KT - 1)
            b0 = max(ch - r, 0)
            b1 = min(ch + r, KH - 1)
            c0 = max(cw - r, 0)
            c1 = min(cw + r, KW - 1)
            _try(q, k, t, h, w,
                 np.random.randint(a0, a1 + 1),
                 np.random.randint(b0, b1 + 1),
                 np.random.randint(c0, c1 + 1),
                 pt, ph, pw, kvalid, tgt, dist)


# -- public API -----------------------------------------------------------------


def _prepare(q, k, shape: PatchShape):
    q = as_video(q)
    k = as_video(k)
    if q.shape[3] != k.shape[3]:
        raise ValueError(f"query has {q.shape[3]} channels but key has {k.shape[3]}")
    qgrid = shape.grid(dims(q))
    kgrid = shape.grid(dims(k))
    return q, k, qgrid, kgrid


def _key_valid(key_mask, kgrid):
    if key_mask is None:
        return np.ones(kgrid, dtype=np.bool_)
    key_mask = np.asarray(key_mask, dtype=np.bool_)
    if key_mask.shape != tuple(kgrid):
        raise ValueError(f"key mask shape {key_mask.shape} != key grid {kgrid}")
    if not key_mask.any():
        raise ValueError("key mask excludes every key patch")
    return np.ascontiguousarray(key_mask)


def search_radii(kgrid, alpha: float) -> np.ndarray:
    """Random-search radii ``w * alpha**i`` (w = largest key-grid dim) while >= 1."""
    w = float(max(kgrid))
    radii = []
    r = w
    while r >= 1.0:
        radii.append(int(r))
        r *= alpha
    return np.asarray(radii, dtype=np.int64)


def patch_distance(q, q_pos, k, k_pos, shape: PatchShape) -> float:
    """Exact SSD between the query patch at ``q_pos`` and the key patch at ``k_pos``."""
    q, k, qgrid, kgrid = _prepare(q, k, shape)
    for pos, grid, name in ((q_pos, qgrid, "query"), (k_pos, kgrid, "key")):
        if len(pos) != 3 or any(not 0 <= int(p) < g for p, g in zip(pos, grid)):
            raise ValueError(f"{name} position {tuple(pos)} outside patch grid {grid}")
    return float(_ssd(q, int(q_pos[0]), int(q_pos[1]), int(q_pos[2]),
                      k, int(k_pos[0]), int(k_pos[1]), int(k_pos[2]),
                      shape.p_t, shape.p_h, shape.p_w, np.inf))


def field_distances(q, k, targets, shape: PatchShape) -> np.ndarray:
    """Recompute the exact SSD of every query patch against its stored target."""
    q, k, qgrid, kgrid = _prepare(q, k, shape)
    targets = np.ascontiguousarray(targets, dtype=np.int32)
    if targets.shape != tuple(qgrid) + (3,):
        raise ValueError(f"targets shape {targets.shape} does not match query grid {qgrid}")
    if (targets < 0).any() or (targets >= np.asarray(kgrid)).any():
        raise ValueError("target coordinate outside the key patch grid")
    out = np.empty(qgrid, dtype=np.float64)
    _eval_field(q, k, targets, shape.p_t, shape.p_h, shape.p_w, out)
    return out


def brute_force_nnf(q, k, shape: PatchShape, *, key_mask=None) -> NNField:
    """Exhaustive 1-NN field. Ties go to the lexicographically smallest key origin."""
    q, k, qgrid, kgrid = _prepare(q, k, shape)
    kvalid = _key_valid(key_mask, kgrid)
    tgt = np.empty(qgrid + (3,), dtype=np.int32)
    dist = np.empty(qgrid, dtype=np.float64)
    _brute_force(q, k, shape.p_t, shape.p_h, shape.p_w, kvalid, tgt, dist)
    return NNField(tgt, dist)


def identity_targets(grid) -> np.ndarray:
    return np.ascontiguousarray(
        np.stack(np.meshgrid(*[np.arange(g) for g in grid], indexing="ij"), axis=-1),
        dtype=np.int32,
    )


def scaled_identity_targets(qgrid, kgrid) -> np.ndarray:
    """Map each query cell to the proportionally corresponding key cell."""
    axes = []
    for gq, gk in zip(qgrid, kgrid):
        x = (np.arange(gq) + 0.5) * (gk / gq) - 0.5
        axes.append(np.clip(np.floor(x + 0.5), 0, gk - 1).astype(np.int32))
    return np.ascontiguousarray(np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1))


def _sweep_seed(seed: int, sweep: int) -> int:
    return int(np.random.SeedSequence([int(seed) & (2**64 - 1), sweep]).generate_state(1)[0])


def patchmatch_nnf(
    q,
    k,
    shape: PatchShape,
    params: SolverParams = SolverParams(),
    *,
    key_mask=None,
    init_targets=None,
    trace: list | None = None,
) -> NNField:
    """Approximate 1-NN field with randomized PatchMatch.

    Parameters
    ----------
    q, k
        Query and key videos with equal channel counts.
    shape
        Patch shape shared by both.
    params
        Iteration count, random-search decay, init mode and seed.
    key_mask
        Optional boolean array over the key grid; ``False`` cells are never
        used as targets.
    init_targets
        Optional ``(G_T, G_H, G_W, 3)`` starting targets (warm start). Overrides
        ``params.init``.
    trace
        If given, receives a copy of the distance array after initialisation
        and after every sweep.

    Sweep ``i`` scans forward for even ``i`` and backward for odd ``i``. A
    proposal is accepted only if it strictly lowers the distance, so the
    per-cell distance never increases. The result depends only on the
    inputs and ``params.seed``.
    """
    q, k, qgrid, kgrid = _prepare(q, k, shape)
    kvalid = _key_valid(key_mask, kgrid)

    if init_targets is not None:
        tgt = np.array(init_targets, dtype=np.int32, copy=True)
        if tgt.shape != tuple(qgrid) + (3,):
            raise ValueError(f"init targets shape {tgt.shape} does not match query grid {qgrid}")
        if (tgt < 0).any() or (tgt >= np.asarray(kgrid)).any():
            raise ValueError("init target outside the key patch grid")
        if key_mask is not None and not kvalid[tgt[..., 0], tgt[..., 1], tgt[..., 2]].all():
            raise ValueError("init target lands on a masked key patch")
    elif params.init == "identity":
        if tuple(qgrid) != tuple(kgrid):
            raise ValueError(f"identity init needs equal grids, got {qgrid} and {kgrid}")
        tgt = identity_targets(qgrid)
        if key_mask is not None and not kvalid.all():
            raise ValueError("identity init is incompatible with a key mask")
    else:
        rng = np.random.default_rng(params.seed)
        valid = np.flatnonzero(kvalid.ravel())
        pick = valid[rng.integers(0, len(valid), size=int(np.prod(qgrid)))]
        tgt = np.stack(np.unravel_index(pick, kgrid), axis=-1).reshape(qgrid + (3,))
        tgt = np.ascontiguousarray(tgt, dtype=np.int32)

    dist = np.empty(qgrid, dtype=np.float64)
    _eval_field(q, k, tgt, shape.p_t, shape.p_h, shape.p_w, dist)
    if trace is not None:
        trace.append(dist.copy())

    radii = search_radii(kgrid, params.alpha)
    for it in range(params.iterations):
        _sweep(q, k, shape.p_t, shape.p_h, shape.p_w, kvalid, tgt, dist,
               it % 2 == 1, radii, _sweep_seed(params.seed, it) & 0xFFFFFFFF)
        if trace is not None:
            trace.append(dist.copy())
    return NNField(tgt, dist)


def set_threads(n: int | None) -> int:
    """Cap numba's worker pool; returns the count in effect."""
    if n is not None:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
    return numba.get_num_threads()
