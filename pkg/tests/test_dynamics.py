import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vidpnn.dynamics import (
    FlowFormatError,
    dyn,
    dyn_levels,
    dyn_pair,
    estimate_flow_magnitude,
    flow_magnitude,
    kmeans_quantize,
    load_flo,
    read_flo,
    write_flo,
)

from clips import random_video, shifting_texture, two_region_clip


def best_two_partition(values):
    """Exhaustive search over split points of the sorted values."""
    x = np.sort(np.asarray(values, np.float64))
    best = None
    for i in range(1, len(x)):
        lo, hi = x[:i], x[i:]
        cost = ((lo - lo.mean()) ** 2).sum() + ((hi - hi.mean()) ** 2).sum()
        if best is None or cost < best[0]:
            best = (cost, (lo.mean(), hi.mean()))
    return best


def kmeans_cost(x, q):
    x = np.asarray(x, np.float64).ravel()
    return float(((x - q.centroids[q.labels.ravel().astype(int)]) ** 2).sum())


# -- flow estimation ----------------------------------------------------------------


def test_static_video_has_zero_flow():
    v = np.repeat(random_video((1, 32, 40, 3)), 4, axis=0)
    m = estimate_flow_magnitude(v)
    assert m.shape == (4, 32, 40, 1)
    assert np.all(m == 0)


@pytest.mark.parametrize("max_disp", [2, 3, 6])
def test_global_shift_interior_is_exact(max_disp):
    v = shifting_texture(T=4, shift=2)
    m = estimate_flow_magnitude(v, window=7, max_disp=max_disp)
    b = 7 // 2 + max_disp
    assert np.all(m[:, b:-b, b:-b] == 2.0)


def test_last_frame_repeats_previous():
    m = estimate_flow_magnitude(shifting_texture(T=3))
    assert np.array_equal(m[2], m[1])


def test_two_regions_separate_after_quantization():
    v = two_region_clip()
    q = kmeans_quantize(estimate_flow_magnitude(v), 2)
    lab = q.labels[:4, 5:-5, :, 0]
    left, right = lab[:, :, 5:27], lab[:, :, 37:-5]
    acc = ((left == 0).sum() + (right == 1).sum()) / (left.size + right.size)
    assert acc >= 0.95


def test_flow_argument_validation():
    v = random_video((3, 10, 10, 1))
    with pytest.raises(ValueError):
        estimate_flow_magnitude(v, window=11)
    with pytest.raises(ValueError):
        estimate_flow_magnitude(v, max_disp=-1)


def test_single_frame_gives_zero():
    assert np.all(estimate_flow_magnitude(random_video((1, 12, 12, 3))) == 0)


# -- .flo -------------------------------------------------------------------------


def test_flo_zero_and_345(tmp_path):
    write_flo(tmp_path / "a.flo", np.zeros((5, 6)), np.zeros((5, 6)))
    write_flo(tmp_path / "b.flo", np.full((5, 6), 3.0), np.full((5, 6), 4.0))
    m = load_flo([tmp_path / "a.flo", tmp_path / "b.flo"])
    assert m.shape == (3, 5, 6, 1)
    assert np.all(m[0] == 0)
    assert np.all(m[1] == 5.0) and np.all(m[2] == 5.0)


def test_flo_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    u, v = rng.normal(size=(2, 7, 9)).astype(np.float32) * 4
    write_flo(tmp_path / "f.flo", u, v)
    back = read_flo(tmp_path / "f.flo")
    assert np.array_equal(back[..., 0], u) and np.array_equal(back[..., 1], v)
    m = load_flo([tmp_path / "f.flo"])[0, ..., 0]
    assert np.allclose(m, np.hypot(u, v), atol=1e-6, rtol=0)


def test_flo_layout_is_interleaved_little_endian(tmp_path):
    write_flo(tmp_path / "f.flo", [[1.0, 2.0]], [[3.0, 4.0]])
    data = (tmp_path / "f.flo").read_bytes()
    assert data[:4] == b"PIEH"
    assert np.frombuffer(data[4:12], "<i4").tolist() == [2, 1]
    assert np.frombuffer(data[12:], "<f4").tolist() == [1.0, 3.0, 2.0, 4.0]


def test_flo_errors(tmp_path):
    bad = tmp_path / "bad.flo"
    bad.write_bytes(b"XXXX" + np.array([2, 2], "<i4").tobytes() + b"\0" * 32)
    with pytest.raises(FlowFormatError, match="magic"):
        read_flo(bad)
    short = tmp_path / "short.flo"
    short.write_bytes(b"PIEH" + np.array([4, 4], "<i4").tobytes() + b"\0" * 8)
    with pytest.raises(FlowFormatError, match="truncated"):
        read_flo(short)
    write_flo(tmp_path / "a.flo", np.zeros((4, 4)), np.zeros((4, 4)))
    write_flo(tmp_path / "b.flo", np.zeros((4, 5)), np.zeros((4, 5)))
    with pytest.raises(FlowFormatError, match="differ"):
        load_flo([tmp_path / "a.flo", tmp_path / "b.flo"])
    with pytest.raises(FlowFormatError, match="do not match"):
        flow_magnitude(random_video((3, 4, 6, 3)), [tmp_path / "a.flo"] * 2)


# -- k-means ------------------------------------------------------------------------


def test_kmeans_worked_example():
    x = np.array([0, 0, 1, 1, 10, 10], np.float64)
    q = kmeans_quantize(x, 2)
    assert q.centroids.tolist() == [0.5, 10.0]
    assert q.labels.tolist() == [0, 0, 0, 0, 1, 1]
    cost, cents = best_two_partition(x)
    assert tuple(q.centroids) == cents
    assert kmeans_cost(x, q) == pytest.approx(cost)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 40), min_size=4, max_size=12), st.integers(0, 1000))
def test_kmeans_two_clusters_match_exhaustive_oracle(values, seed):
    x = np.asarray(values, np.float64) / 4
    if len(np.unique(x)) < 2:
        return
    q = kmeans_quantize(x, 2, seed=seed)
    cost, _ = best_two_partition(x)
    # Lloyd can stop in a local optimum; on 1-D data it never beats the oracle
    assert kmeans_cost(x, q) >= cost - 1e-9
    assert kmeans_cost(x, q) <= ((x - x.mean()) ** 2).sum() + 1e-9


@pytest.mark.parametrize("k", [1, 3, 5])
def test_kmeans_constant_input(k):
    q = kmeans_quantize(np.full((3, 4, 5), 2.5), k)
    assert q.centroids.tolist() == [2.5]
    assert np.all(q.labels == 0)
    assert q.labels.shape == (3, 4, 5, 1)


def test_kmeans_single_cluster_is_mean():
    x = np.random.default_rng(1).random(100)
    assert kmeans_quantize(x, 1).centroids[0] == pytest.approx(x.mean())


def test_kmeans_k_equals_distinct_count():
    x = np.array([0.0, 0.0, 1.5, 3.0, 3.0, 7.25])
    q = kmeans_quantize(x, 4)
    assert q.centroids.tolist() == [0.0, 1.5, 3.0, 7.25]
    assert np.array_equal(q.values(), x.astype(np.float32))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 20, allow_nan=False), min_size=1, max_size=60), st.integers(1, 6),
       st.integers(0, 99))
def test_kmeans_labels_are_fixed_point(values, k, seed):
    x = np.asarray(values)
    q = kmeans_quantize(x, k, seed=seed)
    assert np.all(np.diff(q.centroids) > 0)
    d = np.abs(x[:, None] - q.centroids[None, :])
    lab = q.labels.astype(int)
    assert np.all(d[np.arange(len(x)), lab] <= d.min(axis=1) + 1e-12)
    # each centroid is the mean of its members
    for j, c in enumerate(q.centroids):
        assert c == pytest.approx(x[lab == j].mean(), rel=1e-5, abs=1e-9)


def test_kmeans_errors():
    with pytest.raises(ValueError):
        kmeans_quantize([1.0, 2.0], 0)
    with pytest.raises(ValueError):
        kmeans_quantize([], 2)


def test_kmeans_seeded():
    x = np.random.default_rng(3).random(500) * 8
    a, b = kmeans_quantize(x, 5, seed=4), kmeans_quantize(x, 5, seed=4)
    assert np.array_equal(a.centroids, b.centroids)


# -- dyn --------------------------------------------------------------------------


def test_dyn_of_static_video_is_zero():
    v = np.repeat(random_video((1, 24, 24, 3)), 3, axis=0)
    d = dyn(v)
    assert d.shape == (3, 24, 24, 1) and np.all(d == 0)


def test_dyn_is_composition():
    v = two_region_clip()
    m = estimate_flow_magnitude(v)
    q = kmeans_quantize(m, 3, seed=2)
    assert np.array_equal(dyn(v, 3, seed=2), q.centroids.astype(np.float32)[q.labels.astype(int)])


def test_dyn_invariant_to_brightness_offset():
    # values on a 1/256 grid keep the offset arithmetic exact
    rng = np.random.default_rng(0)
    base = (rng.integers(0, 128, (40, 56, 3)) / 256).astype(np.float32)
    v = np.stack([np.roll(base, 2 * t, axis=1) for t in range(4)])
    assert np.array_equal(dyn(v, 3), dyn(v + np.float32(0.25), 3))


def test_identical_motion_gives_matching_dyn():
    a = shifting_texture(T=4, seed=1)
    b = shifting_texture(T=4, seed=2) * 0.5 + 0.25
    da, db = dyn(a), dyn(b)
    # the circular shift leaves a seam at the borders, so compare the interior
    b_ = 7 // 2 + 6
    ia, ib = da[:, b_:-b_, b_:-b_], db[:, b_:-b_, b_:-b_]
    assert np.all(np.abs(ia - ib) <= 0.1 * np.maximum(ia, ib))
    assert abs(da.mean() - db.mean()) <= 0.1 * da.mean()


def test_dyn_pair_shares_centroids():
    a = two_region_clip(seed=0)
    b = shifting_texture(T=5, shift=1)
    dc, ds, joint = dyn_pair(a, b, 2)
    assert set(np.unique(dc)) <= set(joint.centroids.astype(np.float32))
    assert set(np.unique(ds)) <= set(joint.centroids.astype(np.float32))
    both = np.concatenate([estimate_flow_magnitude(a).ravel(), estimate_flow_magnitude(b).ravel()])
    assert np.array_equal(joint.centroids, kmeans_quantize(both, 2).centroids)


def test_dyn_from_flo_files(tmp_path):
    paths = []
    for i in range(2):
        p = tmp_path / f"{i}.flo"
        write_flo(p, np.full((6, 8), 3.0), np.full((6, 8), 4.0 * i))
        paths.append(p)
    d = dyn(random_video((3, 6, 8, 3)), 2, flow_source=paths)
    assert d[0].ravel().tolist() == [3.0] * 48
    assert np.all(d[1:] == 5.0)


def test_dyn_levels_keep_labels():
    d = dyn(two_region_clip(), 2)
    levels = dyn_levels(d, [(5, 48, 64), (4, 36, 48)])
    assert levels[0].shape == (5, 48, 64, 1) and levels[1].shape == (4, 36, 48, 1)
    assert set(np.unique(levels[1])) <= set(np.unique(d))


@pytest.mark.parametrize("k", [2, 3])
def test_kmeans_never_worse_than_single_cluster_by_itertools_oracle(k):
    # tiny exhaustive oracle over all contiguous k-partitions of the sorted values
    x = np.array([0.1, 0.2, 0.25, 3.0, 3.2, 9.0, 9.5])
    best = np.inf
    for cuts in itertools.combinations(range(1, len(x)), k - 1):
        parts = np.split(x, cuts)
        best = min(best, sum(((p - p.mean()) ** 2).sum() for p in parts))
    q = kmeans_quantize(x, k)
    assert kmeans_cost(x, q) == pytest.approx(best)
