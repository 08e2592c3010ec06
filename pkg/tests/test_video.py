from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.ndimage import gaussian_filter

from vidpnn.video import (
    NoiseSpec,
    ScaleFactor,
    add_noise,
    as_video,
    build_pyramid,
    pyramid_dims,
    resize_nearest,
    resize_video,
    round_half_up,
)

from clips import random_video


def _rhu_exact(n, r):
    # exact rational round-half-up, independent of float arithmetic
    x = Fraction(n) * Fraction(r).limit_denominator(1000)
    return int((x + Fraction(1, 2)).__floor__())


def test_round_half_up_examples():
    assert round_half_up(6.5) == 7
    assert round_half_up(45.75) == 46
    assert round_half_up(26.25) == 26
    assert [round_half_up(d * 0.5) for d in (13, 144, 256)] == [7, 72, 128]


@given(st.integers(1, 5000), st.sampled_from([0.5, 0.6, 0.75, 0.8, 0.9]))
def test_round_half_up_matches_rational_oracle(n, r):
    assert round_half_up(n * r) == _rhu_exact(n, r)


def test_pyramid_dims_worked_example():
    # oracle: iterate the rational round-half-up by hand until an axis drops below its minimum
    expected = [(13, 144, 256)]
    while True:
        nxt = tuple(_rhu_exact(d, Fraction(3, 4)) for d in expected[-1])
        if any(d < m for d, m in zip(nxt, (3, 32, 32))):
            break
        expected.append(nxt)
    assert expected == [
        (13, 144, 256), (10, 108, 192), (8, 81, 144), (6, 61, 108), (5, 46, 81), (4, 35, 61),
    ]
    assert pyramid_dims((13, 144, 256), ScaleFactor(0.75, 0.75, 0.75), (3, 32, 32)) == expected


def test_pyramid_clamps_axis_already_at_minimum():
    d = pyramid_dims((3, 64, 64), ScaleFactor(0.5, 0.75, 0.75), (3, 21, 21))
    assert [x[0] for x in d] == [3] * len(d)
    assert d[-1] == (3, 27, 27)


def test_pyramid_levels_and_identity_of_finest():
    v = random_video((13, 40, 48, 3))
    pyr = build_pyramid(v, ScaleFactor(), (3, 21, 21))
    assert pyr.levels[0] is not None and np.array_equal(pyr.levels[0], v)
    assert pyr.level_dims == pyramid_dims((13, 40, 48), ScaleFactor(), (3, 21, 21))
    for lvl, d in zip(pyr.levels, pyr.level_dims):
        assert lvl.shape == d + (3,)
        assert lvl.dtype == np.float32


def test_pyramid_single_level_at_minimum():
    v = random_video((3, 21, 21, 3))
    assert len(build_pyramid(v, ScaleFactor(), (3, 21, 21))) == 1


def test_pyramid_errors():
    v = random_video((13, 40, 48, 3))
    with pytest.raises(ValueError, match="does not contract"):
        build_pyramid(v, ScaleFactor(1, 1, 1))
    with pytest.raises(ValueError, match="smaller than the minimum"):
        build_pyramid(v, ScaleFactor(), (3, 64, 21))
    with pytest.raises(ValueError):
        ScaleFactor(0.0, 0.5, 0.5)
    with pytest.raises(ValueError):
        ScaleFactor(1.2, 0.5, 0.5)


@given(st.integers(10, 400), st.sampled_from([0.5, 0.75, 0.9]))
def test_pyramid_monotone(n, r):
    levels = pyramid_dims((n, n, n), ScaleFactor(r, r, r), (3, 3, 3))
    for a, b in zip(levels, levels[1:]):
        assert all(y < x for x, y in zip(a, b))


def test_resize_identity_is_bit_exact():
    v = random_video((5, 9, 11, 3))
    out = resize_video(v, (5, 9, 11))
    assert np.array_equal(out, v)


def test_resize_target_dims():
    v = random_video((13, 36, 64, 2))
    assert resize_video(v, (7, 18, 32)).shape == (7, 18, 32, 2)
    assert resize_video(v, (20, 50, 70)).shape == (20, 50, 70, 2)


def test_resize_rejects_zero_target():
    with pytest.raises(ValueError):
        resize_video(random_video((3, 4, 4, 1)), (0, 4, 4))


@settings(max_examples=30, deadline=None)
@given(
    st.tuples(st.integers(1, 12), st.integers(1, 30), st.integers(1, 30)),
    st.floats(0.0, 1.0, width=32),
)
def test_resize_constant_stays_constant(target, c):
    v = np.full((6, 17, 13, 3), c, np.float32)
    out = resize_video(v, target)
    assert np.allclose(out, c, atol=1e-6)


def test_resize_down_up_on_smooth_content():
    rng = np.random.default_rng(3)
    v = gaussian_filter(rng.random((16, 64, 64, 3)), (3, 4, 4, 0), mode="wrap")
    v = ((v - v.min()) / np.ptp(v)).astype(np.float32)
    back = resize_video(resize_video(v, (8, 32, 32)), (16, 64, 64))
    assert np.abs(back - v).max() <= 0.1


def test_resize_linear_in_time():
    v = np.zeros((2, 1, 1, 1), np.float32)
    v[1] = 1.0
    out = resize_video(v, (4, 1, 1))[:, 0, 0, 0]
    # half-pixel centres: samples at -0.25, 0.25, 0.75, 1.25 clamp to [0, 1]
    assert np.allclose(out, [0.0, 0.25, 0.75, 1.0])


def test_resize_nearest_keeps_values():
    lab = np.random.default_rng(0).integers(0, 4, (6, 10, 10, 1)).astype(np.float32)
    out = resize_nearest(lab, (3, 5, 7))
    assert set(np.unique(out)) <= set(np.unique(lab))


def test_add_noise_zero_sigma_is_exact():
    v = random_video((3, 4, 5, 3))
    assert np.array_equal(add_noise(v, NoiseSpec(0.0, 7)), v)


def test_add_noise_temporal_replicate():
    v = random_video((6, 8, 8, 3))
    z = add_noise(np.zeros_like(v), NoiseSpec(0.5, 11, True))
    # the drawn field itself is bit-identical across frames
    assert all(np.array_equal(z[0], z[t]) for t in range(1, 6))
    out = add_noise(v, NoiseSpec(0.5, 11, True))
    diff = out - v
    assert np.allclose(diff, z[:1], atol=1e-6, rtol=0)


def test_add_noise_seeded():
    v = np.zeros((4, 8, 8, 3), np.float32)
    a = add_noise(v, NoiseSpec(0.5, 1, False))
    b = add_noise(v, NoiseSpec(0.5, 1, False))
    c = add_noise(v, NoiseSpec(0.5, 2, False))
    assert np.array_equal(a, b)
    assert (a != c).mean() > 0.99
    assert abs(float(a.std()) - 0.5) < 0.1


def test_add_noise_does_not_clamp():
    v = np.ones((2, 8, 8, 3), np.float32)
    out = add_noise(v, NoiseSpec(0.5, 0))
    assert out.max() > 1.0


def test_as_video_validation():
    assert as_video(np.zeros((2, 3, 4))).shape == (2, 3, 4, 1)
    with pytest.raises(ValueError):
        as_video(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        as_video(np.full((1, 1, 1, 1), np.nan))
