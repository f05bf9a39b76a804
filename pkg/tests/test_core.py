import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planestereo.core import (
    DisparityMap,
    PipelineConfig,
    census_cost,
    census_transform,
    census_valid,
    check_gray,
    gradient_mask,
)
from planestereo.errors import ConfigError, DimensionTooSmall
from planestereo.kernels import CENSUS_INVALID

desc24 = st.integers(min_value=0, max_value=(1 << 24) - 1)


def test_constant_image_has_empty_gradient_mask():
    img = np.full((16, 16), 77, np.uint8)
    assert not gradient_mask(img, 1).any()


def test_step_edge_mask_is_the_two_columns_at_the_step():
    img = np.zeros((16, 16), np.uint8)
    c = 8
    img[:, c:] = 100
    m = gradient_mask(img, 20)
    expected = np.zeros_like(m)
    expected[2:14, c - 1 : c + 1] = True
    assert np.array_equal(m, expected)


def test_threshold_zero_selects_whole_interior():
    img = np.random.default_rng(0).integers(0, 256, (20, 24), dtype=np.uint8)
    m = gradient_mask(img, 0)
    assert m[2:-2, 2:-2].all()
    assert m.sum() == 16 * 20


def test_gradient_mask_matches_direct_formula(rng):
    img = rng.integers(0, 256, (30, 40), dtype=np.uint8)
    m = gradient_mask(img, 60)
    i = img.astype(int)
    for v in range(30):
        for u in range(40):
            inside = 2 <= u < 38 and 2 <= v < 28
            want = inside and abs(i[v, u + 1] - i[v, u - 1]) + abs(i[v + 1, u] - i[v - 1, u]) >= 60
            assert m[v, u] == want


def test_census_constant_neighbourhood_is_zero():
    f = census_transform(np.full((16, 16), 9, np.uint8))
    assert (f[2:-2, 2:-2] == 0).all()


def test_census_bright_centre_sets_all_bits():
    img = np.full((16, 16), 50, np.uint8)
    img[8, 8] = 100
    assert census_transform(img)[8, 8] == (1 << 24) - 1


def test_census_horizontal_ramp_sets_the_two_left_columns():
    img = np.tile(np.array([10, 20, 30, 40, 50] * 4, np.uint8)[:16], (16, 1))
    # column 7 holds 30 (7 % 5 == 2); neighbours at dx=-2,-1 are darker
    f = census_transform(img)[8, 7]
    want = 0
    k = 0
    for dy in range(-2, 3):
        for dx in range(-2, 3):
            if dy == 0 and dx == 0:
                continue
            if dx < 0:
                want |= 1 << k
            k += 1
    assert f == want
    assert bin(int(f)).count("1") == 10


def test_census_border_is_flagged():
    f = census_transform(np.random.default_rng(1).integers(0, 256, (20, 20), dtype=np.uint8))
    valid = census_valid(f)
    assert not valid[:2].any() and not valid[-2:].any()
    assert not valid[:, :2].any() and not valid[:, -2:].any()
    assert valid[2:-2, 2:-2].all()
    assert (f[0] == CENSUS_INVALID).all()


def test_census_cost_extremes():
    assert census_cost(0b1011, 0b1011) == 0.0
    assert census_cost(0, (1 << 24) - 1) == 1.0


def test_monotone_patch_and_its_inverse_cost_one():
    patch = np.arange(256, dtype=np.uint8)[: 16 * 16].reshape(16, 16)
    a = census_transform(patch)[8, 8]
    b = census_transform(255 - patch)[8, 8]
    assert census_cost(a, b) == 1.0


@settings(max_examples=200, deadline=None)
@given(desc24, desc24, desc24)
def test_census_cost_is_a_normalized_metric(a, b, c):
    assert 0.0 <= census_cost(a, b) <= 1.0
    assert census_cost(a, b) == census_cost(b, a)
    assert census_cost(a, a) == 0.0
    assert census_cost(a, c) <= census_cost(a, b) + census_cost(b, c) + 1e-12


def test_census_cost_vectorized():
    a = np.array([0, 1, 3], np.uint32)
    b = np.array([0, 0, 0], np.uint32)
    assert np.allclose(census_cost(a, b), [0, 1 / 24, 2 / 24])


def test_threaded_census_is_identical(rng):
    img = rng.integers(0, 256, (97, 64), dtype=np.uint8)
    assert np.array_equal(census_transform(img, threads=3), census_transform(img))


def test_check_gray_rejects_small_and_wrong_type():
    with pytest.raises(DimensionTooSmall):
        check_gray(np.zeros((15, 40), np.uint8))
    with pytest.raises(ValueError):
        check_gray(np.zeros((20, 20), np.float32))
    with pytest.raises(ValueError):
        check_gray(np.zeros((20, 20, 3), np.uint8))


@pytest.mark.parametrize(
    "kw",
    [dict(n_iters=0), dict(max_disparity=0), dict(t_lo=0.5, t_hi=0.5), dict(t_hi=1.5), dict(sz_occ_init=24),
     dict(t_lo=0.0)],
)
def test_config_invariants(kw):
    with pytest.raises(ConfigError):
        PipelineConfig(**kw)


def test_config_defaults():
    c = PipelineConfig()
    assert (c.max_disparity, c.sz_occ_init, c.bins_u, c.bins_v) == (128, 32, 12, 10)
    assert (c.t_lo, c.t_hi, c.gradient_threshold) == (0.25, 0.5, 20)
    assert c.with_(n_iters=3).n_iters == 3


def test_disparity_map_masked():
    m = DisparityMap.from_array(np.array([[1.0, np.nan], [-1.0, 2.0]]))
    assert m.valid.tolist() == [[True, False], [False, True]]
    out = m.masked()
    assert np.isnan(out[0, 1]) and out[1, 1] == 2.0
