import numpy as np
import pytest

from dwa.errors import DimensionMismatch, EmptyInput, LengthMismatch
from dwa.metrics import (
    DistanceMetric,
    ccc,
    ccc_loss,
    centroid,
    centroid_dp,
    centroid_l2,
    cosine_distance,
)
from dwa.segmentation import Segment

from oracles import oracle_ccc


def seg(frames):
    return Segment("s", 0, np.asarray(frames, dtype=float))


def rand_seg(rng, winlen=4, d=3):
    return seg(rng.standard_normal((winlen, d)))


# -- centroid -----------------------------------------------------------------

def test_centroid_hand():
    assert np.array_equal(centroid(seg([[1, 2], [3, 4]])), [2.0, 3.0])


def test_centroid_single_row():
    assert np.array_equal(centroid(seg([[5, -1, 2]])), [5.0, -1.0, 2.0])


def test_centroid_constant_rows():
    v = np.array([0.3, -0.7])
    assert np.allclose(centroid(seg(np.tile(v, (6, 1)))), v, atol=1e-15)


# -- centroid L2 ----------------------------------------------------------------

def test_centroid_l2_identity():
    a = seg([[1.0, 2.0], [3.0, 4.0]])
    assert centroid_l2(a, a) == 0.0


def test_centroid_l2_345():
    a = seg([[0.0, 0.0], [0.0, 0.0]])
    b = seg([[3.0, 4.0], [3.0, 4.0]])
    assert abs(centroid_l2(a, b) - 5.0) < 1e-12


def test_centroid_l2_properties():
    rng = np.random.default_rng(0)
    for _ in range(500):
        a, b, c = (rand_seg(rng) for _ in range(3))
        dab = centroid_l2(a, b)
        assert dab >= 0.0
        assert dab == centroid_l2(b, a)
        assert dab <= centroid_l2(a, c) + centroid_l2(c, b) + 1e-12


def test_centroid_l2_translation_invariant():
    rng = np.random.default_rng(1)
    for _ in range(100):
        a, b = rand_seg(rng), rand_seg(rng)
        shift = rng.standard_normal(3)
        a2 = seg(a.frames + shift)
        b2 = seg(b.frames + shift)
        assert abs(centroid_l2(a, b) - centroid_l2(a2, b2)) < 1e-10


# -- centroid DP ----------------------------------------------------------------

def test_centroid_dp_hand():
    a = seg([[1.0, 0.0]])
    assert centroid_dp(a, a) == -1.0


def test_centroid_dp_orthogonal():
    assert centroid_dp(seg([[1.0, 0.0]]), seg([[0.0, 1.0]])) == 0.0


def test_centroid_dp_zero_annihilates():
    rng = np.random.default_rng(2)
    zero = seg(np.zeros((4, 3)))
    for _ in range(20):
        assert centroid_dp(rand_seg(rng), zero) == 0.0


def test_centroid_dp_bilinear_sign():
    rng = np.random.default_rng(3)
    for _ in range(500):
        a, b = rand_seg(rng), rand_seg(rng)
        base = centroid_dp(a, b)
        assert abs(centroid_dp(seg(2.0 * a.frames), b) - 2.0 * base) < 1e-10
        assert abs(centroid_dp(seg(-a.frames), b) + base) < 1e-12
        assert abs(centroid_dp(b, a) - base) < 1e-12


# -- cosine ---------------------------------------------------------------------

def test_cosine_identical_is_zero():
    rng = np.random.default_rng(4)
    a = rand_seg(rng)
    assert abs(cosine_distance(a, a)) < 1e-12


def test_cosine_opposite_rows():
    rng = np.random.default_rng(5)
    a = rand_seg(rng, winlen=2)
    b = seg(-a.frames)
    assert abs(cosine_distance(a, b) - 4.0) < 1e-12


def test_cosine_orthogonal_single_row():
    assert abs(cosine_distance(seg([[1.0, 0.0]]), seg([[0.0, 2.0]])) - 1.0) \
        < 1e-15


def test_cosine_zero_vector_rules():
    z = seg([[0.0, 0.0]])
    x = seg([[3.0, 1.0]])
    assert cosine_distance(z, x) == 1.0
    assert cosine_distance(z, z) == 0.0


def test_cosine_row_scale_invariance():
    rng = np.random.default_rng(6)
    for _ in range(500):
        a, b = rand_seg(rng), rand_seg(rng)
        scales_a = rng.uniform(0.1, 10.0, (4, 1))
        scales_b = rng.uniform(0.1, 10.0, (4, 1))
        d1 = cosine_distance(a, b)
        d2 = cosine_distance(seg(a.frames * scales_a),
                             seg(b.frames * scales_b))
        assert abs(d1 - d2) < 1e-9


def test_cosine_bounds():
    rng = np.random.default_rng(7)
    for _ in range(500):
        w = int(rng.integers(1, 8))
        a, b = rand_seg(rng, winlen=w), rand_seg(rng, winlen=w)
        d = cosine_distance(a, b)
        assert -1e-12 <= d <= 2.0 * w + 1e-12


def test_distance_dimension_mismatch():
    a = seg([[1.0, 2.0]])
    b = seg([[1.0, 2.0, 3.0]])
    for fn in (centroid_l2, centroid_dp, cosine_distance):
        with pytest.raises(DimensionMismatch):
            fn(a, b)


def test_metric_from_string():
    assert DistanceMetric.from_string("cosine") is DistanceMetric.COSINE
    with pytest.raises(ValueError):
        DistanceMetric.from_string("manhattan")


# -- ccc --------------------------------------------------------------------

def test_ccc_perfect_agreement_exact():
    x = np.array([0.1, -0.4, 0.9, 0.3])
    assert ccc(x, x).ccc == 1.0


def test_ccc_perfect_disagreement():
    x = np.array([-1.0, -0.5, 0.5, 1.0])  # zero mean
    rep = ccc(-x, x)
    assert abs(rep.ccc + 1.0) < 1e-12
    assert abs(oracle_ccc(-x, x) + 1.0) < 1e-12


def test_ccc_hand_case_against_oracle():
    pred = [1.0, 2.0, 3.0]
    label = [1.0, 2.0, 4.0]
    rep = ccc(pred, label)
    assert abs(rep.ccc - oracle_ccc(pred, label)) < 1e-12


def test_ccc_oracle_agreement_random():
    rng = np.random.default_rng(8)
    for _ in range(300):
        n = int(rng.integers(2, 100))
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        assert abs(ccc(x, y).ccc - oracle_ccc(x, y)) < 1e-12


def test_ccc_degenerate_rules():
    const = np.full(5, 0.3)
    other = np.full(5, -0.2)
    varying = np.array([0.1, 0.5, -0.3, 0.2, 0.0])
    assert ccc(const, const).ccc == 1.0
    assert ccc(const, other).ccc == 0.0
    assert ccc(const, varying).ccc == 0.0
    assert ccc(varying, const).ccc == 0.0
    rep = ccc(const, varying)
    assert rep.degenerate_pred and not rep.degenerate_label


def test_ccc_equals_pcc_times_bcf():
    rng = np.random.default_rng(9)
    for _ in range(300):
        n = int(rng.integers(2, 60))
        x = rng.standard_normal(n)
        y = 0.5 * x + rng.standard_normal(n)
        rep = ccc(x, y)
        assert not rep.degenerate
        assert abs(rep.ccc - rep.pcc * rep.bcf) < 1e-12
        assert abs(rep.ccc) <= abs(rep.pcc) + 1e-15
        assert 0.0 <= rep.bcf <= 1.0


def test_ccc_symmetric_and_affine_invariant():
    rng = np.random.default_rng(10)
    for _ in range(200):
        x = rng.standard_normal(30)
        y = rng.standard_normal(30)
        assert abs(ccc(x, y).ccc - ccc(y, x).ccc) < 1e-14
        a, b = float(rng.uniform(0.1, 3.0)), float(rng.uniform(-2.0, 2.0))
        assert abs(ccc(a * x + b, a * y + b).ccc - ccc(x, y).ccc) < 1e-10


def test_ccc_errors():
    with pytest.raises(LengthMismatch):
        ccc([1.0, 2.0], [1.0])
    with pytest.raises(EmptyInput):
        ccc([], [])


def test_ccc_loss_values():
    x = np.array([0.2, -0.1, 0.7])
    assert ccc_loss(x, x) == 0.0
    z = np.array([-1.0, 0.0, 1.0])
    assert abs(ccc_loss(-z, z) - 2.0) < 1e-12
    assert ccc_loss(np.full(3, 0.5), z) == 1.0
