import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrtc.errors import DimensionError, MetricError, SpecError
from lrtc.problems import (
    ProblemSpec,
    gen_lowrank,
    mask_count,
    multilinear_rank,
    nrmse,
    rel_err,
    sample_offsets,
    standard_normal,
    substreams,
)
from lrtc.solver import SamplingMask
from lrtc.tensor import DenseTensor, unfold


def test_spec_validation():
    with pytest.raises(SpecError):
        ProblemSpec((5, 5, 5), (9, 9, 3), 0.3)
    with pytest.raises(SpecError):
        ProblemSpec((5, 5), (1, 1, 1), 0.3)
    for sr in (0.0, 1.5, -0.1):
        with pytest.raises(SpecError):
            ProblemSpec((5, 5), (1, 1), sr)
    with pytest.raises(SpecError):
        ProblemSpec((5, 5), (1, 1), 0.5, noise_sigma=-1)
    with pytest.raises(SpecError):
        ProblemSpec((5, 0), (1, 1), 0.5)


def test_generation_is_deterministic():
    spec = ProblemSpec((6, 7, 5), (2, 3, 2), 0.4, noise_sigma=0.1, seed=11)
    a, b = gen_lowrank(spec), gen_lowrank(spec)
    assert a.truth == b.truth and a.observed == b.observed and a.mask == b.mask
    c = gen_lowrank(ProblemSpec((6, 7, 5), (2, 3, 2), 0.4, noise_sigma=0.1, seed=12))
    assert not c.truth == a.truth


def test_noiseless_observed_equals_truth_and_mask_values():
    p = gen_lowrank(ProblemSpec((5, 6, 4), (2, 2, 2), 0.5, seed=1))
    assert p.observed == p.truth
    np.testing.assert_array_equal(p.mask.values, p.observed.flat[p.mask.indices])


def test_noise_has_requested_scale():
    spec = ProblemSpec((30, 30, 30), (3, 3, 3), 0.5, noise_sigma=0.04, seed=5)
    p = gen_lowrank(spec)
    resid = p.observed.flat - p.truth.flat
    assert abs(resid.std() - 0.04) < 0.04 * 0.02
    assert abs(resid.mean()) < 1e-3
    # the noise stream is independent of the sigma value
    q = gen_lowrank(ProblemSpec((30, 30, 30), (3, 3, 3), 0.5, noise_sigma=0.02, seed=5))
    np.testing.assert_allclose(q.observed.flat - q.truth.flat, resid / 2, rtol=1e-9, atol=1e-15)
    assert q.mask.indices.tolist() == p.mask.indices.tolist()


def test_mask_count_rounding():
    assert mask_count(0.3, 125000) == 37500
    assert mask_count(1.0, 125) == 125
    assert mask_count(1e-9, 10) == 1
    assert mask_count(0.25, 10) == 3  # 2.5 rounds half up
    assert gen_lowrank(ProblemSpec((50, 50, 50), (9, 9, 3), 0.3, seed=42)).mask.size == 37500


def test_sample_offsets_are_sorted_distinct_in_range():
    rng = substreams(7)[3]
    idx = sample_offsets(rng, 1000, 400)
    assert idx.size == 400 and np.all(np.diff(idx) > 0)
    assert idx[0] >= 0 and idx[-1] < 1000
    np.testing.assert_array_equal(sample_offsets(substreams(7)[3], 10, 10), np.arange(10))


def test_sample_offsets_are_uniform():
    hits = np.zeros(20)
    rng = substreams(99)[3]
    for _ in range(2000):
        hits[sample_offsets(rng, 20, 5)] += 1
    # each slot expects 500 hits; 6 sigma is about 116
    assert np.all(np.abs(hits - 500) < 116)


def test_box_muller_moments():
    z = standard_normal(substreams(3)[0], 200001)
    assert z.size == 200001
    assert abs(z.mean()) < 0.01 and abs(z.std() - 1) < 0.01
    assert np.all(np.isfinite(z))


def test_rank_one_spec_is_outer_product():
    p = gen_lowrank(ProblemSpec((6, 5, 4), (1, 1, 1), 0.5, seed=2))
    for mode in (1, 2, 3):
        s = np.linalg.svd(unfold(p.truth, mode).matrix, compute_uv=False)
        assert s[1] / s[0] <= 1e-10


def test_desk_problem_multilinear_rank():
    p = gen_lowrank(ProblemSpec((50, 50, 50), (9, 9, 3), 0.3, seed=0))
    assert multilinear_rank(p.truth) == (9, 9, 3)


@settings(max_examples=100)
@given(st.data())
def test_generated_rank_matches_spec(data):
    n = data.draw(st.integers(2, 4))
    shape = tuple(data.draw(st.lists(st.integers(2, 7), min_size=n, max_size=n)))
    ranks = tuple(data.draw(st.integers(1, e)) for e in shape)
    # a mode rank cannot exceed the product of the others
    total = math.prod(ranks)
    ranks = tuple(min(r, total // r) for r in ranks)
    seed = data.draw(st.integers(0, 2**63 - 1))
    p = gen_lowrank(ProblemSpec(shape, ranks, 0.5, seed=seed))
    assert multilinear_rank(p.truth) == ranks


def test_rel_err_cases(rng):
    m = DenseTensor(rng.standard_normal((3, 3)))
    assert rel_err(m, m) == 0.0
    assert rel_err(DenseTensor.zeros((3, 3)), m) == 1.0
    assert rel_err(m * 1.5, m) == pytest.approx(0.5, rel=1e-15)
    with pytest.raises(MetricError):
        rel_err(m, DenseTensor.zeros((3, 3)))
    with pytest.raises(DimensionError):
        rel_err(m, DenseTensor.zeros((3, 4)))


def test_nrmse_cases():
    truth = DenseTensor.from_flat(np.array([0.0, 1.0, 2.0, 4.0]), (2, 2))
    mask = SamplingMask.from_tensor(truth, [0])
    assert nrmse(truth, truth, mask) == 0.0
    guess = DenseTensor.from_flat(np.array([0.0, 2.0, 3.0, 5.0]), (2, 2))
    # off-mask errors are all 1, truth range there is 4 - 1 = 3
    assert nrmse(guess, truth, mask) == pytest.approx(1 / 3, rel=1e-15)
    full = SamplingMask.from_tensor(truth, [0, 1, 2, 3])
    with pytest.raises(MetricError):
        nrmse(guess, truth, full)
    flat = DenseTensor.from_flat(np.array([0.0, 1.0, 1.0, 1.0]), (2, 2))
    with pytest.raises(MetricError):
        nrmse(guess, flat, mask)
