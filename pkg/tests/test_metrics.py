import numpy as np
import pytest

from streamrpca.exceptions import ContractViolation
from streamrpca.metrics import cp_deviation, err_rel, support_mismatch


def test_err_rel_cases():
    truth = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert err_rel(truth, truth) == 0.0
    assert err_rel(2 * truth, truth) == pytest.approx(1.0)
    assert err_rel(np.zeros_like(truth), truth) == pytest.approx(1.0)


def test_err_rel_scale_covariance():
    rng = np.random.Generator(np.random.PCG64(60))
    truth = rng.standard_normal((6, 8))
    E = rng.standard_normal((6, 8))
    base = err_rel(truth + E, truth)
    for c in (0.5, 2.0, -3.0):
        assert err_rel(truth + c * E, truth) == pytest.approx(abs(c) * base)


def test_err_rel_rejects_zero_truth():
    with pytest.raises(ContractViolation):
        err_rel(np.ones((2, 2)), np.zeros((2, 2)))


def test_support_mismatch_cases():
    S = np.array([[1.0, 0.0], [0.0, -2.0]])
    assert support_mismatch(S, S) == 0.0
    assert support_mismatch(np.zeros_like(S), S) == pytest.approx(0.5)
    dense = np.ones((2, 2))
    assert support_mismatch(np.zeros_like(dense), dense) == 1.0


def test_support_mismatch_symmetric_at_zero_eps():
    rng = np.random.Generator(np.random.PCG64(61))
    A = np.where(rng.random((5, 5)) < 0.3, rng.standard_normal((5, 5)), 0.0)
    B = np.where(rng.random((5, 5)) < 0.3, rng.standard_normal((5, 5)), 0.0)
    assert support_mismatch(A, B) == support_mismatch(B, A)


def test_cp_deviation_exact_match():
    match = cp_deviation([1000, 2000], [1000, 2000])
    assert match.deviations == [0, 0]
    assert match.misses == [] and match.false_alarms == []


def test_cp_deviation_signed_offsets():
    match = cp_deviation([1003, 2001], [1000, 2000])
    assert match.deviations == [3, 1]


def test_cp_deviation_miss_and_false_alarm():
    match = cp_deviation([], [1000])
    assert match.deviations == [] and match.misses == [1000]
    match = cp_deviation([500], [])
    assert match.false_alarms == [500]


def test_cp_deviation_window():
    match = cp_deviation([1500], [1000], window=100)
    assert match.misses == [1000]
    assert match.false_alarms == [1500]
    match = cp_deviation([1050], [1000], window=100)
    assert match.deviations == [50]


def test_cp_deviation_identity_property():
    for cps in ([], [5], [3, 9, 27]):
        match = cp_deviation(cps, cps)
        assert match.deviations == [0] * len(cps)
