import numpy as np
import pytest

from dislocated_dirac.validation import IDENTITY_CHECKS, SUITE, CheckResult, rng_for, run_suite


@pytest.fixture(scope="module")
def seven():
    return run_suite(7)


def test_full_suite_passes(seven):
    assert [c.name for c in seven] == [name for name, *_ in SUITE]
    failed = [(c.name, c.residual, c.tolerance) for c in seven if not c.passed]
    assert not failed


def test_identity_residuals_near_roundoff(seven):
    for c in seven:
        if c.name in IDENTITY_CHECKS:
            assert c.residual < 1e-11


def test_same_seed_same_residuals(seven):
    again = run_suite(7, names=IDENTITY_CHECKS)
    ref = {c.name: c.residual for c in seven}
    assert all(c.residual == ref[c.name] for c in again)


def test_different_seed_draws_different_samples():
    a = run_suite(7, names=["jost_symmetry", "jump_identity"])
    b = run_suite(8, names=["jost_symmetry", "jump_identity"])
    assert [c.residual for c in a] != [c.residual for c in b]
    assert all(c.passed for c in a + b)


def test_streams_are_independent_per_check():
    a = rng_for(7, 0).standard_normal(4)
    np.testing.assert_array_equal(a, rng_for(7, 0).standard_normal(4))
    assert not np.array_equal(a, rng_for(7, 1).standard_normal(4))
    assert not np.array_equal(a, rng_for(8, 0).standard_normal(4))


def test_check_result_flags_nan():
    assert not CheckResult("x", 1, float("nan"), 1.0).passed
    assert not CheckResult("x", 1, 2.0, 1.0).passed
    assert CheckResult("x", 1, 0.5, 1.0).passed
