import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import kendalltau

from driftspec.errors import DegenerateLabels, DomainError, TooShort
from driftspec.stats import BETA, SpeedLimitInput, fisher_score, mann_kendall, tau_save, tau_weakest

# S = 10, var = 5*4*15/18 = 50/3, z = (10 - 1)/sqrt(50/3); two-sided normal tail
MK_INCREASING5_P = 0.027486336111510347  # mpmath erfc(z / sqrt 2)


def test_tau_weakest_examples():
    assert tau_weakest(1.0, 1.0) == 0.0
    assert tau_weakest(0.0, 1.0, 0.724) == pytest.approx(1 / 0.724, abs=1e-12)
    assert tau_weakest(SpeedLimitInput(0.0, 1.0)) == pytest.approx(1.3812154696, abs=1e-9)


def test_tau_weakest_decreasing_in_fidelity():
    values = [tau_weakest(f, 2.0) for f in np.linspace(0, 1, 101)]
    assert np.all(np.diff(values) < 0)


def test_tau_save_examples():
    assert tau_save(0.0, 1.0) == 0.0
    assert tau_save(math.pi / 2, 1.0, BETA) == pytest.approx(tau_weakest(0.0, 1.0, BETA), abs=1e-12)


@given(st.floats(0, 1), st.floats(1e-3, 1e3), st.floats(0.1, 2))
def test_tau_save_weakest_identity(fid, excess, beta):
    assert tau_save(math.acos(math.sqrt(fid)), excess, beta) == pytest.approx(
        tau_weakest(fid, excess, beta), rel=1e-12, abs=1e-15)


def test_speed_limit_domain():
    for args in [(-0.1, 1.0), (1.1, 1.0), (0.5, 0.0), (0.5, -1.0)]:
        with pytest.raises(DomainError):
            tau_weakest(*args)
    with pytest.raises(DomainError):
        tau_save(2.0, 1.0)
    with pytest.raises(DomainError):
        tau_save(0.5, 0.0)


# ---------------------------------------------------------------------------
# Mann-Kendall

def test_mk_examples():
    inc = mann_kendall([1, 2, 3, 4, 5])
    assert inc.tau == 1.0 and inc.s == 10
    assert inc.p_value == pytest.approx(MK_INCREASING5_P, rel=1e-12)
    assert inc.p_value < 0.05
    flat = mann_kendall([3, 3, 3, 3, 3])
    assert flat.tau == 0.0 and flat.p_value == 1.0


def test_mk_too_short():
    with pytest.raises(TooShort):
        mann_kendall([1, 2, 3])


@given(st.lists(st.floats(-100, 100), min_size=4, max_size=30))
def test_mk_antisymmetric_and_bounded(series):
    fwd, rev = mann_kendall(series), mann_kendall(series[::-1])
    assert -1 <= fwd.tau <= 1
    assert rev.tau == pytest.approx(-fwd.tau, abs=1e-12)
    assert rev.p_value == pytest.approx(fwd.p_value, abs=1e-12)
    assert 0 <= fwd.p_value <= 1


@given(st.lists(st.integers(-5, 5), min_size=4, max_size=30))
def test_mk_tie_corrected_variance(series):
    x = np.asarray(series, dtype=float)
    n = len(x)
    _, counts = np.unique(x, return_counts=True)
    expected = (n * (n - 1) * (2 * n + 5) - np.sum(counts * (counts - 1) * (2 * counts + 5))) / 18
    assert mann_kendall(series).var_s == pytest.approx(expected)


@given(st.lists(st.floats(-100, 100), min_size=4, max_size=9, unique=True))
def test_mk_exact_matches_scipy(series):
    ref = kendalltau(np.arange(len(series)), series, method="exact")
    ours = mann_kendall(series, exact=True)
    assert ours.tau == pytest.approx(ref.statistic, abs=1e-12)
    assert ours.p_value == pytest.approx(ref.pvalue, abs=1e-10)


# ---------------------------------------------------------------------------
# Fisher score

def test_fisher_constant_feature_scores_zero():
    x = np.column_stack([np.ones(6), np.arange(6.0)])
    res = fisher_score(x, [0, 0, 0, 1, 1, 1])
    assert res.scores[0] == 0.0 and not res.infinite[0]


def test_fisher_infinite_flag():
    x = np.array([[0.0], [0.0], [1.0], [1.0]])
    res = fisher_score(x, [0, 0, 1, 1])
    assert res.infinite[0] and np.isinf(res.scores[0])


def test_fisher_hand_value():
    # class means 0.5 and 10.5, overall 5.5: between = 2*25 + 2*25, within = 4*0.25
    x = np.array([[0.0], [1.0], [10.0], [11.0]])
    assert fisher_score(x, [0, 0, 1, 1]).scores[0] == pytest.approx(100.0)


@given(st.integers(0, 10_000), st.floats(-50, 50), st.floats(0.1, 20))
def test_fisher_affine_invariance(seed, shift, scale):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(12, 3))
    labels = np.arange(12) % 3
    base = fisher_score(x, labels).scores
    moved = fisher_score(scale * x + shift, labels).scores
    np.testing.assert_allclose(moved, base, rtol=1e-8)
    np.testing.assert_allclose(fisher_score(-scale * x, labels).scores, base, rtol=1e-8)


def test_fisher_ranking_and_slot_fractions():
    rng = np.random.default_rng(3)
    labels = np.repeat([0, 1], 10)
    informative = labels + 0.1 * rng.normal(size=20)
    x = np.column_stack([informative, rng.normal(size=20), rng.normal(size=20), rng.normal(size=20)])
    res = fisher_score(x, labels)
    assert res.ranking[0] == 0
    frac = res.slot_fractions(2)
    assert frac.sum() == pytest.approx(1.0) and frac[0] > 0.9


def test_fisher_degenerate_labels():
    with pytest.raises(DegenerateLabels):
        fisher_score(np.zeros((4, 1)), [0, 0, 0, 0])
    with pytest.raises(DegenerateLabels):
        fisher_score(np.zeros((4, 1)), [0, 0, 0, 1])
