import numpy as np
import pytest
from scipy import stats

from rrt_lab.errors import ConfigurationError, DomainError
from rrt_lab.rng import replicate_stream
from rrt_lab.walk import (
    IncrementSpec,
    WalkPath,
    argmin_leftmost,
    estimate_phi,
    estimate_rho,
    ladder_epochs,
    running_max_variants,
    running_min,
    sample_path,
    spitzer_average,
)

GAUSSIAN = IncrementSpec(kind="gaussian")
RADEMACHER = IncrementSpec(kind="rademacher")


def path(*values) -> WalkPath:
    return WalkPath(np.array(values, dtype=np.float64))


# ============================
# 📌 Increment specs
# ============================
@pytest.mark.parametrize(
    "data",
    [
        {"kind": "gaussian", "sigma": 0.0},
        {"kind": "lattice_with_atom", "p0": 1.5},
        {"kind": "stable", "alpha": 2.5},
        {"kind": "stable", "alpha": 1.5, "beta": 2.0},
        {"kind": "custom_table", "values": [1.0, -1.0], "probs": [0.5, 0.6]},
    ],
)
def test_invalid_increment_specs_raise_configuration_error(data):
    with pytest.raises(ConfigurationError):
        IncrementSpec.parse(data)


def test_lattice_with_atom_accepts_full_atom():
    spec = IncrementSpec.parse({"kind": "lattice_with_atom", "p0": 1.0})
    assert spec.is_degenerate_at_zero
    assert np.all(spec.sample(100, replicate_stream(1, 0)) == 0.0)


def test_symmetry_flags():
    assert GAUSSIAN.is_symmetric
    assert not IncrementSpec(kind="stable", alpha=1.5, beta=1.0).is_symmetric
    assert IncrementSpec(kind="custom_table", values=[-2.0, 2.0], probs=[0.5, 0.5]).is_symmetric
    assert not IncrementSpec(kind="custom_table", values=[-1.0, 2.0], probs=[0.5, 0.5]).is_symmetric


def test_totally_skewed_stable_has_negative_median():
    x = IncrementSpec(kind="stable", alpha=1.5, beta=1.0).sample(20_000, replicate_stream(3, 0))
    assert np.all(np.isfinite(x))
    # zero mean with the heavy tail on the right
    assert np.median(x) < 0.0


# ============================
# 📌 Paths
# ============================
def test_empty_walk(stream):
    assert sample_path(GAUSSIAN, 0, stream).s.tolist() == [0.0]


def test_rademacher_steps_are_unit(stream):
    assert set(np.diff(sample_path(RADEMACHER, 3, stream).s)) <= {-1.0, 1.0}


def test_gaussian_increments_clt_bound(stream):
    n = 100_000
    steps = np.diff(sample_path(GAUSSIAN, n, stream).s)
    assert abs(steps.mean()) < 4.0 / np.sqrt(n)


def test_path_must_start_at_zero():
    with pytest.raises(DomainError):
        path(1.0, 2.0)


def test_path_is_read_only(stream):
    with pytest.raises(ValueError):
        sample_path(GAUSSIAN, 5, stream).s[1] = 3.0


def test_same_stream_key_gives_same_path():
    a = sample_path(GAUSSIAN, 50, replicate_stream(11, 4))
    b = sample_path(GAUSSIAN, 50, replicate_stream(11, 4))
    c = sample_path(GAUSSIAN, 50, replicate_stream(11, 5))
    assert np.array_equal(a.s, b.s)
    assert not np.array_equal(a.s, c.s)


# ============================
# 📌 Running extremes
# ============================
@pytest.mark.parametrize(
    "values, expected",
    [((0, -1, 1), (0, -1, -1)), ((0, 1, 2), (0, 0, 0))],
)
def test_running_min_examples(values, expected):
    assert running_min(path(*values)).tolist() == list(expected)


def test_running_min_matches_naive_oracle(stream):
    p = sample_path(GAUSSIAN, 300, stream)
    naive = [min(p.s[: k + 1]) for k in range(p.n + 1)]
    assert np.array_equal(running_min(p), naive)


@pytest.mark.parametrize(
    "values, m, m_tilde",
    [((0, -1, -2), (0, 0, 0), (-1, -1)), ((0, 2, 1), (0, 2, 2), (2, 2))],
)
def test_running_max_variants_examples(values, m, m_tilde):
    got_m, got_tilde = running_max_variants(path(*values))
    assert got_m.tolist() == list(m)
    assert got_tilde.tolist() == list(m_tilde)


def test_running_max_variants_match_naive_oracle(stream):
    p = sample_path(GAUSSIAN, 300, stream)
    m, m_tilde = running_max_variants(p)
    assert np.array_equal(m, [max(p.s[: k + 1]) for k in range(p.n + 1)])
    assert np.array_equal(m_tilde, [max(p.s[1 : k + 1]) for k in range(1, p.n + 1)])


def test_m_tilde_undefined_for_empty_walk():
    with pytest.raises(DomainError):
        running_max_variants(path(0))


@pytest.mark.parametrize("values, expected", [((0, -1, -1, 0), 1), ((0, 1, 2), 0)])
def test_argmin_leftmost_examples(values, expected):
    assert argmin_leftmost(path(*values)) == expected


def test_argmin_leftmost_matches_naive_scan():
    p = sample_path(RADEMACHER, 500, replicate_stream(5, 0))
    best = 0
    for k in range(p.n + 1):
        if p.s[k] < p.s[best]:
            best = k
    assert argmin_leftmost(p) == best


def test_ladder_epochs_examples():
    report = ladder_epochs(path(0, -1, 1, -2))
    assert report.descending_epochs.tolist() == [0, 1, 3]
    assert report.ascending_epochs.tolist() == [0, 2]
    assert report.descending_heights.tolist() == [0.0, -1.0, -2.0]
    assert ladder_epochs(path(0, 1, 2, 3)).descending_epochs.tolist() == [0]


@pytest.mark.parametrize("spec", [GAUSSIAN, RADEMACHER, IncrementSpec(kind="stable", alpha=1.5, beta=1.0)], ids=lambda s: s.kind)
def test_ladder_heights_strictly_monotone(spec):
    for r in range(20):
        p = sample_path(spec, 1_000, replicate_stream(13, r))
        report = ladder_epochs(p)
        assert np.all(np.diff(report.descending_epochs) > 0)
        assert np.all(np.diff(report.ascending_epochs) > 0)
        assert np.all(np.diff(report.descending_heights) < 0)
        assert np.all(np.diff(report.ascending_heights) > 0)
        assert report.descending_heights[-1] == p.minimum
        assert report.descending_epochs[-1] == p.tau


# ============================
# 📌 Estimators
# ============================
def test_estimate_rho_gaussian_covers_half(stream):
    estimate = estimate_rho(GAUSSIAN, 200, 20_000, stream)
    assert estimate.covers(0.5)
    assert estimate.trials == 20_000


def test_estimate_rho_rademacher_excludes_ties(stream):
    # P(S_10 > 0) = (1 - P(S_10 = 0)) / 2 exactly
    exact = (1.0 - stats.binom.pmf(5, 10, 0.5)) / 2.0
    estimate = estimate_rho(RADEMACHER, 10, 50_000, stream)
    assert estimate.covers(exact)
    assert estimate.value < 0.5


def test_estimate_rho_rejects_empty_runs(stream):
    with pytest.raises(DomainError):
        estimate_rho(GAUSSIAN, 0, 10, stream)


def test_spitzer_average_gaussian_is_half(stream):
    estimate = spitzer_average(GAUSSIAN, 100, 5_000, stream)
    assert estimate.value == pytest.approx(0.5, abs=0.03)
    assert estimate.lower <= estimate.value <= estimate.upper


def test_phi_non_lattice_is_zero():
    assert estimate_phi(GAUSSIAN, 100).value == 0.0


def test_phi_rademacher_exact():
    estimate = estimate_phi(RADEMACHER, 10_000)
    assert estimate.exact
    assert estimate.value == pytest.approx(0.693, abs=0.01)


def test_phi_degenerate_walk_diverges():
    estimate = estimate_phi(IncrementSpec(kind="lattice_with_atom", p0=1.0), 100)
    assert estimate.diverges
    assert estimate.value == float("inf")


def test_phi_monte_carlo_lattice(stream):
    spec = IncrementSpec(kind="lattice_with_atom", p0=0.5)
    estimate = estimate_phi(spec, 10, reps=20_000, stream=stream)
    # P(S_1 = 0) = 1/2 alone contributes 0.5
    assert not estimate.exact
    assert 0.5 < estimate.value < 2.0


def test_phi_monte_carlo_needs_stream():
    with pytest.raises(DomainError):
        estimate_phi(IncrementSpec(kind="lattice_with_atom", p0=0.5), 10)


def test_phi_needs_positive_jmax():
    with pytest.raises(DomainError):
        estimate_phi(RADEMACHER, 0)
