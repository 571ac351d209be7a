import mpmath
import numpy as np
import pytest

from rrt_lab.env import (
    EnvModel,
    Environment,
    WeightDistSpec,
    attach_prob,
    attach_probs,
    build_environment,
    environment_from_path,
    iid_weight_sanity,
    save_environment_csv,
    self_prob_seq,
    zeta,
)
from rrt_lab.errors import ConfigurationError, DomainError
from rrt_lab.rng import replicate_stream
from rrt_lab.sampler import log_cumsum_exp
from rrt_lab.walk import IncrementSpec, WalkPath, sample_path

MODELS = [
    EnvModel(kind="constant"),
    EnvModel(kind="power", alpha=1.0),
    EnvModel(kind="power", alpha=-2.0),
    EnvModel(kind="stretched_exp", alpha=0.5),
    EnvModel(kind="geometric", a=3.0),
    EnvModel(kind="iid_weights", weights=WeightDistSpec(kind="uniform", low=0.5, high=1.5)),
]


def test_constant_environment():
    env = build_environment(EnvModel(kind="constant"), 3)
    assert env.logw.tolist() == [0.0, 0.0, 0.0, 0.0]
    assert np.exp(env.log_prefix_mass) == pytest.approx([1.0, 2.0, 3.0, 4.0], rel=1e-14)


def test_product_form_environment():
    env = environment_from_path(WalkPath(np.array([0.0, np.log(2.0)])))
    assert np.exp(env.logw[1]) == pytest.approx(0.5)
    assert np.exp(env.log_prefix_mass[1]) == pytest.approx(1.5)
    assert attach_prob(env, 1, 1) == pytest.approx(1.0 / 3.0)


def test_power_environment_prefix_mass():
    env = build_environment(EnvModel(kind="power", alpha=1.0), 4)
    assert np.exp(env.log_prefix_mass[4]) == pytest.approx(11.0, rel=1e-14)


def test_constant_attach_probabilities():
    env = build_environment(EnvModel(kind="constant"), 10)
    assert [attach_prob(env, 3, j) for j in range(4)] == pytest.approx([0.25] * 4)
    assert self_prob_seq(env, 5) == pytest.approx([1 / 2, 1 / 3, 1 / 4, 1 / 5, 1 / 6])


def test_attach_prob_rejects_future_vertex():
    env = build_environment(EnvModel(kind="constant"), 10)
    with pytest.raises(DomainError):
        attach_prob(env, 3, 4)


def test_environment_must_cover_request():
    env = build_environment(EnvModel(kind="constant"), 10)
    with pytest.raises(DomainError):
        self_prob_seq(env, 11)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_normalization_every_row(model):
    n = 2_000
    env = build_environment(model, n, replicate_stream(1, 0))
    errors = [abs(attach_probs(env, r).sum() - 1.0) for r in range(n + 1)]
    assert max(errors) <= 1e-12


def test_normalization_product_form_with_deep_minimum():
    # S drifts to -3000, so w(j) spans e^3000
    s = np.concatenate(([0.0], np.cumsum(np.full(3_000, -1.0))))
    env = environment_from_path(WalkPath(s))
    for r in (1, 10, 300, 301, 2_999, 3_000):
        assert attach_probs(env, r).sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.isfinite(env.log_prefix_mass))


def test_log_prefix_mass_matches_mpmath(stream):
    path = sample_path(IncrementSpec(kind="gaussian", sigma=5.0), 400, stream)
    env = environment_from_path(path)
    mpmath.mp.dps = 50
    total = mpmath.mpf(0)
    expected = []
    for v in env.logw:
        total += mpmath.exp(mpmath.mpf(float(v)))
        expected.append(float(mpmath.log(total)))
    assert env.log_prefix_mass == pytest.approx(expected, rel=1e-14, abs=1e-12)


def test_subcritical_power_self_probs_summable():
    env = build_environment(EnvModel(kind="power", alpha=-2.0), 100_000)
    partial = np.cumsum(self_prob_seq(env, 100_000))
    # tail beyond 10^4 is below sum_{j > 10^4} 1/j^2
    assert partial[-1] - partial[9_999] < 1e-4
    assert partial[-1] < 2.0


@pytest.mark.slow
def test_stretched_exponential_growth():
    n = 1_000_000
    env = build_environment(EnvModel(kind="stretched_exp", alpha=0.5), n)
    assert 0.9 <= self_prob_seq(env, n).sum() / np.sqrt(n) <= 1.1


def test_zeta_constant_environment():
    env = build_environment(EnvModel(kind="constant"), 100_000)
    values = [zeta(env, n, np.log(n)) for n in (100, 10_000, 100_000)]
    # sum 1/(j+1) - ln n -> gamma - 1
    assert abs(values[-1] - 1.0) < abs(values[0] - 1.0)
    assert values[-1] == pytest.approx(1.0, abs=0.05)


def test_zeta_zero_edge_means(gaussian_env):
    assert zeta(gaussian_env, 100, 10.0, edge_means=0.0) == 0.0


def test_zeta_product_form_factorization(stream):
    n = 5_000
    path = sample_path(IncrementSpec(kind="gaussian"), n, stream)
    env = environment_from_path(path)
    total = self_prob_seq(env, n).sum()
    lower = abs(path.minimum) or 1.0
    assert zeta(env, n, np.sqrt(n)) == pytest.approx(lower / np.sqrt(n) * (total / lower), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_attach_prob_nonincreasing_in_r(seed):
    n = 400
    env = environment_from_path(sample_path(IncrementSpec(kind="gaussian"), n, replicate_stream(seed, 0)))
    for j in (0, 1, 57, 200, 399):
        probs = np.array([attach_prob(env, r, j) for r in range(j, n + 1)])
        assert np.all(np.diff(probs) <= 1e-12 * probs[:-1])


@pytest.mark.parametrize("shift", [-50.0, -1.0, 3.5, 200.0])
def test_self_prob_ratio_invariant_under_weight_shift(stream, shift):
    n = 2_000
    path = sample_path(IncrementSpec(kind="gaussian"), n, stream)
    env = environment_from_path(path)
    logw = env.logw + shift
    shifted = Environment(logw=logw, log_prefix_mass=log_cumsum_exp(logw), kind="explicit")
    lower = abs(path.minimum) or 1.0
    ratio = self_prob_seq(env, n).sum() / lower
    assert self_prob_seq(shifted, n).sum() / lower == pytest.approx(ratio, rel=1e-12)
    assert attach_probs(shifted, n) == pytest.approx(attach_probs(env, n), rel=1e-12, abs=1e-300)


def test_zeta_rejects_nonpositive_normalization(gaussian_env):
    with pytest.raises(DomainError):
        zeta(gaussian_env, 10, 0.0)


def test_iid_weight_sanity_constant(stream):
    model = EnvModel(kind="iid_weights", weights=WeightDistSpec(kind="constant", value=1.0))
    assert iid_weight_sanity(model, 1_000, stream) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "weights, target, rel",
    [
        (WeightDistSpec(kind="uniform", low=0.0, high=2.0), 1.0, 0.01),
        (WeightDistSpec(kind="exponential", mean=3.0), 3.0, 0.02),
    ],
)
def test_iid_weight_sanity_slln(stream, weights, target, rel):
    average = iid_weight_sanity(EnvModel(kind="iid_weights", weights=weights), 1_000_000, stream)
    assert average == pytest.approx(target, rel=rel)


def test_iid_weights_need_stream():
    with pytest.raises(ConfigurationError):
        build_environment(EnvModel(kind="iid_weights"), 10)


@pytest.mark.parametrize(
    "data",
    [
        {"kind": "power"},
        {"kind": "stretched_exp", "alpha": 1.5},
        {"kind": "geometric", "a": -1.0},
        {"kind": "explicit", "logw": [1.0, 2.0]},
        {"kind": "iid_weights", "weights": {"kind": "uniform", "low": -1.0, "high": 1.0}},
    ],
)
def test_invalid_models_raise_configuration_error(data):
    with pytest.raises(ConfigurationError):
        EnvModel.parse(data)


def test_product_form_without_path_cannot_be_built():
    with pytest.raises(ConfigurationError):
        build_environment(EnvModel(kind="product_form"), 5)


def test_explicit_weights(tmp_path):
    env = build_environment(EnvModel(kind="explicit", logw=[0.0, np.log(3.0), 0.0]), 2)
    assert attach_prob(env, 2, 1) == pytest.approx(0.6)
    out = save_environment_csv(env, tmp_path / "env.csv")
    lines = out.read_text().splitlines()
    assert lines[0] == "j,logw,log_prefix_mass"
    assert len(lines) == 4
