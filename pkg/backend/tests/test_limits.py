import numpy as np
import pytest
from scipy import special

from rrt_lab.errors import DomainError
from rrt_lab.limits import (
    MAX_BM_MEDIAN,
    LimitLaw,
    arcsine_cdf,
    arcsine_density,
    constant_weight_profile,
    estimate_sigma_m,
    max_bm_cdf,
    max_bm_quantile,
    max_bm_tail,
    outdeg_asymptote,
    outdeg_profile,
    profile_mass,
    sigma_from_zeta_samples,
)
from rrt_lab.walk import IncrementSpec


# ============================
# 📌 Maximum of Brownian motion
# ============================
def test_max_bm_tail_examples():
    assert max_bm_tail(0.0) == 1.0
    assert max_bm_tail(-3.0) == 1.0
    assert max_bm_tail(40.0) == 0.0
    assert max_bm_tail(0.67449) == pytest.approx(0.5, abs=1e-5)


def test_max_bm_median():
    assert MAX_BM_MEDIAN == pytest.approx(0.67449, abs=1e-5)
    assert max_bm_cdf(MAX_BM_MEDIAN) == pytest.approx(0.5, abs=1e-12)


def test_max_bm_cdf_and_tail_are_complementary():
    x = np.linspace(0.0, 4.0, 41)
    assert max_bm_cdf(x) == pytest.approx(1.0 - np.array([max_bm_tail(v) for v in x]), abs=1e-15)
    assert max_bm_cdf(np.array([-1.0]))[0] == 0.0


def test_max_bm_quantile_inverts_cdf():
    for q in (0.1, 0.25, 0.75, 0.95):
        assert max_bm_cdf(max_bm_quantile(q)) == pytest.approx(q, abs=1e-12)


# ============================
# 📌 Arcsine law
# ============================
def test_arcsine_examples():
    assert arcsine_cdf(1.0, 0.3) == 1.0
    assert arcsine_cdf(0.0, 0.3) == 0.0
    assert arcsine_cdf(0.5, 0.5) == pytest.approx(0.5, abs=1e-12)
    assert arcsine_cdf(0.25, 0.5) == pytest.approx(1.0 / 3.0, abs=1e-12)


@pytest.mark.parametrize("rho", [0.2, 0.5, 0.8])
def test_arcsine_matches_incomplete_beta(rho):
    for x in np.linspace(0.01, 0.99, 25):
        assert arcsine_cdf(x, rho) == pytest.approx(special.betainc(rho, 1.0 - rho, x), abs=1e-10)


def test_arcsine_density_is_derivative():
    rho, x, h = 0.35, 0.4, 1e-6
    slope = (arcsine_cdf(x + h, rho) - arcsine_cdf(x - h, rho)) / (2 * h)
    assert slope == pytest.approx(arcsine_density(x, rho), rel=1e-5)


@pytest.mark.parametrize("rho", [0.1, 1.0 / 3.0, 0.5, 0.75])
def test_arcsine_reflection(rho):
    for x in np.linspace(0.0, 1.0, 21):
        assert arcsine_cdf(x, rho) == pytest.approx(1.0 - arcsine_cdf(1.0 - x, 1.0 - rho), abs=1e-10)


@pytest.mark.parametrize("x, rho", [(1.5, 0.5), (-0.1, 0.5), (0.5, 0.0), (0.5, 1.0)])
def test_arcsine_domain(x, rho):
    with pytest.raises(DomainError):
        arcsine_cdf(x, rho)


# ============================
# 📌 Outdegree profiles
# ============================
def test_outdeg_profile_examples():
    assert outdeg_profile(0.5, 0.5) == pytest.approx(2.0 / np.pi, rel=1e-15)
    assert constant_weight_profile(1.0 / np.e) == pytest.approx(1.0)


@pytest.mark.parametrize("rho", [0.3, 0.5, 0.7])
def test_profile_mass_is_one(rho):
    assert profile_mass(rho) == pytest.approx(1.0, abs=1e-6)


def test_outdeg_profile_domain():
    with pytest.raises(DomainError):
        outdeg_profile(1.0, 0.5)
    with pytest.raises(DomainError):
        constant_weight_profile(0.0)


def test_outdeg_asymptote_matches_profile_for_half():
    n = 10_000
    for t in (0.2, 0.5, 0.8):
        j = int(n * t)
        assert outdeg_asymptote(n, j) == pytest.approx(outdeg_profile(t, 0.5), rel=1e-12)


def test_limit_law_dispatch():
    assert LimitLaw(kind="max_bm_tail").cdf(np.array([0.0]))[0] == 0.0
    assert LimitLaw(kind="arcsine", rho=0.5).cdf(np.array([0.25]))[0] == pytest.approx(1.0 / 3.0)
    assert LimitLaw(kind="constant_weight_profile").profile(0.5) == pytest.approx(np.log(2.0))
    with pytest.raises(DomainError):
        LimitLaw(kind="outdeg_profile", rho=1.5)
    with pytest.raises(DomainError):
        LimitLaw(kind="outdeg_profile", rho=0.5).cdf(0.3)


# ============================
# 📌 sigma_m
# ============================
def test_sigma_from_constant_zeta_samples():
    estimate = sigma_from_zeta_samples(np.full(200, 0.67449))
    assert estimate.value == pytest.approx(1.0, abs=1e-5)
    assert estimate.lower == estimate.upper == pytest.approx(1.0, abs=1e-5)


def test_sigma_needs_enough_samples():
    with pytest.raises(DomainError):
        sigma_from_zeta_samples(np.ones(99))
    with pytest.raises(DomainError):
        estimate_sigma_m(IncrementSpec(kind="gaussian"), 100, 50, seed=1)


def test_sigma_from_max_bm_samples_recovers_scale(stream):
    # |N(0, 1)| has the law of the maximum of Brownian motion on [0, 1]
    z = 1.7 * np.abs(stream.normal(size=20_000))
    estimate = sigma_from_zeta_samples(z, stream=stream)
    assert estimate.value == pytest.approx(1.7, rel=0.03)
    assert estimate.lower <= estimate.value <= estimate.upper
    assert estimate.lower_quartile_value == pytest.approx(estimate.upper_quartile_value, rel=0.05)


def test_estimate_sigma_m_is_reproducible():
    spec = IncrementSpec(kind="gaussian")
    a = estimate_sigma_m(spec, 500, 200, seed=4)
    b = estimate_sigma_m(spec, 500, 200, seed=4)
    assert a == b
    assert a.value > 0.0


@pytest.mark.slow
def test_estimate_sigma_m_stable_across_seeds():
    spec = IncrementSpec(kind="gaussian")
    a = estimate_sigma_m(spec, 10_000, 10_000, seed=1)
    b = estimate_sigma_m(spec, 10_000, 10_000, seed=2)
    assert a.value == pytest.approx(b.value, rel=0.05)
    assert a.lower_quartile_value == pytest.approx(a.upper_quartile_value, rel=0.10)
