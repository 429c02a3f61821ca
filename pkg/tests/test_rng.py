import math

import numpy as np
import pytest
import sympy as sp
from scipy import stats
from scipy.integrate import quad

from bilateral.rng import (
    BLOCK_SIZE,
    GammaLawParams,
    SeededStream,
    beta_sample,
    gamma_law_cdf,
    gamma_law_density,
    gamma_law_mode,
    gamma_law_sample,
    trinomial_sample,
    uniform_sample,
)


def test_same_seed_same_draws():
    a = beta_sample(SeededStream(5, "x"), 2.0, 3.0, 1000)
    b = beta_sample(SeededStream(5, "x"), 2.0, 3.0, 1000)
    assert np.array_equal(a, b)
    c = beta_sample(SeededStream(5, "y"), 2.0, 3.0, 1000)
    assert not np.array_equal(a, c)


def test_thread_count_does_not_matter():
    n = 3 * BLOCK_SIZE + 17
    s = SeededStream(11, "threads")
    assert np.array_equal(beta_sample(s, 1.5, 2.5, n, threads=1), beta_sample(s, 1.5, 2.5, n, threads=4))


def test_prefix_stability():
    # more draws extend the sequence rather than reshuffling it
    s = SeededStream(2, "prefix")
    short = uniform_sample(s, 100)
    long = uniform_sample(s, BLOCK_SIZE + 5)
    assert np.array_equal(short, long[:100])


def test_child_labels():
    s = SeededStream(1, "posterior")
    assert s.child("u").label == "posterior/u"
    assert SeededStream(1).child("u").label == "u"


def test_seed_range():
    with pytest.raises(ValueError):
        SeededStream(-1)
    with pytest.raises(ValueError):
        SeededStream(2**64)


def test_beta_means():
    s = SeededStream(0, "beta")
    assert beta_sample(s.child("a"), 1, 1, 100_000).mean() == pytest.approx(0.5, abs=0.005)
    assert beta_sample(s.child("b"), 5, 1, 100_000).mean() == pytest.approx(5 / 6, abs=0.005)


def test_beta_ks():
    x = beta_sample(SeededStream(0, "ks"), 9.5, 1.5, 20_000)
    assert stats.kstest(x, stats.beta(9.5, 1.5).cdf).pvalue > 0.01


def test_beta_shape_validation():
    with pytest.raises(ValueError):
        beta_sample(SeededStream(0), 0.0, 1.0, 3)


def test_equal_shapes_median_one_third():
    g = gamma_law_sample(SeededStream(0, "median"), GammaLawParams(3.0, 3.0), 100_000)
    assert np.median(g) == pytest.approx(1 / 3, abs=0.005)


def test_scleroderma_jeffreys_gamma_moments():
    g = gamma_law_sample(SeededStream(1, "sclero"), GammaLawParams(7.5, 9.5), 100_000)
    assert g.mean() == pytest.approx(0.290, abs=0.004)
    assert g.std() == pytest.approx(0.099, abs=0.004)


def test_a1_and_a2_agree():
    law = GammaLawParams(2.5, 4.0)
    a1 = gamma_law_sample(SeededStream(3, "a1"), law, 20_000, method="A1")
    a2 = gamma_law_sample(SeededStream(3, "a2"), law, 20_000, method="A2")
    assert stats.ks_2samp(a1, a2).pvalue > 0.05


def test_a2_recovers_beta():
    law = GammaLawParams(4.0, 2.0)
    g = gamma_law_sample(SeededStream(4, "pi"), law, 20_000)
    pi = (1 - g) / (1 + g)
    assert stats.kstest(pi, stats.beta(law.nu, law.mu).cdf).pvalue > 0.01


def test_unknown_method():
    with pytest.raises(ValueError):
        gamma_law_sample(SeededStream(0), GammaLawParams(1, 1), 3, method="A3")


def test_density_normalized():
    law = GammaLawParams(7.5, 9.5)
    total, _ = quad(lambda g: gamma_law_density(law, g), 0, 1, epsabs=1e-12, epsrel=1e-12)
    assert total == pytest.approx(1.0, abs=1e-10)


def test_density_unit_shapes_symbolic():
    g, mu, nu = sp.symbols("g mu nu", positive=True)
    f = 2**mu / sp.beta(mu, nu) * g ** (mu - 1) * (1 - g) ** (nu - 1) / (1 + g) ** (mu + nu)
    f11 = sp.simplify(f.subs({mu: 1, nu: 1}).rewrite(sp.gamma))
    assert sp.simplify(f11 - 2 / (1 + g) ** 2) == 0
    law = GammaLawParams(1.0, 1.0)
    for x in (1e-9, 0.25, 0.5, 1 - 1e-9):
        assert gamma_law_density(law, x) == pytest.approx(float(f11.subs(g, x)), rel=1e-7)
    # the closed-form limits are f(0) = 2 and f(1) = 1/2
    assert float(sp.limit(f11, g, 0)) == 2.0
    assert float(sp.limit(f11, g, 1)) == 0.5


def test_density_rejects_outside():
    with pytest.raises(ValueError):
        gamma_law_density(GammaLawParams(1, 1), 1.0)


def test_mode_formula():
    law = GammaLawParams(7.5, 9.5)
    mode = gamma_law_mode(law)
    grid = np.linspace(1e-4, 1 - 1e-4, 200_001)
    assert mode == pytest.approx(grid[np.argmax(gamma_law_density(law, grid))], abs=1e-4)


def test_cdf_matches_quadrature():
    law = GammaLawParams(2.0, 3.5)
    for x in (0.1, 0.4, 0.8):
        val, _ = quad(lambda g: gamma_law_density(law, g), 0, x)
        assert gamma_law_cdf(law, x) == pytest.approx(val, abs=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_gamma_draws_match_density(seed):
    rng = np.random.default_rng(100 + seed)
    law = GammaLawParams(*rng.uniform(0.5, 20.0, 2))
    g = gamma_law_sample(SeededStream(seed, "ks-density"), law, 20_000)
    assert stats.kstest(g, lambda x: gamma_law_cdf(law, x)).pvalue > 0.01


def test_histogram_chi2():
    law = GammaLawParams(3.0, 5.0)
    g = gamma_law_sample(SeededStream(8, "hist"), law, 100_000)
    edges = np.linspace(0, 1, 21)
    observed, _ = np.histogram(g, edges)
    expected = np.diff(gamma_law_cdf(law, edges)) * g.size
    keep = expected > 5
    chi2 = ((observed[keep] - expected[keep]) ** 2 / expected[keep]).sum()
    assert chi2 < stats.chi2.ppf(0.99, keep.sum() - 1)


def test_trinomial_edge_cases():
    s = SeededStream(0, "tri")
    assert trinomial_sample(s, 0, 0.2, 0.3, 0.5).tolist() == [[0, 0, 0]]
    assert trinomial_sample(s, 7, 1, 0, 0).tolist() == [[7, 0, 0]]
    with pytest.raises(ValueError):
        trinomial_sample(s, 5, 0.5, 0.6, 0.1)
    with pytest.raises(ValueError):
        trinomial_sample(s, -1, 0.5, 0.5, 0.0)


def test_trinomial_mean():
    k = trinomial_sample(SeededStream(0, "tri-mean"), 50, 0.25, 0.5, 0.25, size=10_000)
    assert (k.sum(axis=1) == 50).all()
    assert k[:, 1].mean() == pytest.approx(25, abs=0.5)
    assert math.isclose(k[:, 0].mean(), 12.5, abs_tol=0.5)
