"""Bayes factors checked against direct quadrature of the marginal likelihoods.

The oracles integrate the trinomial likelihood against the priors after
substitutions that make each prior factor uniform: a Be(1/2, 1/2) variable is
sin(t)^2, a Be(1, 1/2) variable is 1 - w^2, and the gamma law with shapes
(1/2, 1/2) is (1 - sin(s)^2) / (1 + sin(s)^2).
"""

import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import dblquad, tplquad

from bilateral.bayes_factor import BfResult, bf_gamma, bf_lambda, log_beta, tilt_ratio
from bilateral.model import BilateralTable

H = math.pi / 2
C = 2 / math.pi


def grp(counts, g, u):
    n0, n1, n2 = counts
    return (1 - u) ** n0 * (2 * g * u / (1 + g)) ** n1 * ((1 - g) * u / (1 + g)) ** n2


def gam(s):
    p = math.sin(s) ** 2
    return (1 - p) / (1 + p)


def sq(x):
    return math.sin(x) ** 2


def reduced_marginal(t, tilt_r=None):
    """p(D | reduced model) under the reference (tilt_r None) or Jeffreys prior."""
    def w(u, v):
        return 1.0 if tilt_r is None else math.sqrt(u + tilt_r * v)

    num = tplquad(
        lambda q, a, s: grp(t.control, gam(s), sq(a)) * grp(t.treatment, gam(s), sq(q)) * w(sq(a), sq(q)),
        0, H, 0, H, 0, H, epsabs=1e-14,
    )[0] * C**3
    if tilt_r is None:
        return num
    k = dblquad(lambda q, a: w(sq(a), sq(q)), 0, H, 0, H, epsabs=1e-12)[0] * C**2
    return num / k


def null_marginal(t, kind):
    """p(D | lambda0 = lambda1): common theta ~ Be(1/2, 1/2) (reference) or Be(1, 1/2) (Jeffreys)."""
    theta = sq if kind == "reference" else (lambda x: 1 - x**2)
    top, scale = (H, C) if kind == "reference" else (1.0, 1.0)
    return dblquad(
        lambda a, s: grp(t.control, gam(s), theta(a)) * grp(t.treatment, gam(s), theta(a)),
        0, H, 0, top, epsabs=1e-14,
    )[0] * C * scale


def saturated_marginal(t, kind):
    theta = sq if kind == "reference" else (lambda x: 1 - x**2)
    top, scale = (H, C) if kind == "reference" else (1.0, 1.0)

    def one(counts):
        return dblquad(lambda a, s: grp(counts, gam(s), theta(a)), 0, H, 0, top, epsabs=1e-14)[0] * C * scale

    return one(t.control) * one(t.treatment)


SMALL = [
    BilateralTable.from_groups((2, 1, 2), (1, 2, 3)),
    BilateralTable.from_groups((3, 0, 1), (0, 2, 2)),
    BilateralTable.from_groups((1, 2, 2), (1, 2, 2)),
]


@pytest.mark.parametrize("t", SMALL)
def test_reference_bf_lambda_quadrature(t):
    oracle = null_marginal(t, "reference") / reduced_marginal(t)
    assert bf_lambda(t, "reference").value == pytest.approx(oracle, rel=1e-6)


@pytest.mark.parametrize("t", SMALL)
def test_reference_bf_gamma_quadrature(t):
    oracle = reduced_marginal(t) / saturated_marginal(t, "reference")
    assert bf_gamma(t, "reference").value == pytest.approx(oracle, rel=1e-6)


@pytest.mark.parametrize("t", SMALL[:2])
def test_jeffreys_quadrature(t):
    red = reduced_marginal(t, tilt_r=t.r)
    lam = bf_lambda(t, "jeffreys", 400_000, seed=1)
    gam_bf = bf_gamma(t, "jeffreys", 400_000, seed=1)
    assert lam.value == pytest.approx(null_marginal(t, "jeffreys") / red, abs=4 * lam.mc_se + 1e-9)
    assert gam_bf.value == pytest.approx(red / saturated_marginal(t, "jeffreys"), abs=4 * gam_bf.mc_se + 1e-9)


def test_identical_groups_favour_null():
    t = SMALL[2]
    assert bf_lambda(t, "reference").value > 1
    assert bf_lambda(t, "reference").value == pytest.approx(bf_lambda(t.swapped(), "reference").value, rel=1e-12)


def test_swap_invariance_balanced():
    t = BilateralTable.from_groups((4, 3, 5), (6, 2, 4))
    a = bf_lambda(t, "jeffreys", 200_000, seed=3).value
    b = bf_lambda(t.swapped(), "jeffreys", 200_000, seed=3).value
    assert bf_lambda(t, "reference").value == pytest.approx(bf_lambda(t.swapped(), "reference").value, rel=1e-12)
    assert a == pytest.approx(b, rel=0.02)


def test_scleroderma_reference(scleroderma):
    lam, gm = bf_lambda(scleroderma), bf_gamma(scleroderma)
    assert lam.value == pytest.approx(1.526, abs=0.002)
    assert gm.value == pytest.approx(2.368, abs=0.002)
    assert lam.method == "exact" and lam.mc_se == 0.0 and lam.orientation == "null/alternative"


def test_ome_bayes_factors(ome):
    assert bf_gamma(ome, "reference").value == pytest.approx(1.052, abs=0.002)
    assert bf_lambda(ome, "reference").value == pytest.approx(1.818, abs=0.002)
    assert bf_gamma(ome, "jeffreys", 1_000_000, seed=0).value == pytest.approx(0.682, abs=0.02)


def test_reference_seed_free(scleroderma):
    assert bf_lambda(scleroderma, "reference", 10, 1).value == bf_lambda(scleroderma, "reference", 5000, 99).value


def test_jeffreys_deterministic(scleroderma):
    a = bf_lambda(scleroderma, "jeffreys", 50_000, seed=5)
    b = bf_lambda(scleroderma, "jeffreys", 50_000, seed=5)
    assert a == b and a.method == "monte-carlo" and a.mc_se > 0 and a.k_estimate > 0


def test_mc_variance_shrinks_with_m(scleroderma):
    ms = np.array([10_000, 40_000, 160_000])
    sd = []
    for m in ms:
        vals = [tilt_ratio(scleroderma, int(m), seed).ratio for seed in range(12)]
        sd.append(np.std(vals, ddof=1))
    slope = np.polyfit(np.log(ms), np.log(np.square(sd)), 1)[0]
    assert -1.5 < slope < -0.5


def test_prior_kind_checked(ome):
    with pytest.raises(ValueError):
        bf_lambda(ome, "uniform")


def test_result_invariants():
    with pytest.raises(ValueError):
        BfResult(0.0, "exact")
    with pytest.raises(ValueError):
        BfResult(1.0, "exact", mc_se=0.1)
    with pytest.raises(ValueError):
        BfResult(1.0, "monte-carlo", mc_se=0.0)


def test_log_beta():
    assert log_beta(1, 1) == 0.0
    assert log_beta(0.5, 0.5) == pytest.approx(math.log(math.pi), rel=1e-14)
    mpmath.mp.dps = 40
    ref = float(mpmath.log(mpmath.beta(mpmath.mpf("7.5"), mpmath.mpf("9.5"))))
    assert log_beta(7.5, 9.5) == pytest.approx(ref, rel=1e-12)
    with pytest.raises(ValueError):
        log_beta(0, 1)
