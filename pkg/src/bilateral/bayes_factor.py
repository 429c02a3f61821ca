"""Bayes factors for equal cure rates and for a common gamma.

Both are oriented null over alternative, so values above 1 favour the null.
Multinomial coefficients cancel and are left out.  Under the reference prior
every term is a Beta function; under Jeffreys the ``(u + r v)^(1/2)`` tilt
adds the ratio ``J / K`` of its posterior and prior expectations, estimated
by Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln

from .model import BilateralTable
from .priors import h0_theta_shape, make_prior, saturated_prior
from .rng import SeededStream, beta_sample

HALF = 0.5


@dataclass(frozen=True)
class BfResult:
    value: float
    method: str
    mc_se: float = 0.0
    k_estimate: float | None = None
    orientation: str = "null/alternative"

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("Bayes factor must be positive")
        if (self.mc_se == 0.0) != (self.method == "exact"):
            raise ValueError("mc_se must be zero exactly when method is 'exact'")

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "mc_se": self.mc_se,
            "K": self.k_estimate,
            "orientation": self.orientation,
        }


def log_beta(a: float, b: float) -> float:
    """log B(a, b)."""
    if not (a > 0 and b > 0):
        raise ValueError(f"log_beta needs positive arguments, got ({a}, {b})")
    return float(betaln(a, b))


@dataclass(frozen=True)
class TiltRatio:
    """Monte Carlo estimate of J / K for the square-root tilt."""

    k: float
    j: float
    rel_se: float

    @property
    def ratio(self) -> float:
        return self.j / self.k


def tilt_ratio(table: BilateralTable, m: int, seed: int) -> TiltRatio:
    """``K = E[(U + rV)^(1/2)]`` under Be(1/2, 1/2) priors, ``J`` under the posteriors."""
    if m < 2:
        raise ValueError("Monte Carlo Bayes factors need at least 2 draws")
    r = table.r
    s = SeededStream(seed, "bayes_factor/tilt")
    pu = beta_sample(s.child("prior_u"), HALF, HALF, m)
    pv = beta_sample(s.child("prior_v"), HALF, HALF, m)
    qu = beta_sample(s.child("post_u"), table.m10 + table.m20 + HALF, table.m00 + HALF, m)
    qv = beta_sample(s.child("post_v"), table.m11 + table.m21 + HALF, table.m01 + HALF, m)
    wk = np.sqrt(pu + r * pv)
    wj = np.sqrt(qu + r * qv)
    k, j = float(wk.mean()), float(wj.mean())
    # independent estimates: relative variances add
    rel = math.sqrt(wk.var(ddof=1) / (m * k * k) + wj.var(ddof=1) / (m * j * j))
    return TiltRatio(k, j, rel)


def _log_uv_posterior_betas(t: BilateralTable) -> float:
    return log_beta(t.m10 + t.m20 + HALF, t.m00 + HALF) + log_beta(t.m11 + t.m21 + HALF, t.m01 + HALF)


def log_bf_lambda_beta_part(table: BilateralTable, kind: str) -> float:
    """log of the Beta-function part of BF_lambda (everything but the tilt ratio)."""
    a = h0_theta_shape(kind)
    t = table
    log_inv = (
        _log_uv_posterior_betas(t)
        + log_beta(a, HALF)
        - log_beta(t.m_1plus + t.m_2plus + a, t.m_0plus + HALF)
        - 2.0 * log_beta(HALF, HALF)
    )
    return -log_inv


def log_bf_gamma_beta_part(table: BilateralTable, kind: str) -> float:
    t = table
    a = saturated_prior(make_prior(kind, r=t.r)).a0
    return (
        log_beta(t.m_1plus + HALF, t.m_2plus + HALF)
        + 2.0 * log_beta(a, HALF)
        - log_beta(t.m10 + HALF, t.m20 + HALF)
        - log_beta(t.m11 + HALF, t.m21 + HALF)
        - log_beta(HALF, HALF)
        + _log_uv_posterior_betas(t)
        - log_beta(t.m10 + t.m20 + a, t.m00 + HALF)
        - log_beta(t.m11 + t.m21 + a, t.m01 + HALF)
    )


def _check_kind(kind: str) -> None:
    if kind not in ("jeffreys", "reference"):
        raise ValueError(f"Bayes factors are available for 'jeffreys' or 'reference', got {kind!r}")


def bf_lambda(table: BilateralTable, prior_kind: str = "reference", m: int = 1_000_000, seed: int = 0) -> BfResult:
    """Bayes factor for lambda0 = lambda1 against lambda0 != lambda1."""
    _check_kind(prior_kind)
    base = math.exp(log_bf_lambda_beta_part(table, prior_kind))
    if prior_kind == "reference":
        return BfResult(base, "exact", 0.0, 1.0)
    tr = tilt_ratio(table, m, seed)
    value = base / tr.ratio
    return BfResult(value, "monte-carlo", value * tr.rel_se, tr.k)


def bf_gamma(table: BilateralTable, prior_kind: str = "reference", m: int = 1_000_000, seed: int = 0) -> BfResult:
    """Bayes factor for gamma0 = gamma1 (reduced) against the saturated model."""
    _check_kind(prior_kind)
    base = math.exp(log_bf_gamma_beta_part(table, prior_kind))
    if prior_kind == "reference":
        return BfResult(base, "exact", 0.0, 1.0)
    tr = tilt_ratio(table, m, seed)
    value = base * tr.ratio
    return BfResult(value, "monte-carlo", value * tr.rel_se, tr.k)
