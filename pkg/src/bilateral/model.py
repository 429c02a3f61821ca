"""Bilateral 3x2 tables and Dallal's reduced and saturated models.

Cell ``m_hi`` counts subjects in group ``i`` (0 = control, 1 = treatment)
with exactly ``h`` cured sites.  Parameters are handled on the unit cube
``(gamma, u, v)`` with ``u = (1 + gamma) * lambda0`` and
``v = (1 + gamma) * lambda1``; the saturated model carries one gamma per
group and ``u = (1 + gamma0) * lambda0``, ``v = (1 + gamma1) * lambda1``.

Log-likelihoods include both multinomial coefficients, so
``-2 * loglik + 2 * k`` is directly an AIC.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, fields
from typing import Mapping, Sequence

import numpy as np
from scipy.special import gammaln, xlogy

CELLS = ("m00", "m10", "m20", "m01", "m11", "m21")


class TableError(ValueError):
    """Raised for malformed bilateral tables; ``field`` names the culprit."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class EstimandUndefined(ZeroDivisionError):
    """A ratio estimand was requested where its denominator vanishes."""


@dataclass(frozen=True)
class BilateralTable:
    m00: float
    m10: float
    m20: float
    m01: float
    m11: float
    m21: float

    def __post_init__(self):
        for name in CELLS:
            val = getattr(self, name)
            if not isinstance(val, numbers.Real) or not math.isfinite(val):
                raise TableError(f"{name} must be a finite number, got {val!r}", name)
            if val < 0:
                raise TableError(f"{name} must be non-negative, got {val}", name)
        if self.m_plus0 <= 0:
            raise TableError("empty group: control total is zero", "control")
        if self.m_plus1 <= 0:
            raise TableError("empty group: treatment total is zero", "treatment")

    @classmethod
    def from_groups(cls, control: Sequence[float], treatment: Sequence[float]) -> "BilateralTable":
        """Build from ``(cured0, cured1, cured2)`` counts per group."""
        for name, col in (("control", control), ("treatment", treatment)):
            if len(col) != 3:
                raise TableError(f"{name} needs exactly 3 counts, got {len(col)}", name)
        return cls(control[0], control[1], control[2], treatment[0], treatment[1], treatment[2])

    @property
    def control(self) -> tuple:
        return (self.m00, self.m10, self.m20)

    @property
    def treatment(self) -> tuple:
        return (self.m01, self.m11, self.m21)

    @property
    def m_plus0(self):
        return self.m00 + self.m10 + self.m20

    @property
    def m_plus1(self):
        return self.m01 + self.m11 + self.m21

    @property
    def m_0plus(self):
        return self.m00 + self.m01

    @property
    def m_1plus(self):
        return self.m10 + self.m11

    @property
    def m_2plus(self):
        return self.m20 + self.m21

    @property
    def r(self) -> float:
        """Sample-size ratio treatment / control."""
        return self.m_plus1 / self.m_plus0

    @property
    def total(self):
        return self.m_plus0 + self.m_plus1

    def adjusted(self, add: float = 0.5) -> "BilateralTable":
        """Copy with ``add`` added to every cell (the ad-hoc +1/2 correction)."""
        return BilateralTable(*(getattr(self, c) + add for c in CELLS))

    def swapped(self) -> "BilateralTable":
        return BilateralTable.from_groups(self.treatment, self.control)

    def to_dict(self) -> dict:
        return {"control": list(self.control), "treatment": list(self.treatment)}


def validate_table(columns: Mapping[str, Sequence[int]], control: str) -> BilateralTable:
    """Validate two named columns of integer counts and fix group roles.

    >>> t = validate_table({"Cefaclor": (0, 1, 3), "Amoxicillin": (1, 0, 6)}, control="Cefaclor")
    >>> (t.m_plus0, t.m_plus1, t.m_1plus, t.m_2plus)
    (4, 7, 1, 9)
    """
    if len(columns) != 2:
        raise TableError(f"expected exactly two groups, got {len(columns)}")
    if control not in columns:
        raise TableError(f"control group {control!r} not among {sorted(columns)}", "control")
    (treat_name,) = [k for k in columns if k != control]
    cols = {}
    for role, name in (("control", control), ("treatment", treat_name)):
        col = list(columns[name])
        if len(col) != 3:
            raise TableError(f"group {name!r} needs exactly 3 counts, got {len(col)}", name)
        for h, val in enumerate(col):
            field = f"{name}[{h}]"
            if isinstance(val, bool) or not isinstance(val, numbers.Integral):
                raise TableError(f"{field} must be an integer, got {val!r}", field)
            if val < 0:
                raise TableError(f"{field} must be non-negative, got {val}", field)
        if sum(col) == 0:
            raise TableError(f"empty group: {name!r} has no subjects", name)
        cols[role] = [int(v) for v in col]
    return BilateralTable.from_groups(cols["control"], cols["treatment"])


@dataclass(frozen=True)
class ReducedParams:
    gamma: float
    lambda0: float
    lambda1: float

    def in_omega(self) -> bool:
        g = self.gamma
        cap = 1.0 / (1.0 + g)
        return 0 < g < 1 and 0 < self.lambda0 < cap and 0 < self.lambda1 < cap

    def to_uv(self) -> "UVParams":
        s = 1.0 + self.gamma
        return UVParams(self.gamma, s * self.lambda0, s * self.lambda1)


@dataclass(frozen=True)
class UVParams:
    gamma: float
    u: float
    v: float

    def to_reduced(self) -> ReducedParams:
        s = 1.0 + self.gamma
        return ReducedParams(self.gamma, self.u / s, self.v / s)


@dataclass(frozen=True)
class SaturatedUVParams:
    gamma0: float
    gamma1: float
    u: float
    v: float

    @property
    def lambda0(self):
        return self.u / (1.0 + self.gamma0)

    @property
    def lambda1(self):
        return self.v / (1.0 + self.gamma1)


def in_omega(gamma, lambda0, lambda1) -> bool:
    return ReducedParams(gamma, lambda0, lambda1).in_omega()


def trinomial_probs(gamma: float, lam: float) -> tuple[float, float, float]:
    """Cell probabilities (no, one, two cured sites) for one group."""
    if not (0 <= gamma <= 1) or not (0 <= lam <= 1.0 / (1.0 + gamma)):
        raise ValueError(f"inadmissible (gamma, lambda) = ({gamma}, {lam})")
    p1 = 2.0 * gamma * lam
    p2 = (1.0 - gamma) * lam
    return (max(0.0, 1.0 - (1.0 + gamma) * lam), p1, p2)


def log_multinomial_coef(counts: Sequence[float]) -> float:
    counts = np.asarray(counts, dtype=float)
    return float(gammaln(counts.sum() + 1.0) - gammaln(counts + 1.0).sum())


def _group_loglik(counts, gamma, u):
    # p0 = 1 - u, p1 = 2 g u / (1 + g), p2 = (1 - g) u / (1 + g)
    n0, n1, n2 = counts
    gamma = np.asarray(gamma, dtype=float)
    u = np.asarray(u, dtype=float)
    return (
        xlogy(n0, 1.0 - u)
        + xlogy(n1, 2.0 * gamma * u / (1.0 + gamma))
        + xlogy(n2, (1.0 - gamma) * u / (1.0 + gamma))
    )


def _finish(value):
    value = np.where(np.isnan(value), -np.inf, value)
    return float(value) if np.ndim(value) == 0 else value


def _check_closed_cube(*xs):
    for x in xs:
        x = np.asarray(x, dtype=float)
        if np.any((x < 0) | (x > 1)):
            raise ValueError("parameters must lie in [0, 1]")


def log_likelihood_reduced(params: UVParams, table: BilateralTable):
    """Full product-trinomial log-likelihood at ``(gamma, u, v)``.

    Accepts scalar or array-valued parameters.  Points on the closed boundary
    that contradict a positive count give ``-inf``.
    """
    g, u, v = params.gamma, params.u, params.v
    _check_closed_cube(g, u, v)
    coef = log_multinomial_coef(table.control) + log_multinomial_coef(table.treatment)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = coef + _group_loglik(table.control, g, u) + _group_loglik(table.treatment, g, v)
    return _finish(val)


def log_likelihood_saturated(params: SaturatedUVParams, table: BilateralTable):
    """Log-likelihood with a separate gamma per group."""
    g0, g1, u, v = params.gamma0, params.gamma1, params.u, params.v
    _check_closed_cube(g0, g1, u, v)
    coef = log_multinomial_coef(table.control) + log_multinomial_coef(table.treatment)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = coef + _group_loglik(table.control, g0, u) + _group_loglik(table.treatment, g1, v)
    return _finish(val)


@dataclass(frozen=True)
class Estimands:
    """Derived quantities; fields are floats or equally shaped arrays.

    ``delta_gamma`` is ``gamma1 - gamma0`` (zero in the reduced model) and
    ``excess_diff`` is ``excess0 - excess1``.
    """

    lambda0: object
    lambda1: object
    delta: object
    risk_ratio: object
    odds_ratio: object
    rho0: object
    rho1: object
    excess0: object
    excess1: object
    delta_gamma: object
    excess_diff: object

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _ratio(num, den):
    den_arr = np.asarray(den)
    if np.any(den_arr == 0):
        raise EstimandUndefined("ratio estimand undefined: zero denominator (u = 0 or lambda1 at its cap)")
    return num / den


def estimands_from(params) -> Estimands:
    """Risk difference, risk and odds ratios, correlations and excess risks.

    ``params`` is a :class:`UVParams`, :class:`ReducedParams` or
    :class:`SaturatedUVParams` (scalar or array fields).
    """
    if isinstance(params, ReducedParams):
        params = params.to_uv()
    u, v = params.u, params.v
    if isinstance(params, SaturatedUVParams):
        g0, g1 = params.gamma0, params.gamma1
        rr = _ratio(v * (1.0 + g0), u * (1.0 + g1))
    else:
        g0 = g1 = params.gamma
        rr = _ratio(v, u)  # free of gamma
    lam0 = u / (1.0 + g0)
    lam1 = v / (1.0 + g1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho0 = 1.0 - g0 / (1.0 - lam0)
        rho1 = 1.0 - g1 / (1.0 - lam1)
    # odds ratio lambda1 (1 - lambda0) / ((1 - lambda1) lambda0); reduces to
    # v (1 + g - u) / (u (1 + g - v)) when g0 = g1
    odds = _ratio(lam1 * (1.0 - lam0), (1.0 - lam1) * lam0)
    exc0 = 1.0 - g0 - lam0
    exc1 = 1.0 - g1 - lam1
    return Estimands(
        lambda0=lam0,
        lambda1=lam1,
        delta=lam1 - lam0,
        risk_ratio=rr,
        odds_ratio=odds,
        rho0=rho0,
        rho1=rho1,
        excess0=exc0,
        excess1=exc1,
        delta_gamma=g1 - g0,
        excess_diff=exc0 - exc1,
    )
