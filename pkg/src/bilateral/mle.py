"""Maximum likelihood and Wald intervals for Dallal's models.

On the ``(gamma, u, v)`` cube the likelihood splits into three independent
pieces, so every MLE is closed form:

    gamma = m_1+ / (m_1+ + 2 m_2+),  u = 1 - m00 / m_+0,  v = 1 - m01 / m_+1.

Standard errors come from the (diagonal) expected information and the delta
method; risk and odds ratios are interval-estimated on the log scale.
Estimates on the boundary of the cube are flagged and every standard error
or interval depending on them is reported as unavailable.

The array helpers accept count arrays of any shape so the simulation harness
can fit thousands of tables at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .model import (
    BilateralTable,
    SaturatedUVParams,
    UVParams,
    log_likelihood_reduced,
    log_likelihood_saturated,
)

ADJUSTMENTS = ("none", "add-half")
LOG_SCALE = ("risk_ratio", "odds_ratio")

REDUCED_PARAMS = ("gamma", "u", "v")
SATURATED_PARAMS = ("gamma0", "gamma1", "u", "v")

# which cube parameters each estimand depends on
REDUCED_DEPENDS = {
    "gamma": ("gamma",),
    "u": ("u",),
    "v": ("v",),
    "lambda0": ("gamma", "u"),
    "lambda1": ("gamma", "v"),
    "delta": ("gamma", "u", "v"),
    "risk_ratio": ("u", "v"),
    "odds_ratio": ("gamma", "u", "v"),
}
SATURATED_DEPENDS = {
    "gamma0": ("gamma0",),
    "gamma1": ("gamma1",),
    "u": ("u",),
    "v": ("v",),
    "lambda0": ("gamma0", "u"),
    "lambda1": ("gamma1", "v"),
    "delta": ("gamma0", "gamma1", "u", "v"),
    "risk_ratio": ("gamma0", "gamma1", "u", "v"),
    "odds_ratio": ("gamma0", "gamma1", "u", "v"),
    "delta_gamma": ("gamma0", "gamma1"),
    "excess_diff": ("gamma0", "gamma1", "u", "v"),
}


def gamma_hat(n1, n2):
    """Root of the gamma score equation; NaN when n1 + n2 = 0."""
    n1 = np.asarray(n1, dtype=float)
    n2 = np.asarray(n2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return n1 / (n1 + 2.0 * n2)


def gamma_variance(gamma, exposure):
    """Inverse expected information ``g (1-g) (1+g)^2 / (2 * exposure)``.

    ``exposure`` is ``m_+0 u + m_+1 v`` for the reduced model and
    ``m_+i u_i`` for one group of the saturated model.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        return gamma * (1.0 - gamma) * (1.0 + gamma) ** 2 / (2.0 * exposure)


def _binomial_variance(p, n):
    return p * (1.0 - p) / n


def _on_boundary(x):
    x = np.asarray(x, dtype=float)
    return np.isnan(x) | (x <= 0.0) | (x >= 1.0)


def reduced_fit_arrays(m00, m10, m20, m01, m11, m21) -> dict:
    """Vectorized reduced-model MLEs and parameter variances."""
    n0 = np.asarray(m00 + m10 + m20, dtype=float)
    n1 = np.asarray(m01 + m11 + m21, dtype=float)
    g = gamma_hat(m10 + m11, m20 + m21)
    u = 1.0 - m00 / n0
    v = 1.0 - m01 / n1
    return {
        "estimates": {"gamma": g, "u": u, "v": v},
        "variances": {
            "gamma": gamma_variance(g, n0 * u + n1 * v),
            "u": _binomial_variance(u, n0),
            "v": _binomial_variance(v, n1),
        },
    }


def saturated_fit_arrays(m00, m10, m20, m01, m11, m21) -> dict:
    n0 = np.asarray(m00 + m10 + m20, dtype=float)
    n1 = np.asarray(m01 + m11 + m21, dtype=float)
    g0 = gamma_hat(m10, m20)
    g1 = gamma_hat(m11, m21)
    u = 1.0 - m00 / n0
    v = 1.0 - m01 / n1
    return {
        "estimates": {"gamma0": g0, "gamma1": g1, "u": u, "v": v},
        "variances": {
            "gamma0": gamma_variance(g0, n0 * u),
            "gamma1": gamma_variance(g1, n1 * v),
            "u": _binomial_variance(u, n0),
            "v": _binomial_variance(v, n1),
        },
    }


def _estimands_and_gradients(model: str, est: dict) -> dict:
    """Point estimates and gradients (w.r.t. the cube parameters) of each estimand.

    Gradients of ``risk_ratio`` and ``odds_ratio`` are of their logarithms.
    """
    if model == "reduced":
        names = REDUCED_PARAMS
        g0 = g1 = est["gamma"]
        ig0 = ig1 = 0
    else:
        names = SATURATED_PARAMS
        g0, g1 = est["gamma0"], est["gamma1"]
        ig0, ig1 = 0, 1
    u, v = est["u"], est["v"]
    iu, iv = names.index("u"), names.index("v")
    k = len(names)
    zeros = np.zeros(np.shape(u) + (k,))

    s0, s1 = 1.0 + g0, 1.0 + g1
    lam0, lam1 = u / s0, v / s1
    d_lam0 = zeros.copy()
    d_lam0[..., ig0] += -u / s0**2
    d_lam0[..., iu] += 1.0 / s0
    d_lam1 = zeros.copy()
    d_lam1[..., ig1] += -v / s1**2
    d_lam1[..., iv] += 1.0 / s1

    out = {}
    for i, name in enumerate(names):
        unit = zeros.copy()
        unit[..., i] = 1.0
        out[name] = (est[name], unit)
    with np.errstate(divide="ignore", invalid="ignore"):
        out["lambda0"] = (lam0, d_lam0)
        out["lambda1"] = (lam1, d_lam1)
        out["delta"] = (lam1 - lam0, d_lam1 - d_lam0)
        out["risk_ratio"] = (
            lam1 / lam0,
            d_lam1 / lam1[..., None] - d_lam0 / lam0[..., None],
        )
        out["odds_ratio"] = (
            lam1 * (1.0 - lam0) / ((1.0 - lam1) * lam0),
            d_lam1 / (lam1 * (1.0 - lam1))[..., None] - d_lam0 / (lam0 * (1.0 - lam0))[..., None],
        )
    if model == "saturated":
        dg = zeros.copy()
        dg[..., ig0] = -1.0
        dg[..., ig1] = 1.0
        out["delta_gamma"] = (g1 - g0, dg)
        out["excess_diff"] = (g1 - g0 + lam1 - lam0, dg + d_lam1 - d_lam0)
    return out


@dataclass
class WaldInterval:
    estimate: float
    se: float
    lower: float
    upper: float
    scale: str  # "natural" or "log"

    @property
    def sd(self) -> float:
        """Standard deviation on the natural scale (delta method for log-scale estimands)."""
        return self.estimate * self.se if self.scale == "log" else self.se

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "se": self.sd,
            "lower": self.lower,
            "upper": self.upper,
            "scale": self.scale,
        }


def wald_arrays(model: str, fit: dict, level: float = 0.95) -> dict:
    """Vectorized Wald intervals; entries are NaN where unavailable.

    Returns ``name -> (estimate, se, lower, upper, available)`` where ``se``
    is on the interval's own scale (log for ratios).
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    z = norm.ppf(0.5 + level / 2.0)
    est, var = fit["estimates"], fit["variances"]
    names = REDUCED_PARAMS if model == "reduced" else SATURATED_PARAMS
    depends = REDUCED_DEPENDS if model == "reduced" else SATURATED_DEPENDS
    bad = {p: _on_boundary(est[p]) for p in names}
    cov_diag = np.stack([np.asarray(var[p], dtype=float) for p in names], axis=-1)
    grads = _estimands_and_gradients(model, est)
    out = {}
    for name, (value, grad) in grads.items():
        ok = ~np.logical_or.reduce([bad[p] for p in depends[name]])
        with np.errstate(invalid="ignore"):
            se = np.sqrt(np.sum(grad * grad * cov_diag, axis=-1))
        ok = ok & np.isfinite(se) & (se > 0)
        if name in LOG_SCALE:
            with np.errstate(divide="ignore", invalid="ignore"):
                centre = np.log(value)
            lo, hi = np.exp(centre - z * se), np.exp(centre + z * se)
        else:
            lo, hi = value - z * se, value + z * se
        nan = np.nan
        out[name] = (
            np.asarray(value, dtype=float),
            np.where(ok, se, nan),
            np.where(ok, lo, nan),
            np.where(ok, hi, nan),
            ok,
        )
    return out


@dataclass
class MleResult:
    model: str
    adjust: str
    estimates: dict[str, float]
    boundary: dict[str, bool]
    loglik: float
    aic: float
    bic: float
    level: float = 0.95
    intervals: dict[str, WaldInterval | None] = field(default_factory=dict)

    @property
    def any_boundary(self) -> bool:
        return any(self.boundary.values())

    def standard_errors(self) -> dict[str, float | None]:
        return {k: (None if iv is None else iv.sd) for k, iv in self.intervals.items()}

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "adjust": self.adjust,
            "estimates": dict(self.estimates),
            "boundary": dict(self.boundary),
            "loglik": self.loglik,
            "AIC": self.aic,
            "BIC": self.bic,
            "level": self.level,
            "intervals": {k: (None if v is None else v.to_dict()) for k, v in self.intervals.items()},
        }


def _prepare(table: BilateralTable, adjust: str) -> BilateralTable:
    if adjust not in ADJUSTMENTS:
        raise ValueError(f"unknown adjustment {adjust!r}; expected one of {ADJUSTMENTS}")
    return table.adjusted(0.5) if adjust == "add-half" else table


def _cells(t: BilateralTable):
    return (t.m00, t.m10, t.m20, t.m01, t.m11, t.m21)


def _build(model: str, table: BilateralTable, adjust: str, fit: dict, level: float) -> MleResult:
    names = REDUCED_PARAMS if model == "reduced" else SATURATED_PARAMS
    est = {k: float(v) for k, v in fit["estimates"].items()}
    boundary = {p: bool(_on_boundary(est[p])) for p in names}
    # an undefined gamma (no cured subjects) leaves the likelihood flat in gamma
    plug = {p: (0.0 if math.isnan(est[p]) else est[p]) for p in names}
    if model == "reduced":
        ll = log_likelihood_reduced(UVParams(**plug), table)
    else:
        ll = log_likelihood_saturated(SaturatedUVParams(**plug), table)
    k = len(names)
    wald = wald_arrays(model, fit, level)
    estimates = dict(est)
    intervals = {}
    for name, (value, se, lo, hi, ok) in wald.items():
        estimates[name] = float(value)
        if bool(ok):
            scale = "log" if name in LOG_SCALE else "natural"
            intervals[name] = WaldInterval(float(value), float(se), float(lo), float(hi), scale)
        else:
            intervals[name] = None
    return MleResult(
        model=model,
        adjust=adjust,
        estimates=estimates,
        boundary=boundary,
        loglik=ll,
        aic=-2.0 * ll + 2.0 * k,
        bic=-2.0 * ll + k * math.log(table.total),
        level=level,
        intervals=intervals,
    )


def mle_reduced(table: BilateralTable, adjust: str = "none", level: float = 0.95) -> MleResult:
    """Closed-form MLE of the reduced model with Wald intervals at ``level``."""
    t = _prepare(table, adjust)
    return _build("reduced", t, adjust, reduced_fit_arrays(*_cells(t)), level)


def mle_saturated(table: BilateralTable, adjust: str = "none", level: float = 0.95) -> MleResult:
    t = _prepare(table, adjust)
    return _build("saturated", t, adjust, saturated_fit_arrays(*_cells(t)), level)


class WaldUnavailable(ValueError):
    """Wald inference is impossible because an estimate sits on the boundary."""


def wald_intervals(mle: MleResult, table: BilateralTable, level: float = 0.95, require=()) -> dict:
    """Recompute Wald intervals at ``level``; unavailable ones map to ``None``.

    Names in ``require`` that are unavailable raise :class:`WaldUnavailable`.
    """
    t = _prepare(table, mle.adjust)
    fit_fn = reduced_fit_arrays if mle.model == "reduced" else saturated_fit_arrays
    res = _build(mle.model, t, mle.adjust, fit_fn(*_cells(t)), level)
    missing = [n for n in require if res.intervals.get(n) is None]
    if missing:
        raise WaldUnavailable(f"Wald interval unavailable (boundary estimate) for: {', '.join(missing)}")
    return res.intervals


def wald_chi2(table: BilateralTable) -> dict[str, float | None]:
    """Wald squares for lambda0 = lambda1 (reduced fit) and gamma0 = gamma1 (saturated fit).

    These approximate, and need not equal, other large-sample statistics.
    """
    red = mle_reduced(table)
    sat = mle_saturated(table)
    out = {}
    for key, res, name in (("chi2_lambda", red, "delta"), ("chi2_gamma", sat, "delta_gamma")):
        iv = res.intervals[name]
        out[key] = None if iv is None else (iv.estimate / iv.se) ** 2
    return out
