"""Weighted posterior summaries: moments, intervals, tail probabilities, DIC."""

from __future__ import annotations

import math
import operator
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .model import BilateralTable, log_likelihood_reduced, log_likelihood_saturated
from .posterior import DrawSet, derive_estimands
from .rng import SeededStream

MIN_ESS = 50
HPD_MIN_ESS = 100

REDUCED_ESTIMANDS = ("u", "v", "gamma", "lambda0", "lambda1", "delta", "risk_ratio", "odds_ratio", "rho0", "rho1")
SATURATED_ESTIMANDS = (
    "u",
    "v",
    "gamma0",
    "gamma1",
    "lambda0",
    "lambda1",
    "delta",
    "risk_ratio",
    "odds_ratio",
    "excess_diff",
    "delta_gamma",
    "rho0",
    "rho1",
)

_OPS = {">": operator.gt, ">=": operator.ge, "<": operator.lt, "<=": operator.le}
_THRESHOLD = re.compile(r"^\s*([a-z_][a-z0-9_]*)\s*(>=|<=|>|<)\s*([-+0-9.eE]+)\s*$")


def _effective_size(weights) -> float:
    if weights is None:
        return math.inf
    w = np.asarray(weights, dtype=float)
    return float(w.sum() ** 2 / np.dot(w, w))


def weighted_quantile(values, q, weights=None):
    """Smallest x with weighted CDF(x) >= q (inverse of the step CDF)."""
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="stable")
    x = x[order]
    if weights is None:
        cdf = np.arange(1, len(x) + 1) / len(x)
    else:
        w = np.asarray(weights, dtype=float)[order]
        cdf = np.cumsum(w) / w.sum()
    idx = np.searchsorted(cdf, np.asarray(q) - 1e-12, side="left")
    return x[np.minimum(idx, len(x) - 1)]


def equal_tailed_interval(values, weights=None, level: float = 0.95) -> tuple[float, float]:
    _check_level(level)
    a = (1.0 - level) / 2.0
    lo, hi = weighted_quantile(values, [a, 1.0 - a], weights)
    return float(lo), float(hi)


def _check_level(level: float) -> None:
    if not 0.0 < level < 1.0:
        raise ValueError(f"credible level must lie in (0, 1), got {level}")


def resample_indices(weights: np.ndarray, gen: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Multinomial resampling along the last axis by inverse weighted CDF.

    ``weights`` may be 1-D or 2-D (one row per independent draw set).
    """
    w = np.asarray(weights, dtype=float)
    m = w.shape[-1] if size is None else size
    cdf = np.cumsum(w, axis=-1)
    cdf /= cdf[..., -1:]
    if w.ndim == 1:
        pos = gen.random(m)
        return np.minimum(np.searchsorted(cdf, pos, side="right"), w.shape[-1] - 1)
    rows = w.shape[0]
    pos = gen.random((rows, m))
    # rows are offset by their index so one flat search covers all of them
    offset = np.arange(rows)[:, None]
    flat = np.searchsorted((cdf + offset).ravel(), (pos + offset).ravel(), side="right")
    idx = flat.reshape(rows, m) - offset * w.shape[-1]
    return np.clip(idx, 0, w.shape[-1] - 1)


def hpd_window(sorted_values: np.ndarray, level: float):
    """Minimum-width window over sorted draws along the last axis.

    Windows span ``ceil(level * M)`` consecutive order statistics; the first
    (smallest left index) minimal window wins ties.
    """
    x = np.asarray(sorted_values, dtype=float)
    m = x.shape[-1]
    n_in = max(1, math.ceil(level * m - 1e-9))
    widths = x[..., n_in - 1 :] - x[..., : m - n_in + 1]
    j = np.argmin(widths, axis=-1)
    lo = np.take_along_axis(x, j[..., None], axis=-1)[..., 0]
    hi = np.take_along_axis(x, (j + n_in - 1)[..., None], axis=-1)[..., 0]
    return lo, hi


def hpd_interval(values, weights=None, level: float = 0.95, stream: SeededStream | None = None) -> tuple[float, float]:
    """Chen-Shao Monte Carlo HPD interval.

    Weighted draws are first resampled (with replacement, proportional to
    weight) to an unweighted set of the same size.
    """
    _check_level(level)
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("no draws")
    if weights is not None and not np.all(np.asarray(weights) == weights[0]):
        if _effective_size(weights) < HPD_MIN_ESS:
            warnings.warn("fewer than 100 effective draws for an HPD interval", RuntimeWarning, stacklevel=2)
        stream = stream or SeededStream(0, "summarize/hpd-resample")
        x = x[resample_indices(weights, stream.generator(0))]
    elif x.size < HPD_MIN_ESS:
        warnings.warn("fewer than 100 draws for an HPD interval", RuntimeWarning, stacklevel=2)
    lo, hi = hpd_window(np.sort(x), level)
    return float(lo), float(hi)


@dataclass
class EstimandSummary:
    mean: float
    sd: float
    median: float
    equal_tailed: tuple[float, float]
    hpd: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "sd": self.sd,
            "median": self.median,
            "equal_tailed": list(self.equal_tailed),
            "hpd": list(self.hpd),
        }


@dataclass
class PosteriorSummary:
    model: str
    level: float
    estimands: dict[str, EstimandSummary]
    tail_probabilities: dict[str, float]
    dic: float | None
    p_d: float | None
    n_draws: int
    ess: float
    unreliable: bool = False
    notes: list[str] = field(default_factory=list)

    def __getitem__(self, name: str) -> EstimandSummary:
        return self.estimands[name]

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "level": self.level,
            "estimands": {k: v.to_dict() for k, v in self.estimands.items()},
            "tail_probabilities": dict(self.tail_probabilities),
            "dic": self.dic,
            "pD": self.p_d,
            "n_draws": self.n_draws,
            "ess": self.ess,
            "unreliable": self.unreliable,
            "notes": list(self.notes),
        }


def estimand_arrays(drawset: DrawSet) -> dict[str, np.ndarray]:
    """All per-draw quantities a summary may report, keyed by name."""
    est = derive_estimands(drawset).as_dict()
    out = {"u": drawset.u, "v": drawset.v}
    if drawset.model == "reduced":
        out["gamma"] = drawset.gamma
    else:
        out["gamma0"] = drawset.gamma0
        out["gamma1"] = drawset.gamma1
    out.update(est)
    return out


def parse_threshold(spec: str) -> tuple[str, str, float]:
    """``"delta>0"`` -> ``("delta", ">", 0.0)``."""
    m = _THRESHOLD.match(spec)
    if not m:
        raise ValueError(f"cannot parse threshold {spec!r}; expected e.g. 'delta>0'")
    return m.group(1), m.group(2), float(m.group(3))


def tail_probability(values, op: str, threshold: float, weights=None) -> float:
    hit = _OPS[op](np.asarray(values), threshold)
    if weights is None:
        return float(hit.mean())
    w = np.asarray(weights, dtype=float)
    return float(w @ hit / w.sum())


def summarize(
    drawset: DrawSet,
    level: float = 0.95,
    thresholds=(),
    with_dic: bool = True,
) -> PosteriorSummary:
    """Summaries of every estimand plus the requested tail probabilities.

    ``thresholds`` is a sequence of strings such as ``"delta>0"`` or
    ``"delta_gamma<0"``; each is reported under its own text.
    """
    _check_level(level)
    if len(drawset) == 0:
        raise ValueError("empty draw set")
    arrays = estimand_arrays(drawset)
    names = REDUCED_ESTIMANDS if drawset.model == "reduced" else SATURATED_ESTIMANDS
    weighted = drawset.scheme == "importance"
    w = drawset.normalized_weights if weighted else None
    ess = drawset.ess
    notes = list(drawset.warnings)
    unreliable = ess < MIN_ESS
    if unreliable:
        notes.append(f"effective sample size {ess:.1f} is below {MIN_ESS}; summary unreliable")

    hpd_stream = SeededStream(drawset.seed, "summarize/hpd-resample")
    idx = None
    if weighted:
        idx = resample_indices(w, hpd_stream.generator(0))

    out = {}
    for name in names:
        x = np.asarray(arrays[name], dtype=float)
        if w is None:
            mean = float(x.mean())
            sd = float(np.sqrt(np.mean((x - mean) ** 2)))
        else:
            mean = float(w @ x)
            sd = float(np.sqrt(w @ (x - mean) ** 2))
        med = float(weighted_quantile(x, 0.5, w))
        et = equal_tailed_interval(x, w, level)
        # one shared resample keeps HPD intervals of different estimands coherent
        lo, hi = hpd_window(np.sort(x if idx is None else x[idx]), level)
        out[name] = EstimandSummary(mean, sd, med, et, (float(lo), float(hi)))

    tails = {}
    for spec in thresholds:
        name, op, thr = parse_threshold(spec)
        if name not in arrays:
            raise ValueError(f"unknown estimand {name!r} in threshold {spec!r}")
        tails[spec] = tail_probability(arrays[name], op, thr, w)

    dic_val = p_d = None
    if with_dic:
        dic_val, p_d = dic(drawset)
    return PosteriorSummary(
        model=drawset.model,
        level=level,
        estimands=out,
        tail_probabilities=tails,
        dic=dic_val,
        p_d=p_d,
        n_draws=len(drawset),
        ess=ess,
        unreliable=unreliable,
        notes=notes,
    )


def dic(drawset: DrawSet, table: BilateralTable | None = None) -> tuple[float, float]:
    """Deviance information criterion with the plug-in at the posterior mean.

    Deviance is ``-2 * loglik`` including multinomial coefficients; the
    plug-in is the weighted mean of the sampling-space parameters.
    """
    table = table or drawset.table
    loglik = log_likelihood_reduced if drawset.model == "reduced" else log_likelihood_saturated
    w = drawset.normalized_weights
    dev = -2.0 * np.asarray(loglik(drawset.params(), table))
    d_bar = float(w @ dev)
    d_hat = -2.0 * loglik(drawset.parameter_means(), table)
    if not np.isfinite(d_hat):
        raise RuntimeError("deviance at the posterior mean is not finite")
    p_d = d_bar - d_hat
    return d_bar + p_d, p_d
