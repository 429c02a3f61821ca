"""Repeated-sampling comparison of Wald and HPD intervals.

For a true risk difference ``delta_h`` a grid of 81 ``(gamma, lambda0)``
points is built; at each point balanced tables are simulated and every method
is scored on coverage of the true value, mean interval width and mean squared
error of its point estimate (MLE for Wald, posterior mean for the Bayesian
methods).  Wald fits with any boundary estimate or zero variance are excluded
from the Wald tallies and counted.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .mle import reduced_fit_arrays, wald_arrays
from .model import in_omega, trinomial_probs
from .priors import make_prior
from .rng import SeededStream, gamma_from_beta_ratio, trinomial_sample
from .summarize import hpd_window, resample_indices

METHODS = ("wald", "hpd-uniform", "hpd-jeffreys", "hpd-reference")
PARAMETERS = ("gamma", "lambda0", "lambda1", "delta")
GLOBAL_MSE_PARAMS = ("gamma", "lambda0", "lambda1")


@dataclass(frozen=True)
class GridPoint:
    delta_h: float
    gamma: float
    lambda0: float
    lambda1: float
    m: int

    def truth(self) -> dict[str, float]:
        return {"gamma": self.gamma, "lambda0": self.lambda0, "lambda1": self.lambda1, "delta": self.delta_h}


def build_grid(delta_h: float, m: int) -> list[GridPoint]:
    """The 81 admissible ``(gamma, lambda0, lambda0 + delta_h)`` points for one delta."""
    if not 0.0 <= delta_h <= 0.9:
        raise ValueError(f"delta_h must lie in [0, 0.9], got {delta_h}")
    if m < 2:
        raise ValueError(f"per-group size m must be at least 2, got {m}")
    g_max = 1.0 if delta_h == 0 else min(1.0, 1.0 / delta_h - 1.0)
    points = []
    for j in range(1, 10):
        g = j * g_max / 10.0
        lam_max = 1.0 / (1.0 + g) - delta_h
        for k in range(1, 10):
            lam0 = k * lam_max / 10.0
            points.append(GridPoint(delta_h, g, lam0, lam0 + delta_h, int(m)))
    return points


@dataclass
class MethodTally:
    """Running sums for one method and parameter; merging is addition."""

    n: int = 0
    covered: int = 0
    width_sum: float = 0.0
    sq_err_sum: float = 0.0

    def add(self, other: "MethodTally") -> None:
        self.n += other.n
        self.covered += other.covered
        self.width_sum += other.width_sum
        self.sq_err_sum += other.sq_err_sum

    @property
    def coverage(self) -> float | None:
        return self.covered / self.n if self.n else None

    @property
    def width(self) -> float | None:
        return self.width_sum / self.n if self.n else None

    @property
    def mse(self) -> float | None:
        return self.sq_err_sum / self.n if self.n else None


@dataclass
class CriteriaSummary:
    point: GridPoint
    level: float
    n_rep: int
    tallies: dict[str, dict[str, MethodTally]] = field(default_factory=dict)
    excluded: int = 0

    def coverage(self, method: str, param: str) -> float | None:
        return self.tallies[method][param].coverage

    def width(self, method: str, param: str) -> float | None:
        return self.tallies[method][param].width

    def mse(self, method: str, param: str) -> float | None:
        return self.tallies[method][param].mse

    def global_mse(self, method: str) -> float | None:
        vals = [self.mse(method, p) for p in GLOBAL_MSE_PARAMS]
        return None if any(v is None for v in vals) else float(sum(vals))

    def rows(self) -> list[dict]:
        out = []
        for method, per in self.tallies.items():
            for param, t in per.items():
                out.append(
                    {
                        "delta_h": self.point.delta_h,
                        "m": self.point.m,
                        "gamma": self.point.gamma,
                        "lambda0": self.point.lambda0,
                        "lambda1": self.point.lambda1,
                        "method": method,
                        "parameter": param,
                        "level": self.level,
                        "n_rep": self.n_rep,
                        "n_used": t.n,
                        "excluded": self.excluded if method == "wald" else 0,
                        "coverage": t.coverage,
                        "width": t.width,
                        "mse": t.mse,
                        "global_mse": self.global_mse(method),
                    }
                )
        return out


def simulate_tables(point: GridPoint, n_rep: int, stream: SeededStream) -> dict[str, np.ndarray]:
    """Balanced product-trinomial tables at ``point``; arrays of length ``n_rep``."""
    cells = {}
    for grp, lam in (("0", point.lambda0), ("1", point.lambda1)):
        p0, p1, p2 = trinomial_probs(point.gamma, lam)
        counts = trinomial_sample(stream.child(f"group{grp}"), point.m, max(p0, 0.0), p1, p2, size=n_rep)
        for h in range(3):
            cells[f"m{h}{grp}"] = counts[:, h]
    return cells


def _bayes_draws(cells: dict, kind: str, m_draws: int, gen: np.random.Generator, r: float):
    prior = make_prior(kind, r=r)
    col = lambda a: np.asarray(a, dtype=float)[:, None]  # noqa: E731
    n = len(cells["m00"])
    mu = col(cells["m10"] + cells["m11"]) + prior.alpha
    nu = col(cells["m20"] + cells["m21"]) + prior.beta
    gamma = gamma_from_beta_ratio(gen.beta(nu, mu, size=(n, m_draws)))
    u = gen.beta(col(cells["m10"] + cells["m20"]) + prior.a0, col(cells["m00"]) + prior.b0, size=(n, m_draws))
    v = gen.beta(col(cells["m11"] + cells["m21"]) + prior.a1, col(cells["m01"]) + prior.b1, size=(n, m_draws))
    s = 1.0 + gamma
    draws = {"gamma": gamma, "lambda0": u / s, "lambda1": v / s}
    draws["delta"] = draws["lambda1"] - draws["lambda0"]
    weights = np.sqrt(u + r * v) if prior.tilted else None
    return draws, weights


def _score_bayes(cells, kind, point, level, m_draws, gen) -> dict[str, MethodTally]:
    draws, w = _bayes_draws(cells, kind, m_draws, gen, r=1.0)  # balanced design
    idx = resample_indices(w, gen) if w is not None else None
    truth = point.truth()
    out = {}
    for p in PARAMETERS:
        x = draws[p]
        if w is None:
            est = x.mean(axis=1)
            hx = x
        else:
            est = np.sum(w * x, axis=1) / w.sum(axis=1)
            hx = np.take_along_axis(x, idx, axis=1)
        lo, hi = hpd_window(np.sort(hx, axis=1), level)
        t = truth[p]
        out[p] = MethodTally(
            n=len(est),
            covered=int(np.sum((lo <= t) & (t <= hi))),
            width_sum=float(np.sum(hi - lo)),
            sq_err_sum=float(np.sum((est - t) ** 2)),
        )
    return out


def _score_wald(cells, point, level) -> tuple[dict[str, MethodTally], int]:
    fit = reduced_fit_arrays(*(cells[c] for c in ("m00", "m10", "m20", "m01", "m11", "m21")))
    wald = wald_arrays("reduced", fit, level)
    degenerate = ~np.logical_and.reduce([wald[p][4] for p in ("gamma", "u", "v")])
    keep = ~degenerate
    truth = point.truth()
    out = {}
    for p in PARAMETERS:
        est, _, lo, hi, _ = wald[p]
        est, lo, hi = est[keep], lo[keep], hi[keep]
        t = truth[p]
        out[p] = MethodTally(
            n=int(keep.sum()),
            covered=int(np.sum((lo <= t) & (t <= hi))),
            width_sum=float(np.sum(hi - lo)),
            sq_err_sum=float(np.sum((est - t) ** 2)),
        )
    return out, int(degenerate.sum())


def run_cell(
    point: GridPoint,
    n_rep: int = 2000,
    level: float = 0.90,
    methods=METHODS,
    m_bayes: int = 1000,
    seed: int = 0,
    chunk: int = 250,
) -> CriteriaSummary:
    """Score ``methods`` at one grid point over ``n_rep`` simulated tables.

    Replicates are processed in chunks of ``chunk`` tables, each chunk with
    its own substream, so memory stays bounded at large ``m_bayes``.
    """
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown methods {sorted(unknown)}; expected a subset of {METHODS}")
    if not in_omega(point.gamma, point.lambda0, point.lambda1):
        raise ValueError(f"grid point outside the parameter space: {point}")
    summary = CriteriaSummary(point, level, int(n_rep), {mt: {p: MethodTally() for p in PARAMETERS} for mt in methods})
    base = SeededStream(seed, "simstudy/cell")
    for c, start in enumerate(range(0, int(n_rep), chunk)):
        size = min(chunk, n_rep - start)
        stream = base.child(f"chunk{c}")
        cells = simulate_tables(point, size, stream.child("tables"))
        for method in methods:
            if method == "wald":
                tallies, excluded = _score_wald(cells, point, level)
                summary.excluded += excluded
            else:
                gen = stream.child(method).generator(0)
                tallies = _score_bayes(cells, method.removeprefix("hpd-"), point, level, m_bayes, gen)
            for p, t in tallies.items():
                summary.tallies[method][p].add(t)
    return summary


def run_grid(
    delta_h: float,
    m: int,
    n_rep: int = 2000,
    level: float = 0.90,
    methods=METHODS,
    m_bayes: int = 1000,
    seed: int = 0,
    threads: int = 1,
) -> list[CriteriaSummary]:
    """Run all 81 cells; cell ``i`` uses seed stream ``simstudy/grid/i``."""
    grid = build_grid(delta_h, m)

    def one(i: int) -> CriteriaSummary:
        cell_seed = int(SeededStream(seed, f"simstudy/grid/{i}").generator(0).integers(0, 2**63))
        return run_cell(grid[i], n_rep, level, methods, m_bayes, cell_seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(len(grid))))
    return [one(i) for i in range(len(grid))]


@dataclass
class CoverageReport:
    nominal: float
    within: dict[tuple[str, str], float]
    above: dict[tuple[str, str], float]

    def format(self) -> str:
        lines = [f"nominal coverage {self.nominal:g}", f"{'method':<15}{'parameter':<10}{'within 0.01':>12}{'above -0.02':>13}"]
        for key in self.within:
            lines.append(f"{key[0]:<15}{key[1]:<10}{self.within[key]:>12.3f}{self.above[key]:>13.3f}")
        return "\n".join(lines)


def coverage_report(summaries, nominal: float) -> CoverageReport:
    """Share of cells whose coverage is within 0.01 of nominal, and at least nominal - 0.02.

    ``summaries`` holds :class:`CriteriaSummary` objects or, for ad-hoc use,
    plain coverages (reported under method ``"-"`` and parameter ``"-"``).
    """
    summaries = list(summaries)
    if not summaries:
        raise ValueError("coverage_report needs at least one summary")
    eps = 1e-12
    groups: dict[tuple[str, str], list[float]] = {}
    for s in summaries:
        if isinstance(s, CriteriaSummary):
            for method, per in s.tallies.items():
                for p, t in per.items():
                    if t.coverage is not None:
                        groups.setdefault((method, p), []).append(t.coverage)
        else:
            groups.setdefault(("-", "-"), []).append(float(s))
    within = {k: float(np.mean([abs(c - nominal) <= 0.01 + eps for c in v])) for k, v in groups.items()}
    above = {k: float(np.mean([c >= nominal - 0.02 - eps for c in v])) for k, v in groups.items()}
    return CoverageReport(nominal, within, above)


CSV_FIELDS = (
    "delta_h",
    "m",
    "gamma",
    "lambda0",
    "lambda1",
    "method",
    "parameter",
    "level",
    "n_rep",
    "n_used",
    "excluded",
    "coverage",
    "width",
    "mse",
    "global_mse",
)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def to_csv(summaries) -> str:
    """One row per cell x method x parameter."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for s in summaries:
        for row in s.rows():
            w.writerow([_fmt(row[k]) for k in CSV_FIELDS])
    return buf.getvalue()
