"""Exact one-shot posterior samplers for the reduced and saturated models.

Under any member of the prior family the posterior on the cube factorizes:
gamma follows the gamma law with shapes ``(m_1+ + alpha, m_2+ + beta)`` and
``u``, ``v`` are independent Betas, up to the ``(u + r v)^d`` tilt.  Untilted
priors are sampled directly; the Jeffreys tilt is handled by importance
weights ``(u + r v)^(1/2)`` or by accepting a pair with probability
``w / (1 + r)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .model import BilateralTable, Estimands, SaturatedUVParams, UVParams, estimands_from
from .priors import PriorSpec, saturated_prior
from .rng import GammaLawParams, SeededStream, beta_sample, gamma_from_beta_ratio, gamma_law_sample, uniform_sample

MIN_DRAWS = 1000
SCHEMES = ("direct", "rejection", "importance")


@dataclass(frozen=True, eq=False)
class DrawSet:
    """Posterior draws on the cube with importance weights.

    Reduced draws fill ``gamma``; saturated draws fill ``gamma0`` and
    ``gamma1``.  ``m`` is the requested draw count (rejection may keep fewer).
    """

    model: str
    u: np.ndarray
    v: np.ndarray
    weights: np.ndarray
    prior: PriorSpec
    table: BilateralTable
    seed: int
    m: int
    scheme: str
    gamma: np.ndarray | None = None
    gamma0: np.ndarray | None = None
    gamma1: np.ndarray | None = None
    acceptance_rate: float = 1.0
    warnings: tuple = field(default=())

    def __len__(self) -> int:
        return len(self.u)

    @property
    def normalized_weights(self) -> np.ndarray:
        return self.weights / self.weights.sum()

    @property
    def ess(self) -> float:
        """Kish effective sample size."""
        w = self.weights
        return float(w.sum() ** 2 / np.dot(w, w))

    def params(self):
        if self.model == "reduced":
            return UVParams(self.gamma, self.u, self.v)
        return SaturatedUVParams(self.gamma0, self.gamma1, self.u, self.v)

    def parameter_means(self):
        """Weighted posterior mean of the sampling-space parameters."""
        w = self.normalized_weights
        if self.model == "reduced":
            return UVParams(float(w @ self.gamma), float(w @ self.u), float(w @ self.v))
        return SaturatedUVParams(float(w @ self.gamma0), float(w @ self.gamma1), float(w @ self.u), float(w @ self.v))

    def subset(self, mask: np.ndarray) -> "DrawSet":
        pick = lambda a: None if a is None else a[mask]  # noqa: E731
        return DrawSet(
            model=self.model,
            u=self.u[mask],
            v=self.v[mask],
            weights=self.weights[mask],
            prior=self.prior,
            table=self.table,
            seed=self.seed,
            m=self.m,
            scheme=self.scheme,
            gamma=pick(self.gamma),
            gamma0=pick(self.gamma0),
            gamma1=pick(self.gamma1),
            acceptance_rate=self.acceptance_rate,
            warnings=self.warnings,
        )


def posterior_shapes(table: BilateralTable, prior: PriorSpec):
    """Conjugate update: gamma-law shapes and the two Beta shape pairs."""
    return (
        GammaLawParams(table.m_1plus + prior.alpha, table.m_2plus + prior.beta),
        (table.m10 + table.m20 + prior.a0, table.m00 + prior.b0),
        (table.m11 + table.m21 + prior.a1, table.m01 + prior.b1),
    )


_LO, _HI = np.finfo(float).tiny, np.nextafter(1.0, 0.0)


def _open(x: np.ndarray) -> np.ndarray:
    # a Beta variate can round to exactly 0 or 1 in double precision
    return np.clip(x, _LO, _HI)


def _size_warnings(m: int) -> tuple:
    if m < 1:
        raise ValueError("draw count M must be at least 1")
    if m < MIN_DRAWS:
        msg = f"M={m} is below the recommended minimum of {MIN_DRAWS} draws"
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
        return (msg,)
    return ()


def _stream(seed: int, model: str) -> SeededStream:
    return SeededStream(seed, f"posterior/{model}")


def sample_reduced(
    table: BilateralTable,
    prior: PriorSpec,
    m: int = 100_000,
    seed: int = 0,
    scheme: str | None = None,
    threads: int = 1,
) -> DrawSet:
    """Draw from the reduced-model posterior.

    ``scheme`` defaults to ``direct`` for untilted priors and ``importance``
    for Jeffreys; ``rejection`` keeps only accepted pairs, each with weight 1.
    """
    if scheme is None:
        scheme = "importance" if prior.tilted else "direct"
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if prior.tilted and scheme == "direct":
        raise ValueError("direct sampling ignores the (u + r v)^d tilt; use 'importance' or 'rejection'")
    if not prior.tilted and scheme != "direct":
        raise ValueError(f"scheme {scheme!r} needs a tilted (d > 0) prior; use 'direct'")
    if prior.tilted and prior.d != 0.5:
        raise ValueError("weighted schemes are implemented for the square-root tilt d = 1/2")
    notes = _size_warnings(m)

    law, (ua, ub), (va, vb) = posterior_shapes(table, prior)
    stream = _stream(seed, "reduced")
    gamma = _open(tilted_gamma_sample(stream.child("gamma"), law, prior.gamma_tilt, m, threads))
    u = _open(beta_sample(stream.child("u"), ua, ub, m, threads))
    v = _open(beta_sample(stream.child("v"), va, vb, m, threads))
    weights = np.ones(m)
    rate = 1.0
    if scheme != "direct":
        r = table.r
        w = np.sqrt(u + r * v)
        if scheme == "importance":
            weights = w
        else:
            xi = uniform_sample(stream.child("xi"), m, threads)
            keep = xi < w / (1.0 + r)
            gamma, u, v = gamma[keep], u[keep], v[keep]
            weights = np.ones(int(keep.sum()))
            rate = float(keep.mean())
            if not keep.any():
                raise RuntimeError("rejection sampler accepted no draws; increase M")
    return DrawSet(
        model="reduced",
        u=u,
        v=v,
        weights=weights,
        prior=prior,
        table=table,
        seed=seed,
        m=m,
        scheme=scheme,
        gamma=gamma,
        acceptance_rate=rate,
        warnings=notes,
    )


def sample_saturated(
    table: BilateralTable,
    prior: PriorSpec,
    m: int = 100_000,
    seed: int = 0,
    threads: int = 1,
) -> DrawSet:
    """Draw from the saturated-model posterior; all four components independent."""
    sat = saturated_prior(prior)
    notes = _size_warnings(m)
    stream = _stream(seed, "saturated")
    law0 = GammaLawParams(table.m10 + sat.alpha, table.m20 + sat.beta)
    law1 = GammaLawParams(table.m11 + sat.alpha, table.m21 + sat.beta)
    gamma0 = _open(tilted_gamma_sample(stream.child("gamma0"), law0, sat.gamma_tilt, m, threads))
    gamma1 = _open(tilted_gamma_sample(stream.child("gamma1"), law1, sat.gamma_tilt, m, threads))
    u = _open(beta_sample(stream.child("u"), table.m10 + table.m20 + sat.a0, table.m00 + sat.b0, m, threads))
    v = _open(beta_sample(stream.child("v"), table.m11 + table.m21 + sat.a1, table.m01 + sat.b1, m, threads))
    return DrawSet(
        model="saturated",
        u=u,
        v=v,
        weights=np.ones(m),
        prior=sat,
        table=table,
        seed=seed,
        m=m,
        scheme="direct",
        gamma0=gamma0,
        gamma1=gamma1,
        warnings=notes,
    )


def tilted_gamma_sample(stream: SeededStream, law: GammaLawParams, tilt: float, m: int, threads: int = 1) -> np.ndarray:
    """Exact draws from ``f(gamma; mu, nu) * (1 + gamma)^tilt`` by rejection.

    With ``pi = (1 - gamma) / (1 + gamma) ~ Be(nu, mu)`` the tilt becomes
    ``(1 + pi)^(-tilt)`` up to a constant, so a Be(nu, mu) proposal is kept
    with that probability (never below ``2^-tilt``).  Rounds use their own
    substreams, so the result depends only on the stream and ``m``.
    """
    if tilt == 0:
        return gamma_law_sample(stream, law, m, threads=threads)
    kept, need, k = [], m, 0
    while need > 0:
        n = int(math.ceil(need * 2.0**tilt * 1.1)) + 64
        s = stream.child(f"round{k}")
        pi = beta_sample(s.child("pi"), law.nu, law.mu, n, threads)
        xi = uniform_sample(s.child("xi"), n, threads)
        acc = pi[xi < (1.0 + pi) ** (-tilt)][:need]
        kept.append(acc)
        need -= acc.size
        k += 1
    return gamma_from_beta_ratio(np.concatenate(kept))


def derive_estimands(drawset: DrawSet) -> Estimands:
    """Per-draw estimands as arrays aligned with the draws."""
    if len(drawset) == 0:
        raise ValueError("empty draw set")
    return estimands_from(drawset.params())
