"""Seeded random variate generation.

Every random quantity is drawn from a :class:`SeededStream`, a value object
holding a 64-bit seed and a label.  Draws are produced in fixed-size blocks
and block ``b`` of stream ``(seed, label)`` always comes from the same
``numpy.random.Generator``, so output depends only on ``(seed, label, draw
index)`` and never on how many threads assembled it.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import betaln, expit, logit
from scipy.stats import beta as beta_dist

BLOCK_SIZE = 1 << 16
LOG2 = float(np.log(2.0))


@dataclass(frozen=True)
class SeededStream:
    seed: int
    label: str = ""

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")

    def child(self, label: str) -> "SeededStream":
        """Substream for one purpose, e.g. ``stream.child("u")``."""
        full = f"{self.label}/{label}" if self.label else label
        return SeededStream(self.seed, full)

    def _entropy(self, block: int) -> list[int]:
        digest = hashlib.blake2b(self.label.encode("utf-8"), digest_size=16).digest()
        words = np.frombuffer(digest, dtype="<u4").tolist()
        seed = int(self.seed)
        return [seed & 0xFFFFFFFF, seed >> 32, *words, int(block)]

    def generator(self, block: int = 0) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self._entropy(block))))


def draw_blocks(
    stream: SeededStream,
    n: int,
    fill: Callable[[np.random.Generator, int], np.ndarray],
    threads: int = 1,
) -> np.ndarray:
    """Assemble ``n`` draws block by block; ``fill(gen, count)`` makes one block.

    Blocks are independent, so sharding them over threads gives the same
    array as a serial run.
    """
    n = int(n)
    if n < 0:
        raise ValueError("draw count must be non-negative")
    if n == 0:
        return fill(stream.generator(0), 0)
    n_blocks = -(-n // BLOCK_SIZE)

    def one(b: int) -> np.ndarray:
        count = min(BLOCK_SIZE, n - b * BLOCK_SIZE)
        return fill(stream.generator(b), count)

    if threads > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, range(n_blocks)))
    else:
        parts = [one(b) for b in range(n_blocks)]
    return np.concatenate(parts)


def _check_shapes(*shapes: float) -> None:
    for s in shapes:
        if not np.all(np.asarray(s) > 0):
            raise ValueError(f"shape parameters must be positive, got {s}")


def beta_sample(stream: SeededStream, alpha: float, beta: float, size: int = 1, threads: int = 1) -> np.ndarray:
    """Draw ``size`` Be(alpha, beta) variates."""
    _check_shapes(alpha, beta)
    return draw_blocks(stream, size, lambda g, k: g.beta(alpha, beta, k), threads)


def uniform_sample(stream: SeededStream, size: int = 1, threads: int = 1) -> np.ndarray:
    return draw_blocks(stream, size, lambda g, k: g.random(k), threads)


@dataclass(frozen=True)
class GammaLawParams:
    """Shapes of f(g) = 2^mu / B(mu, nu) g^(mu-1) (1-g)^(nu-1) / (1+g)^(mu+nu) on (0, 1)."""

    mu: float
    nu: float

    def __post_init__(self):
        _check_shapes(self.mu, self.nu)


def gamma_from_beta_ratio(pi: np.ndarray) -> np.ndarray:
    """Map pi ~ Be(nu, mu) to the gamma law via g = (1 - pi) / (1 + pi)."""
    return (1.0 - pi) / (1.0 + pi)


def gamma_from_logit(p: np.ndarray) -> np.ndarray:
    """Map p ~ Be(mu, nu) to the gamma law via g = expit(logit(p) - log 2)."""
    return expit(logit(p) - LOG2)


def gamma_law_sample(
    stream: SeededStream,
    params: GammaLawParams,
    size: int = 1,
    method: str = "A2",
    threads: int = 1,
) -> np.ndarray:
    """Draw from the gamma law by one of two exact Beta transforms.

    ``"A2"`` (default) draws pi ~ Be(nu, mu); ``"A1"`` draws p ~ Be(mu, nu)
    and shifts its logit by log 2.
    """
    if method == "A2":
        return gamma_from_beta_ratio(beta_sample(stream, params.nu, params.mu, size, threads))
    if method == "A1":
        return gamma_from_logit(beta_sample(stream, params.mu, params.nu, size, threads))
    raise ValueError(f"unknown gamma-law method {method!r}; expected 'A1' or 'A2'")


def gamma_law_logpdf(params: GammaLawParams, gamma):
    g = np.asarray(gamma, dtype=float)
    mu, nu = params.mu, params.nu
    return (
        mu * LOG2
        - betaln(mu, nu)
        + (mu - 1.0) * np.log(g)
        + (nu - 1.0) * np.log1p(-g)
        - (mu + nu) * np.log1p(g)
    )


def gamma_law_density(params: GammaLawParams, gamma):
    g = np.asarray(gamma, dtype=float)
    if np.any((g <= 0.0) | (g >= 1.0)):
        raise ValueError("gamma must lie in the open interval (0, 1)")
    out = np.exp(gamma_law_logpdf(params, g))
    return float(out) if out.ndim == 0 else out


def gamma_law_cdf(params: GammaLawParams, gamma):
    """CDF through pi = (1-g)/(1+g) ~ Be(nu, mu): F(g) = P(pi >= pi(g))."""
    g = np.asarray(gamma, dtype=float)
    return beta_dist.sf((1.0 - g) / (1.0 + g), params.nu, params.mu)


def gamma_law_mode(params: GammaLawParams) -> float:
    """Mode for mu, nu > 1."""
    mu, nu = params.mu, params.nu
    if mu <= 1 or nu <= 1:
        raise ValueError("closed-form mode requires mu > 1 and nu > 1")
    lam = (2 * nu + mu - 1) ** 2 - 8 * (mu - 1)
    return 2 * (mu - 1) / (2 * nu + mu - 1 + np.sqrt(lam))


def trinomial_sample(
    stream: SeededStream,
    n,
    p0: float,
    p1: float,
    p2: float,
    size: int = 1,
) -> np.ndarray:
    """Counts (k0, k1, k2) by sequential binomials; returns shape ``(size, 3)``.

    ``n`` may be an integer or an integer array broadcastable to ``size``.
    """
    p = np.array([p0, p1, p2], dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"invalid trinomial probability vector {tuple(p)}")
    n = np.broadcast_to(np.asarray(n, dtype=np.int64), (size,))
    if np.any(n < 0):
        raise ValueError("trial count must be non-negative")
    p = p / p.sum()
    g = stream.generator(0)
    k0 = g.binomial(n, p[0])
    rest = 1.0 - p[0]
    cond = 0.0 if rest <= 0 else min(1.0, p[1] / rest)
    k1 = g.binomial(n - k0, cond)
    return np.stack([k0, k1, n - k0 - k1], axis=-1)
