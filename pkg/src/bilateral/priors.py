"""Prior family on the ``(gamma, u, v)`` cube.

    pi(gamma, u, v) ∝ f(gamma; alpha, beta) * Be(u; a0, b0) * Be(v; a1, b1) * (u + r v)^d

where ``f`` is the gamma law of :mod:`bilateral.rng`.  Uniform, Jeffreys and
reference priors are members; Jeffreys is the only one with ``d > 0`` and
therefore the only one that depends on the sample-size ratio ``r``.

``gamma_tilt`` (written ``e`` below) multiplies each gamma factor by
``(1 + gamma)^e``.  It is zero everywhere except for the saturated uniform
prior: a flat prior on a single group's ``(gamma_i, lambda_i)`` gives gamma_i
the factor ``(1 + gamma_i)^(-1)`` rather than the ``(1 + gamma)^(-2)`` that
the flat reduced-model prior gives the shared gamma.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import beta as beta_dist

from .rng import GammaLawParams, gamma_law_logpdf

KINDS = ("uniform", "jeffreys", "reference", "custom")

_NAMED = {
    "uniform": (1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0),
    "jeffreys": (0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5),
    "reference": (0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.0),
}


@dataclass(frozen=True)
class PriorSpec:
    alpha: float
    beta: float
    a0: float
    b0: float
    a1: float
    b1: float
    d: float = 0.0
    kind: str = "custom"
    r: float | None = None
    gamma_tilt: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "a0", "b0", "a1", "b1"):
            if not getattr(self, name) > 0:
                raise ValueError(f"prior shape {name} must be positive, got {getattr(self, name)}")
        if self.d < 0:
            raise ValueError(f"tilt exponent d must be non-negative, got {self.d}")
        if self.d > 0 and not (self.r is not None and self.r > 0):
            raise ValueError("a tilted prior (d > 0) needs a positive sample-size ratio r")
        if self.gamma_tilt < 0:
            raise ValueError(f"gamma_tilt must be non-negative, got {self.gamma_tilt}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown prior kind {self.kind!r}")

    @property
    def gamma_law(self) -> GammaLawParams:
        return GammaLawParams(self.alpha, self.beta)

    @property
    def tilted(self) -> bool:
        return self.d > 0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "alpha": self.alpha,
            "beta": self.beta,
            "a0": self.a0,
            "b0": self.b0,
            "a1": self.a1,
            "b1": self.b1,
            "d": self.d,
            "r": self.r,
            "gamma_tilt": self.gamma_tilt,
        }


def make_prior(kind: str, r: float | None = None, **shapes: float) -> PriorSpec:
    """Named prior (``uniform``, ``jeffreys``, ``reference``) or a ``custom`` one.

    For ``custom`` pass any of alpha, beta, a0, b0, a1, b1, d; unspecified
    shapes default to 1 and ``d`` to 0.
    """
    if kind in _NAMED:
        if shapes:
            raise ValueError(f"{kind} prior has fixed hyperparameters; got {sorted(shapes)}")
        alpha, beta, a0, b0, a1, b1, d = _NAMED[kind]
        return PriorSpec(alpha, beta, a0, b0, a1, b1, d, kind, r if d > 0 else None)
    if kind == "custom":
        unknown = set(shapes) - {"alpha", "beta", "a0", "b0", "a1", "b1", "d"}
        if unknown:
            raise ValueError(f"unknown prior hyperparameters {sorted(unknown)}")
        vals = {k: 1.0 for k in ("alpha", "beta", "a0", "b0", "a1", "b1")}
        vals["d"] = 0.0
        vals.update({k: float(v) for k, v in shapes.items()})
        return PriorSpec(kind="custom", r=r if vals["d"] > 0 else None, **vals)
    raise ValueError(f"unknown prior kind {kind!r}; expected one of {KINDS}")


def saturated_prior(spec: PriorSpec) -> PriorSpec:
    """Hyperparameters used when each group has its own gamma.

    The saturated family carries no ``(u + r v)`` tilt.  For Jeffreys the
    square-root information of each group's gamma absorbs a factor ``u^(1/2)``
    (resp. ``v^(1/2)``), which turns the Be(1/2, 1/2) factors into Be(1, 1/2).
    The flat prior on each ``(gamma_i, lambda_i)`` has Jacobian ``1 / (1 + gamma_i)``
    per group, one power short of the gamma law with unit shapes.
    """
    if spec.kind == "jeffreys":
        return replace(spec, a0=1.0, a1=1.0, d=0.0, r=None)
    if spec.kind == "uniform":
        return replace(spec, gamma_tilt=1.0)
    if spec.tilted:
        raise ValueError("the saturated model supports only untilted (d = 0) custom priors")
    return spec


def h0_theta_shape(kind: str) -> float:
    """First Beta shape ``a`` of the common ``theta = u = v`` under lambda0 = lambda1.

    Jeffreys: the gamma information is proportional to theta, so the square
    root cancels theta^(-1/2) and a = 1.  Reference: a = 1/2.
    """
    if kind == "jeffreys":
        return 1.0
    if kind == "reference":
        return 0.5
    raise ValueError(f"Bayes factors are defined for jeffreys or reference priors, got {kind!r}")


def _check_open_cube(*xs):
    for x in xs:
        x = np.asarray(x, dtype=float)
        if np.any((x <= 0) | (x >= 1)):
            raise ValueError("prior density arguments must lie in the open interval (0, 1)")


def log_prior_density(spec: PriorSpec, gamma, u, v):
    """Log density on the cube, exact up to the normalizing constants of the tilts."""
    _check_open_cube(gamma, u, v)
    out = (
        gamma_law_logpdf(spec.gamma_law, gamma)
        + beta_dist.logpdf(u, spec.a0, spec.b0)
        + beta_dist.logpdf(v, spec.a1, spec.b1)
    )
    if spec.gamma_tilt:
        out = out + spec.gamma_tilt * np.log1p(np.asarray(gamma, dtype=float))
    if spec.tilted:
        out = out + spec.d * np.log(np.asarray(u) + spec.r * np.asarray(v))
    return float(out) if np.ndim(out) == 0 else out


def log_prior_density_omega(spec: PriorSpec, gamma, lambda0, lambda1):
    """Same density expressed over ``(gamma, lambda0, lambda1)`` in Omega."""
    s = 1.0 + np.asarray(gamma, dtype=float)
    return log_prior_density(spec, gamma, s * lambda0, s * lambda1) + 2.0 * np.log(s)
