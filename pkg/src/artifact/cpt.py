"""Cumulative prospect theory (CPT) values of random outcomes.

A :class:`CptSpec` fixes a reference point, a utility for gains and one for
losses, and a probability weighting function for each side. The value of a
random outcome X is the integral of the weighted tail probabilities of the
gain utility minus the same for the loss utility.

Exact evaluation is offered for finite discrete distributions, and an
order-statistics estimator covers samples from anything else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .estimators import NoisyOracle, as_param_vector

__all__ = [
    "WeightingFunction",
    "UtilityFunction",
    "CptSpec",
    "DiscreteDistribution",
    "CptValue",
    "CptOracle",
    "weighting_eval",
    "parse_weighting",
    "parse_utility",
    "cpt_exact_discrete",
    "cpt_estimate",
    "cpt_oracle",
]

# Tversky-Kahneman weights stop being monotone below this exponent.
TK_MIN_ETA = 0.27


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class WeightingFunction:
    """``kind`` is ``"identity"``, ``"power"`` or ``"tk"``; ``eta`` is its exponent."""

    kind: str = "identity"
    eta: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("identity", "power", "tk"):
            raise ValueError(f"unknown weighting kind {self.kind!r}")
        if not math.isfinite(self.eta):
            raise ValueError(f"weighting exponent must be finite, got {self.eta!r}")
        if self.kind == "power" and self.eta <= 0:
            raise ValueError(f"power weighting needs eta > 0, got {self.eta!r}")
        if self.kind == "tk" and not TK_MIN_ETA < self.eta <= 1.0:
            raise ValueError(f"tk weighting needs eta in ({TK_MIN_ETA}, 1], got {self.eta!r}")

    @property
    def code(self) -> int:
        return {"identity": kernels.W_IDENTITY, "power": kernels.W_POWER, "tk": kernels.W_TK}[self.kind]

    @property
    def name(self) -> str:
        if self.kind == "identity":
            return "identity"
        if self.kind == "power":
            return f"power:{_fmt(self.eta)}"
        return f"tk-{_fmt(self.eta)}"

    def __call__(self, p):
        if np.ndim(p) == 0:
            return weighting_eval(self, float(p))
        p = np.asarray(p, dtype=np.float64)
        if np.any((p < 0) | (p > 1)):
            raise ValueError("probabilities must lie in [0, 1]")
        return kernels.weight_array(self.code, self.eta, p)


@dataclass(frozen=True)
class UtilityFunction:
    """``"identity"`` (``u(x)=x``) or ``"power"`` (``u(x)=x**sigma``) on ``x >= 0``."""

    kind: str = "identity"
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("identity", "power"):
            raise ValueError(f"unknown utility kind {self.kind!r}")
        if self.kind == "power" and not 0.0 < self.sigma <= 1.0:
            raise ValueError(f"power utility needs sigma in (0, 1], got {self.sigma!r}")

    @property
    def code(self) -> int:
        return kernels.U_POWER if self.kind == "power" else kernels.U_IDENTITY

    @property
    def par(self) -> float:
        return self.sigma if self.kind == "power" else 1.0

    @property
    def name(self) -> str:
        return "identity" if self.kind == "identity" else f"power:{_fmt(self.sigma)}"

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < 0):
            raise ValueError("utilities are defined on non-negative arguments")
        out = x ** self.sigma if self.kind == "power" else x
        return float(out) if out.ndim == 0 else out


def weighting_eval(w: WeightingFunction, p: float) -> float:
    """Evaluate ``w`` at ``p``; the endpoints 0 and 1 map to themselves exactly."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return float(p)
    if w.kind == "power":
        return p ** w.eta
    if w.kind == "tk":
        num = p ** w.eta
        return num / (num + (1.0 - p) ** w.eta) ** (1.0 / w.eta)
    return float(p)


def parse_weighting(name: str) -> WeightingFunction:
    """Parse ``"identity"``, ``"power:<eta>"`` or ``"tk-<eta>"``."""
    text = name.strip().lower()
    if text == "identity":
        return WeightingFunction()
    for prefix, kind in (("power:", "power"), ("tk-", "tk"), ("tk:", "tk")):
        if text.startswith(prefix):
            try:
                eta = float(text[len(prefix):])
            except ValueError:
                break
            return WeightingFunction(kind, eta)
    raise ValueError(f"unknown weighting preset {name!r}")


def parse_utility(name: str) -> UtilityFunction:
    """Parse ``"identity"`` or ``"power:<sigma>"``."""
    text = name.strip().lower()
    if text == "identity":
        return UtilityFunction()
    if text.startswith("power:"):
        try:
            return UtilityFunction("power", float(text[6:]))
        except ValueError:
            pass
    raise ValueError(f"unknown utility preset {name!r}")


@dataclass(frozen=True)
class CptSpec:
    b: float = 0.0
    u_plus: UtilityFunction = UtilityFunction()
    u_minus: UtilityFunction = UtilityFunction()
    w_plus: WeightingFunction = WeightingFunction()
    w_minus: WeightingFunction = WeightingFunction()

    def __post_init__(self) -> None:
        if not math.isfinite(self.b):
            raise ValueError(f"reference point must be finite, got {self.b!r}")

    @classmethod
    def identity(cls, b: float = 0.0) -> "CptSpec":
        return cls(b=b)

    @classmethod
    def tversky_kahneman(cls, b: float = 0.0, eta_plus: float = 0.61,
                         eta_minus: float = 0.69, sigma: float = 0.88) -> "CptSpec":
        """Conventional calibration: TK weights and power utilities on both sides."""
        u = UtilityFunction("power", sigma)
        return cls(b, u, u, WeightingFunction("tk", eta_plus), WeightingFunction("tk", eta_minus))


@dataclass(frozen=True)
class DiscreteDistribution:
    outcomes: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.outcomes, dtype=np.float64).ravel()
        p = np.asarray(self.probabilities, dtype=np.float64).ravel()
        if x.shape != p.shape or x.size == 0:
            raise ValueError("outcomes and probabilities must be non-empty and equally long")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
            raise ValueError("outcomes and probabilities must be finite")
        if np.any(p < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {math.fsum(p)!r}, not 1")
        object.__setattr__(self, "outcomes", x)
        object.__setattr__(self, "probabilities", p)

    def mean(self) -> float:
        return math.fsum(self.outcomes * self.probabilities)


@dataclass(frozen=True)
class CptValue:
    value: float
    gain_part: float
    loss_part: float


def _tail_integral(levels: np.ndarray, probs: np.ndarray, w: WeightingFunction) -> float:
    """``int_0^inf w(P(U > t)) dt`` for a discrete non-negative U."""
    keep = (levels > 0) & (probs > 0)
    if not np.any(keep):
        return 0.0
    levels, probs = levels[keep], probs[keep]
    order = np.argsort(levels, kind="stable")
    levels, probs = levels[order], probs[order]
    distinct, start = np.unique(levels, return_index=True)
    mass = np.add.reduceat(probs, start)
    # P(U > t) on [t_k, t_{k+1}) is the mass at levels >= t_{k+1}
    tail = np.cumsum(mass[::-1])[::-1]
    widths = np.diff(np.concatenate(([0.0], distinct)))
    total = 0.0
    for t, width in zip(tail, widths):
        total += weighting_eval(w, min(float(t), 1.0)) * width
    return total


def cpt_exact_discrete(dist: DiscreteDistribution, spec: CptSpec) -> CptValue:
    """Exact CPT value of a finite discrete distribution.

    The tail probability is piecewise constant between consecutive utility
    levels, so each integral is a finite sum and no quadrature is needed.
    """
    d = dist.outcomes - spec.b
    gains = spec.u_plus(np.maximum(d, 0.0))
    losses = spec.u_minus(np.maximum(-d, 0.0))
    gain = _tail_integral(np.atleast_1d(gains), dist.probabilities, spec.w_plus)
    loss = _tail_integral(np.atleast_1d(losses), dist.probabilities, spec.w_minus)
    return CptValue(gain - loss, gain, loss)


def cpt_estimate(samples, spec: CptSpec) -> float:
    """Order-statistics estimate of the CPT value from i.i.d. samples.

    With ascending samples ``x_(1) <= ... <= x_(n)``, the gain of rank ``i``
    is weighted by ``w+((n+1-i)/n) - w+((n-i)/n)`` and the loss of rank
    ``i`` by ``w-(i/n) - w-((i-1)/n)``. Identity weights reduce this to the
    sample mean of ``X - b``.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("cpt_estimate needs at least one sample")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    x = np.sort(x, kind="stable")
    gain, loss = kernels.cpt_sorted_sum(
        x, spec.b,
        spec.u_plus.code, spec.u_plus.par, spec.u_minus.code, spec.u_minus.par,
        spec.w_plus.code, spec.w_plus.eta, spec.w_minus.code, spec.w_minus.eta,
    )
    return gain - loss


Sampler = Callable[[np.ndarray, np.random.Generator, int], np.ndarray]


class CptOracle(NoisyOracle):
    """Noisy oracle returning a batch CPT estimate of ``X(theta)``.

    One call draws ``m`` samples from ``sampler(theta, rng, m)`` and counts
    as a single evaluation; the draws are tallied in ``inner_draws``.
    """

    def __init__(self, sampler: Sampler, m: int, spec: CptSpec,
                 rng: Optional[np.random.Generator] = None) -> None:
        if m < 1:
            raise ValueError(f"batch size must be >= 1, got {m}")
        self.sampler = sampler
        self.m = int(m)
        self.spec = spec
        self.inner_draws = 0
        super().__init__(self._estimate, rng)

    def _estimate(self, theta: np.ndarray, rng: np.random.Generator) -> float:
        draws = np.asarray(self.sampler(theta, rng, self.m), dtype=np.float64)
        self.inner_draws += self.m
        return cpt_estimate(draws, self.spec)


def cpt_oracle(family: Sampler, theta, m: int, spec: CptSpec,
               rng: np.random.Generator) -> float:
    """One-shot CPT estimate of ``X(theta)`` from ``m`` fresh draws."""
    return CptOracle(family, m, spec, rng)(as_param_vector(theta))
