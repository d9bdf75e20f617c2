"""Zeroth-order gradient and Hessian estimators.

Everything here works from noisy function values only. The estimators are
pure functions of their inputs and of the generator they are handed; the
only state lives in :class:`NoisyOracle`, which counts its own calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "EstimationError",
    "NumericalError",
    "NoisyOracle",
    "GainSchedule",
    "GradientEstimate",
    "HessianEstimate",
    "as_param_vector",
    "gain_at",
    "sample_rademacher",
    "perturbation_sampler",
    "kw_gradient",
    "spsa_gradient",
    "spsa_hessian",
    "regularize_hessian",
]


class EstimationError(RuntimeError):
    """An oracle returned a non-finite value.

    ``point`` is the parameter vector that was probed.
    """

    def __init__(self, message: str, point: np.ndarray) -> None:
        super().__init__(f"{message} at theta={np.array2string(point, precision=17)}")
        self.point = point


class NumericalError(RuntimeError):
    """A linear-algebra step (eigendecomposition, solve) failed."""


def as_param_vector(theta) -> np.ndarray:
    """Copy ``theta`` into a finite 1-D float64 array."""
    arr = np.array(theta, dtype=np.float64, ndmin=1)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"theta must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("theta must have finite entries")
    return arr


class NoisyOracle:
    """Callable wrapper producing one noisy sample per call.

    ``func(theta, rng)`` returns a scalar. The oracle owns ``rng`` so that
    independent replications never share a noise stream.
    """

    def __init__(self, func: Callable[[np.ndarray, np.random.Generator], float],
                 rng: Optional[np.random.Generator] = None) -> None:
        self.func = func
        self.rng = rng if rng is not None else np.random.default_rng()
        self.call_count = 0

    def __call__(self, theta: np.ndarray) -> float:
        self.call_count += 1
        return float(self.func(theta, self.rng))


@dataclass(frozen=True)
class GainSchedule:
    """Power-law gains ``a_n = a/(n+1+A)**alpha`` and ``c_n = c/(n+1)**gamma``."""

    a: float
    c: float
    A: float = 0.0
    alpha: float = 0.602
    gamma: float = 0.101

    def __post_init__(self) -> None:
        for name in ("a", "c", "A", "alpha", "gamma"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValueError(f"{name} must be a finite real, got {value!r}")
        if self.a <= 0:
            raise ValueError(f"a must be positive, got {self.a!r}")
        if self.c <= 0:
            raise ValueError(f"c must be positive, got {self.c!r}")
        if self.A < 0:
            raise ValueError(f"A must be non-negative, got {self.A!r}")
        if not 0.5 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0.5, 1], got {self.alpha!r}")
        if not 0.0 < self.gamma <= 0.5:
            raise ValueError(f"gamma must lie in (0, 0.5], got {self.gamma!r}")


def gain_at(schedule: GainSchedule, n: int) -> tuple[float, float]:
    """Return ``(a_n, c_n)`` for iteration ``n >= 0``."""
    if n < 0:
        raise ValueError(f"iteration index must be >= 0, got {n}")
    a_n = schedule.a / (n + 1 + schedule.A) ** schedule.alpha
    c_n = schedule.c / (n + 1) ** schedule.gamma
    return a_n, c_n


def sample_rademacher(N: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``N`` independent +-1 signs with probability 1/2 each."""
    if N < 1:
        raise ValueError(f"perturbation dimension must be >= 1, got {N}")
    return rng.integers(0, 2, size=N).astype(np.float64) * 2.0 - 1.0


# Distributions whose inverse moments E|1/x| are infinite because they put
# mass near zero; SPSA divides by the perturbation, so they are unusable.
_INVALID_PERTURBATIONS = {"uniform", "normal", "gaussian"}


def perturbation_sampler(kind: str = "rademacher") -> Callable[[int, np.random.Generator], np.ndarray]:
    """Look up a perturbation sampler by name.

    Only ``"rademacher"`` ships. Distributions without finite inverse moments
    are rejected explicitly.
    """
    key = kind.strip().lower()
    if key in _INVALID_PERTURBATIONS:
        raise ValueError(
            f"{kind!r} perturbations violate the finite inverse moment condition"
        )
    if key in ("rademacher", "bernoulli"):
        return sample_rademacher
    raise ValueError(f"unsupported perturbation distribution {kind!r}")


@dataclass
class GradientEstimate:
    g_hat: np.ndarray
    evals_used: int
    # raw oracle values in evaluation order
    samples: np.ndarray = field(repr=False)


@dataclass
class HessianEstimate:
    h_hat: np.ndarray
    g_hat: np.ndarray
    evals_used: int
    samples: np.ndarray = field(repr=False)


def _probe(oracle: NoisyOracle, point: np.ndarray) -> float:
    y = oracle(point)
    if not math.isfinite(y):
        raise EstimationError(f"oracle returned {y!r}", point.copy())
    return y


def kw_gradient(oracle: NoisyOracle, theta, c_n: float,
                rng: Optional[np.random.Generator] = None) -> GradientEstimate:
    """Central finite differences along each coordinate, 2N oracle calls.

    ``rng`` is accepted for signature symmetry with the stochastic
    estimators; the coordinate directions are enumerated, not sampled.
    """
    if not c_n > 0:
        raise ValueError(f"c_n must be positive, got {c_n!r}")
    theta = as_param_vector(theta)
    N = theta.size
    g = np.empty(N)
    ys = np.empty(2 * N)
    for i in range(N):
        step = np.zeros(N)
        step[i] = c_n
        y_plus = _probe(oracle, theta + step)
        y_minus = _probe(oracle, theta - step)
        ys[2 * i], ys[2 * i + 1] = y_plus, y_minus
        g[i] = (y_plus - y_minus) / (2.0 * c_n)
    return GradientEstimate(g, 2 * N, ys)


def _check_delta(delta, N: int) -> np.ndarray:
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != (N,):
        raise ValueError(f"perturbation must have shape ({N},), got {delta.shape}")
    if not np.all(np.abs(delta) == 1.0):
        raise ValueError("perturbation components must be +1 or -1")
    return delta


def spsa_gradient(oracle: NoisyOracle, theta, c_n: float, delta) -> GradientEstimate:
    """Simultaneous-perturbation gradient from two oracle calls.

    Component ``i`` is ``(y+ - y-) / (2 c_n delta_i)``.
    """
    if not c_n > 0:
        raise ValueError(f"c_n must be positive, got {c_n!r}")
    theta = as_param_vector(theta)
    delta = _check_delta(delta, theta.size)
    y_plus = _probe(oracle, theta + c_n * delta)
    y_minus = _probe(oracle, theta - c_n * delta)
    g = (y_plus - y_minus) / (2.0 * c_n * delta)
    return GradientEstimate(g, 2, np.array([y_plus, y_minus]))


def spsa_hessian(oracle: NoisyOracle, theta, c_n: float, c_tilde: float,
                 delta, delta_tilde) -> HessianEstimate:
    """Four-measurement simultaneous-perturbation Hessian estimate.

    The first two measurements, at ``theta +- c_n*delta``, also give the
    gradient estimate. Two more are taken at the same points shifted by
    ``c_tilde*delta_tilde``; one-sided differences at both ends yield the
    gradient change across ``2 c_n delta``, which is spread over the columns
    and symmetrized.
    """
    if not c_n > 0 or not c_tilde > 0:
        raise ValueError(f"c_n and c_tilde must be positive, got {c_n!r}, {c_tilde!r}")
    theta = as_param_vector(theta)
    N = theta.size
    delta = _check_delta(delta, N)
    delta_tilde = _check_delta(delta_tilde, N)

    plus = theta + c_n * delta
    minus = theta - c_n * delta
    y_plus = _probe(oracle, plus)
    y_minus = _probe(oracle, minus)
    y_plus_t = _probe(oracle, plus + c_tilde * delta_tilde)
    y_minus_t = _probe(oracle, minus + c_tilde * delta_tilde)

    g_hat = (y_plus - y_minus) / (2.0 * c_n * delta)
    G_plus = (y_plus_t - y_plus) / (c_tilde * delta_tilde)
    G_minus = (y_minus_t - y_minus) / (c_tilde * delta_tilde)
    M = np.outer(G_plus - G_minus, 1.0 / (2.0 * c_n * delta))
    h_hat = 0.5 * (M + M.T)
    return HessianEstimate(h_hat, g_hat, 4, np.array([y_plus, y_minus, y_plus_t, y_minus_t]))


def regularize_hessian(h_bar, delta_reg: float = 1e-4) -> np.ndarray:
    """Clip the eigenvalues of a symmetric matrix from below at ``delta_reg``."""
    if not delta_reg > 0:
        raise ValueError(f"delta_reg must be positive, got {delta_reg!r}")
    h_bar = np.asarray(h_bar, dtype=np.float64)
    if not np.all(np.isfinite(h_bar)):
        raise NumericalError("cannot regularize a matrix with non-finite entries")
    try:
        eigvals, eigvecs = np.linalg.eigh(h_bar)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    clipped = (eigvecs * np.maximum(eigvals, delta_reg)) @ eigvecs.T
    return 0.5 * (clipped + clipped.T)
