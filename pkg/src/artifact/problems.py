"""Benchmark objectives and CPT outcome families with known ground truth."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .cpt import DiscreteDistribution
from .estimators import NoisyOracle, as_param_vector

__all__ = [
    "TestProblem",
    "CptFamily",
    "make_noisy_quadratic",
    "make_noisy_rosenbrock",
    "make_cpt_bernoulli_family",
    "make_cpt_quadratic2d_family",
    "parse_problem",
    "build_problem",
]

DEFAULT_HALF_WIDTH = 5.0


def _default_box(dim: int, lo: float = -DEFAULT_HALF_WIDTH, hi: float = DEFAULT_HALF_WIDTH):
    return np.full(dim, lo), np.full(dim, hi)


@dataclass
class TestProblem:
    __test__ = False  # keep pytest from collecting this

    name: str
    dim: int
    oracle: NoisyOracle
    noise_sigma: float
    box: tuple[np.ndarray, np.ndarray]
    x0: np.ndarray
    true_optimum: Optional[np.ndarray] = None
    true_gradient_at: Optional[Callable[[np.ndarray], np.ndarray]] = None
    # noise-free objective
    value_at: Optional[Callable[[np.ndarray], float]] = field(default=None, repr=False)


@dataclass
class CptFamily:
    name: str
    dim: int
    sampler: Callable[[np.ndarray, np.random.Generator, int], np.ndarray]
    box: tuple[np.ndarray, np.ndarray]
    x0: np.ndarray
    exact_dist_at: Optional[Callable[[np.ndarray], DiscreteDistribution]] = None


def _noisy(value: Callable[[np.ndarray], float], sigma: float):
    if sigma == 0:
        return lambda theta, rng: value(theta)
    return lambda theta, rng: value(theta) + sigma * rng.standard_normal()


def make_noisy_quadratic(A, b, sigma: float = 0.0,
                         rng: Optional[np.random.Generator] = None,
                         x0=None) -> TestProblem:
    """``theta' A theta + b' theta`` plus Gaussian noise of scale ``sigma``."""
    A = np.array(A, dtype=np.float64, ndmin=2)
    b = np.array(b, dtype=np.float64, ndmin=1)
    N = b.size
    if A.shape != (N, N):
        raise ValueError(f"A must be {N}x{N}, got {A.shape}")
    if not np.array_equal(A, A.T):
        raise ValueError("A must be symmetric")
    if np.linalg.eigvalsh(A).min() <= 0:
        raise ValueError("A must be positive definite")
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")

    A = np.ascontiguousarray(A)

    def value(theta):
        return kernels.quadratic(theta, A, b)

    optimum = np.linalg.solve(A, -b / 2.0)
    box = _default_box(N)
    if np.any(optimum < box[0]) or np.any(optimum > box[1]):
        raise ValueError("optimum lies outside the default box")
    return TestProblem(
        name=f"quadratic:N={N},sigma={sigma!r}",
        dim=N,
        oracle=NoisyOracle(_noisy(value, sigma), rng),
        noise_sigma=float(sigma),
        box=box,
        x0=np.zeros(N) if x0 is None else as_param_vector(x0),
        true_optimum=optimum,
        true_gradient_at=lambda theta: 2.0 * A @ np.asarray(theta, dtype=np.float64) + b,
        value_at=value,
    )


def _rosenbrock_grad(theta):
    t = np.asarray(theta, dtype=np.float64)
    g = np.zeros_like(t)
    u = t[1:] - t[:-1] ** 2
    g[:-1] += -400.0 * t[:-1] * u - 2.0 * (1.0 - t[:-1])
    g[1:] += 200.0 * u
    return g


def make_noisy_rosenbrock(dim: int = 2, sigma: float = 0.0,
                          rng: Optional[np.random.Generator] = None) -> TestProblem:
    """Chained Rosenbrock function, minimum 0 at the all-ones point."""
    if dim < 2:
        raise ValueError(f"Rosenbrock needs dim >= 2, got {dim}")
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    x0 = np.where(np.arange(dim) % 2 == 0, -1.2, 1.0)
    return TestProblem(
        name=f"rosenbrock:N={dim},sigma={sigma!r}",
        dim=dim,
        oracle=NoisyOracle(_noisy(kernels.rosenbrock, sigma), rng),
        noise_sigma=float(sigma),
        box=_default_box(dim),
        x0=x0,
        true_optimum=np.ones(dim),
        true_gradient_at=_rosenbrock_grad,
        value_at=kernels.rosenbrock,
    )


def _check_in_box(theta, box, name):
    if np.any(theta < box[0]) or np.any(theta > box[1]):
        raise ValueError(f"{name}: theta={theta!r} outside box [{box[0]}, {box[1]}]")


def make_cpt_bernoulli_family() -> CptFamily:
    """X(theta) is theta_1 or -theta_1**2 with equal odds, theta_1 in [0, 2]."""
    box = (np.zeros(1), np.full(1, 2.0))

    def sampler(theta, rng, size):
        theta = np.asarray(theta, dtype=np.float64)
        _check_in_box(theta, box, "cpt-bernoulli")
        t = theta[0]
        return np.where(rng.random(size) < 0.5, t, -t * t)

    def exact(theta):
        t = float(np.asarray(theta, dtype=np.float64)[0])
        return DiscreteDistribution(np.array([t, -t * t]), np.array([0.5, 0.5]))

    return CptFamily("cpt-bernoulli", 1, sampler, box, np.array([1.0]), exact)


def make_cpt_quadratic2d_family() -> CptFamily:
    """Two equally likely outcomes ``(t1-0.5)**2`` and ``(t2-1)**2 - 0.5`` on ``[0, 2]^2``.

    Each outcome moves with one coordinate only, so every CPT spec with
    increasing utilities is minimized at ``(0.5, 1)``.
    """
    box = (np.zeros(2), np.full(2, 2.0))

    def outcomes(theta):
        return np.array([(theta[0] - 0.5) ** 2, (theta[1] - 1.0) ** 2 - 0.5])

    def sampler(theta, rng, size):
        theta = np.asarray(theta, dtype=np.float64)
        _check_in_box(theta, box, "cpt-quadratic2d")
        first, second = outcomes(theta)
        return np.where(rng.random(size) < 0.5, first, second)

    def exact(theta):
        return DiscreteDistribution(outcomes(np.asarray(theta, dtype=np.float64)), np.array([0.5, 0.5]))

    return CptFamily("cpt-quadratic2d", 2, sampler, box, np.array([1.5, 0.2]), exact)


def parse_problem(text: str) -> tuple[str, dict[str, str]]:
    """Split ``"name:k=v,k=v"`` into the name and a parameter dict."""
    name, _, rest = text.strip().partition(":")
    params: dict[str, str] = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"malformed problem parameter {item!r} in {text!r}")
        params[key.strip()] = value.strip()
    return name.strip(), params


_PROBLEM_PARAMS = {
    "quadratic": {"N", "sigma", "cond"},
    "rosenbrock": {"N", "sigma"},
    "cpt-bernoulli": set(),
    "cpt-quadratic2d": set(),
}


def build_problem(text: str, rng: Optional[np.random.Generator] = None):
    """Construct a problem from its config string.

    ``quadratic`` is ``sum_i d_i (theta_i - t_i)**2`` up to a constant, with
    ``d`` spaced evenly in ``[1, cond]`` and targets ``t`` evenly in
    ``[-0.5, 0.5]``. ``cpt-*`` names give a :class:`CptFamily`.
    """
    name, params = parse_problem(text)
    if name not in _PROBLEM_PARAMS:
        raise ValueError(f"unknown problem {name!r}")
    unknown = set(params) - _PROBLEM_PARAMS[name]
    if unknown:
        raise ValueError(f"unknown parameter(s) {sorted(unknown)} for problem {name!r}")
    try:
        N = int(params.get("N", "2"))
        sigma = float(params.get("sigma", "0"))
        cond = float(params.get("cond", "1"))
    except ValueError as exc:
        raise ValueError(f"bad parameter value in problem {text!r}: {exc}") from None
    if N < 1 or sigma < 0 or cond < 1:
        raise ValueError(f"problem parameters out of range in {text!r}")

    if name == "quadratic":
        d = np.linspace(1.0, cond, N)
        target = np.linspace(-0.5, 0.5, N) if N > 1 else np.array([0.5])
        return make_noisy_quadratic(np.diag(d), -2.0 * d * target, sigma, rng)
    if name == "rosenbrock":
        return make_noisy_rosenbrock(N, sigma, rng)
    if name == "cpt-bernoulli":
        return make_cpt_bernoulli_family()
    return make_cpt_quadratic2d_family()
