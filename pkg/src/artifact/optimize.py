"""Stochastic-approximation descent loops.

Every driver runs for a fixed number of iterations and returns a
:class:`RunTrace`. Randomness comes from two streams derived from
``config.seed``: one for perturbation directions (owned by the driver) and
one for oracle noise (owned by the oracle; see :func:`noise_rng`).

The drivers assume a smooth objective in the usual stochastic-approximation
sense: twice differentiable with bounded third derivatives and a Lipschitz
gradient. None of this can be checked from oracle access, so it is not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .cpt import CptOracle, CptSpec, cpt_exact_discrete
from .estimators import (
    EstimationError,
    GainSchedule,
    NoisyOracle,
    NumericalError,
    as_param_vector,
    gain_at,
    kw_gradient,
    regularize_hessian,
    sample_rademacher,
    spsa_gradient,
    spsa_hessian,
)
from .problems import CptFamily

__all__ = [
    "HessianConfig",
    "OptimizerConfig",
    "TraceRecord",
    "RunTrace",
    "OptimizationError",
    "noise_rng",
    "project",
    "spsa_descend",
    "kw_descend",
    "newton_2spsa",
    "cpt_spsa_optimize",
    "exact_cpt_value",
]

Box = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class HessianConfig:
    c_tilde: float
    delta_reg: float = 1e-4
    blend_warmup: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.c_tilde) and self.c_tilde > 0):
            raise ValueError(f"c_tilde must be positive, got {self.c_tilde!r}")
        if not (math.isfinite(self.delta_reg) and self.delta_reg > 0):
            raise ValueError(f"delta_reg must be positive, got {self.delta_reg!r}")
        if self.blend_warmup < 0:
            raise ValueError(f"blend_warmup must be >= 0, got {self.blend_warmup!r}")


@dataclass
class OptimizerConfig:
    schedule: GainSchedule
    iterations: int
    seed: int = 0
    box: Optional[Box] = None
    hessian: Optional[HessianConfig] = None
    cpt_batch: Optional[int] = None

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.box is not None:
            lo, hi = (np.asarray(v, dtype=np.float64) for v in self.box)
            if lo.shape != hi.shape or np.any(lo > hi):
                raise ValueError("box needs matching bounds with lo <= hi")
            self.box = (lo, hi)
        if self.cpt_batch is not None and self.cpt_batch < 1:
            raise ValueError(f"cpt_batch must be >= 1, got {self.cpt_batch}")


@dataclass
class TraceRecord:
    n: int
    theta: np.ndarray
    # mean of the measurements taken around the previous iterate; NaN at n=0
    objective_estimate: float
    cumulative_evals: int
    step_norm: float
    hessian: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class RunTrace:
    records: list[TraceRecord] = field(default_factory=list)
    final_theta: Optional[np.ndarray] = None
    inner_draws: Optional[int] = None

    @property
    def total_evals(self) -> int:
        return self.records[-1].cumulative_evals if self.records else 0


class OptimizationError(RuntimeError):
    """A run aborted; ``trace`` holds the records made before the failure."""

    def __init__(self, message: str, trace: RunTrace) -> None:
        super().__init__(message)
        self.trace = trace


def noise_rng(seed: int) -> np.random.Generator:
    """Oracle-noise stream paired with the perturbation stream of ``seed``."""
    return np.random.default_rng([seed, 1])


def project(theta, box: Optional[Box]) -> np.ndarray:
    """Clamp each coordinate into ``[lo, hi]``."""
    theta = np.asarray(theta, dtype=np.float64)
    if box is None:
        return theta.copy()
    return np.clip(theta, box[0], box[1])


class _BoxedOracle:
    """Clamps probe points into the box before they reach the oracle."""

    def __init__(self, oracle: NoisyOracle, box: Optional[Box]) -> None:
        self.oracle = oracle
        self.box = box

    def __call__(self, theta: np.ndarray) -> float:
        return self.oracle(project(theta, self.box))


StepFn = Callable[[int, np.ndarray], tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]]


def _run(oracle: NoisyOracle, theta0, config: OptimizerConfig, step: StepFn) -> RunTrace:
    theta = as_param_vector(theta0)
    if config.box is not None:
        lo, hi = config.box
        if lo.shape != theta.shape:
            raise ValueError(f"box has dimension {lo.size}, theta has {theta.size}")
        if np.any(theta < lo) or np.any(theta > hi):
            raise ValueError("theta0 lies outside the box")
    start = oracle.call_count
    trace = RunTrace()
    trace.records.append(TraceRecord(0, theta.copy(), math.nan, 0, 0.0))
    for n in range(config.iterations):
        try:
            direction, samples, hessian = step(n, theta)
        except (EstimationError, NumericalError) as exc:
            trace.final_theta = theta.copy()
            raise OptimizationError(f"iteration {n}: {exc}", trace) from exc
        new_theta = project(theta - direction, config.box)
        trace.records.append(TraceRecord(
            n + 1,
            new_theta,
            float(np.mean(samples)),
            oracle.call_count - start,
            float(np.linalg.norm(new_theta - theta)),
            hessian,
        ))
        theta = new_theta
    trace.final_theta = theta.copy()
    return trace


def spsa_descend(oracle: NoisyOracle, theta0, config: OptimizerConfig) -> RunTrace:
    """First-order SPSA: two oracle calls per iteration, fresh signs each time."""
    rng = np.random.default_rng(config.seed)
    probe = _BoxedOracle(oracle, config.box)
    N = as_param_vector(theta0).size

    def step(n, theta):
        a_n, c_n = gain_at(config.schedule, n)
        est = spsa_gradient(probe, theta, c_n, sample_rademacher(N, rng))
        return a_n * est.g_hat, est.samples, None

    return _run(oracle, theta0, config, step)


def kw_descend(oracle: NoisyOracle, theta0, config: OptimizerConfig) -> RunTrace:
    """Kiefer-Wolfowitz descent: 2N oracle calls per iteration."""
    probe = _BoxedOracle(oracle, config.box)

    def step(n, theta):
        a_n, c_n = gain_at(config.schedule, n)
        est = kw_gradient(probe, theta, c_n)
        return a_n * est.g_hat, est.samples, None

    return _run(oracle, theta0, config, step)


def newton_2spsa(oracle: NoisyOracle, theta0, config: OptimizerConfig) -> RunTrace:
    """Newton-type SPSA with a running mean of four-call Hessian estimates.

    The averaged Hessian starts from the identity and has its eigenvalues
    clipped at ``delta_reg`` before each solve. During the first
    ``blend_warmup`` iterations plain SPSA steps are taken while the average
    accumulates. The offset radius decays like ``c_n``.
    """
    hcfg = config.hessian
    if hcfg is None:
        raise ValueError("newton_2spsa needs config.hessian")
    rng = np.random.default_rng(config.seed)
    probe = _BoxedOracle(oracle, config.box)
    N = as_param_vector(theta0).size
    h_bar = np.eye(N)

    def step(n, theta):
        nonlocal h_bar
        a_n, c_n = gain_at(config.schedule, n)
        c_tilde_n = hcfg.c_tilde * c_n / config.schedule.c
        delta = sample_rademacher(N, rng)
        delta_tilde = sample_rademacher(N, rng)
        est = spsa_hessian(probe, theta, c_n, c_tilde_n, delta, delta_tilde)
        h_bar = (n / (n + 1)) * h_bar + (1.0 / (n + 1)) * est.h_hat
        if n < hcfg.blend_warmup:
            return a_n * est.g_hat, est.samples, h_bar.copy()
        h_reg = regularize_hessian(h_bar, hcfg.delta_reg)
        try:
            direction = np.linalg.solve(h_reg, est.g_hat)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"Newton solve failed: {exc}") from exc
        return a_n * direction, est.samples, h_bar.copy()

    return _run(oracle, theta0, config, step)


def cpt_spsa_optimize(family: Union[CptFamily, Callable], theta0, spec: CptSpec,
                      config: OptimizerConfig) -> RunTrace:
    """Minimize the CPT value of ``X(theta)`` with SPSA on batch CPT estimates.

    Both probes of an iteration share the perturbation but draw their inner
    samples independently. ``trace.inner_draws`` counts those samples.
    """
    if config.cpt_batch is None:
        raise ValueError("cpt_spsa_optimize needs config.cpt_batch")
    sampler = family.sampler if isinstance(family, CptFamily) else family
    if config.box is None and isinstance(family, CptFamily):
        config = OptimizerConfig(config.schedule, config.iterations, config.seed,
                                 family.box, config.hessian, config.cpt_batch)
    oracle = CptOracle(sampler, config.cpt_batch, spec, noise_rng(config.seed))
    try:
        trace = spsa_descend(oracle, theta0, config)
    except OptimizationError as exc:
        exc.trace.inner_draws = oracle.inner_draws
        raise
    trace.inner_draws = oracle.inner_draws
    return trace


def exact_cpt_value(family: CptFamily, theta, spec: CptSpec) -> float:
    """Exact CPT objective of a finite-support family at ``theta``."""
    if family.exact_dist_at is None:
        raise ValueError(f"family {family.name!r} has no exact distribution")
    return cpt_exact_discrete(family.exact_dist_at(theta), spec).value
