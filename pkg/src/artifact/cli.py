"""Benchmark harness: config files in, per-replication CSV traces out.

Config files are flat ``key = value`` lines; ``#`` starts a comment and
sections are dotted key prefixes::

    problem = quadratic:N=10,sigma=0.1
    algorithm = spsa            # kw | spsa | 2spsa | cpt-spsa
    iterations = 2000
    replications = 5
    seed = 1
    gains.a = 2
    gains.c = 1
    # gains.A defaults to 0.1*iterations, gains.alpha to 0.602, gains.gamma to 0.101

``2spsa`` additionally needs ``hessian.c_tilde`` (optional ``hessian.delta_reg``,
``hessian.blend_warmup``); ``cpt-spsa`` needs ``cpt.batch`` (optional ``cpt.b``,
``cpt.u_plus``, ``cpt.u_minus``, ``cpt.w_plus``, ``cpt.w_minus``). Optional
``theta0`` is a comma-separated start point and ``box.lo``/``box.hi`` scalar
bounds override the problem's default box.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .cpt import CptSpec, parse_utility, parse_weighting
from .estimators import GainSchedule
from .optimize import (
    HessianConfig,
    OptimizationError,
    OptimizerConfig,
    RunTrace,
    cpt_spsa_optimize,
    exact_cpt_value,
    kw_descend,
    newton_2spsa,
    noise_rng,
    spsa_descend,
)
from .problems import CptFamily, TestProblem, build_problem

log = logging.getLogger(__name__)

ALGORITHMS = ("kw", "spsa", "2spsa", "cpt-spsa")
EXIT_OK, EXIT_RUN_FAILURE, EXIT_CONFIG_ERROR = 0, 1, 2


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


class UnknownKeyError(ConfigError):
    pass


class MissingKeyError(ConfigError):
    pass


class ConfigRangeError(ConfigError):
    pass


@dataclass(frozen=True)
class CptConfig:
    batch: int
    b: float = 0.0
    u_plus: str = "power:0.88"
    u_minus: str = "power:0.88"
    w_plus: str = "tk-0.61"
    w_minus: str = "tk-0.69"

    def spec(self) -> CptSpec:
        return CptSpec(
            self.b,
            parse_utility(self.u_plus),
            parse_utility(self.u_minus),
            parse_weighting(self.w_plus),
            parse_weighting(self.w_minus),
        )


@dataclass(frozen=True)
class BenchConfig:
    problem: str
    algorithm: str
    iterations: int
    gains: GainSchedule
    replications: int = 1
    seed: int = 0
    hessian: Optional[HessianConfig] = None
    cpt: Optional[CptConfig] = None
    theta0: Optional[tuple[float, ...]] = None
    box: Optional[tuple[float, float]] = None
    out_dir: str = "out"


_KEYS = {
    "problem", "algorithm", "iterations", "replications", "seed", "theta0", "out_dir",
    "box.lo", "box.hi",
    "gains.a", "gains.c", "gains.A", "gains.alpha", "gains.gamma",
    "hessian.c_tilde", "hessian.delta_reg", "hessian.blend_warmup",
    "cpt.b", "cpt.batch", "cpt.u_plus", "cpt.u_minus", "cpt.w_plus", "cpt.w_minus",
}


def _read_pairs(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        if key not in _KEYS:
            raise UnknownKeyError(key, "unknown key")
        if key in pairs:
            raise ConfigError(key, "duplicate key")
        pairs[key] = value.strip()
    return pairs


def _num(pairs, key, kind, default=None):
    if key not in pairs:
        if default is None:
            raise MissingKeyError(key, "required key missing")
        return default
    try:
        value = kind(pairs[key])
    except ValueError:
        raise ConfigError(key, f"cannot parse {pairs[key]!r} as {kind.__name__}") from None
    if kind is float and not math.isfinite(value):
        raise ConfigRangeError(key, f"must be finite, got {pairs[key]!r}")
    return value


def _require(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ConfigRangeError(key, message)


def parse_config(source: Union[str, os.PathLike]) -> BenchConfig:
    """Parse and validate a config from a file path or from config text."""
    if isinstance(source, os.PathLike) or ("=" not in source and Path(source).is_file()):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {source}: {exc}") from None
    else:
        text = source
    pairs = _read_pairs(text)

    for key in ("problem", "algorithm"):
        if key not in pairs:
            raise MissingKeyError(key, "required key missing")
    algorithm = pairs["algorithm"]
    if algorithm not in ALGORITHMS:
        raise ConfigRangeError("algorithm", f"must be one of {', '.join(ALGORITHMS)}, got {algorithm!r}")
    try:
        problem = build_problem(pairs["problem"])
    except ValueError as exc:
        raise ConfigError("problem", str(exc)) from None
    is_family = isinstance(problem, CptFamily)
    if is_family != (algorithm == "cpt-spsa"):
        raise ConfigRangeError("problem", f"problem {pairs['problem']!r} does not fit algorithm {algorithm!r}")

    iterations = _num(pairs, "iterations", int)
    _require(iterations >= 1, "iterations", "must be >= 1")
    replications = _num(pairs, "replications", int, 1)
    _require(replications >= 1, "replications", "must be >= 1")
    seed = _num(pairs, "seed", int, 0)
    _require(0 <= seed and seed + replications - 1 < 2**64, "seed",
             "seed + replications - 1 must fit in an unsigned 64-bit integer")

    a = _num(pairs, "gains.a", float)
    _require(a > 0, "gains.a", "must be positive")
    c = _num(pairs, "gains.c", float)
    _require(c > 0, "gains.c", "must be positive")
    A = _num(pairs, "gains.A", float, 0.1 * iterations)
    _require(A >= 0, "gains.A", "must be non-negative")
    alpha = _num(pairs, "gains.alpha", float, 0.602)
    _require(0.5 < alpha <= 1.0, "gains.alpha", "must lie in (0.5, 1]")
    gamma = _num(pairs, "gains.gamma", float, 0.101)
    _require(0.0 < gamma <= 0.5, "gains.gamma", "must lie in (0, 0.5]")
    gains = GainSchedule(a=a, c=c, A=A, alpha=alpha, gamma=gamma)

    hessian_keys = sorted(k for k in pairs if k.startswith("hessian."))
    hessian = None
    if algorithm == "2spsa":
        if "hessian.c_tilde" not in pairs:
            raise MissingKeyError("hessian", "algorithm 2spsa needs a hessian section with hessian.c_tilde")
        c_tilde = _num(pairs, "hessian.c_tilde", float)
        _require(c_tilde > 0, "hessian.c_tilde", "must be positive")
        delta_reg = _num(pairs, "hessian.delta_reg", float, 1e-4)
        _require(delta_reg > 0, "hessian.delta_reg", "must be positive")
        warmup = _num(pairs, "hessian.blend_warmup", int, 0)
        _require(warmup >= 0, "hessian.blend_warmup", "must be >= 0")
        hessian = HessianConfig(c_tilde, delta_reg, warmup)
    elif hessian_keys:
        raise UnknownKeyError(hessian_keys[0], f"hessian section is only used by 2spsa, not {algorithm}")

    cpt_keys = sorted(k for k in pairs if k.startswith("cpt."))
    cpt = None
    if algorithm == "cpt-spsa":
        if "cpt.batch" not in pairs:
            raise MissingKeyError("cpt", "algorithm cpt-spsa needs a cpt section with cpt.batch")
        batch = _num(pairs, "cpt.batch", int)
        _require(batch >= 1, "cpt.batch", "must be >= 1")
        cpt = CptConfig(batch, _num(pairs, "cpt.b", float, 0.0))
        for name in ("u_plus", "u_minus", "w_plus", "w_minus"):
            key = f"cpt.{name}"
            if key in pairs:
                cpt = replace(cpt, **{name: pairs[key]})
            parser = parse_utility if name.startswith("u") else parse_weighting
            try:
                parser(getattr(cpt, name))
            except ValueError as exc:
                raise ConfigRangeError(key, str(exc)) from None
    elif cpt_keys:
        raise UnknownKeyError(cpt_keys[0], f"cpt section is only used by cpt-spsa, not {algorithm}")

    box = None
    if "box.lo" in pairs or "box.hi" in pairs:
        lo = _num(pairs, "box.lo", float)
        hi = _num(pairs, "box.hi", float)
        _require(lo <= hi, "box.lo", "must not exceed box.hi")
        box = (lo, hi)

    theta0 = None
    if "theta0" in pairs:
        try:
            theta0 = tuple(float(v) for v in pairs["theta0"].split(","))
        except ValueError:
            raise ConfigError("theta0", f"cannot parse {pairs['theta0']!r}") from None
        _require(len(theta0) == problem.dim, "theta0", f"needs {problem.dim} entries")
        _require(all(math.isfinite(v) for v in theta0), "theta0", "entries must be finite")
    lo, hi = _resolve_box(problem, box)
    start = np.asarray(theta0) if theta0 is not None else problem.x0
    _require(bool(np.all(start >= lo) and np.all(start <= hi)), "theta0", "start point lies outside the box")

    return BenchConfig(
        problem=pairs["problem"],
        algorithm=algorithm,
        iterations=iterations,
        gains=gains,
        replications=replications,
        seed=seed,
        hessian=hessian,
        cpt=cpt,
        theta0=theta0,
        box=box,
        out_dir=pairs.get("out_dir", "out"),
    )


def render_config(cfg: BenchConfig) -> str:
    """Write ``cfg`` back out as config text; parsing it gives ``cfg`` again."""
    lines = [
        f"problem = {cfg.problem}",
        f"algorithm = {cfg.algorithm}",
        f"iterations = {cfg.iterations}",
        f"replications = {cfg.replications}",
        f"seed = {cfg.seed}",
        f"out_dir = {cfg.out_dir}",
    ]
    for name in ("a", "c", "A", "alpha", "gamma"):
        lines.append(f"gains.{name} = {getattr(cfg.gains, name)!r}")
    if cfg.hessian is not None:
        lines += [
            f"hessian.c_tilde = {cfg.hessian.c_tilde!r}",
            f"hessian.delta_reg = {cfg.hessian.delta_reg!r}",
            f"hessian.blend_warmup = {cfg.hessian.blend_warmup}",
        ]
    if cfg.cpt is not None:
        lines += [f"cpt.batch = {cfg.cpt.batch}", f"cpt.b = {cfg.cpt.b!r}"]
        lines += [f"cpt.{n} = {getattr(cfg.cpt, n)}" for n in ("u_plus", "u_minus", "w_plus", "w_minus")]
    if cfg.box is not None:
        lines += [f"box.lo = {cfg.box[0]!r}", f"box.hi = {cfg.box[1]!r}"]
    if cfg.theta0 is not None:
        lines.append("theta0 = " + ",".join(repr(v) for v in cfg.theta0))
    return "\n".join(lines) + "\n"


def _resolve_box(problem, box):
    if box is None:
        return problem.box
    return np.full(problem.dim, box[0]), np.full(problem.dim, box[1])


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % x


def write_trace_csv(trace: RunTrace, path: Union[str, os.PathLike],
                    optimum: Optional[np.ndarray] = None) -> None:
    """One row per trace record; ``dist_to_opt`` is blank without ``optimum``."""
    N = trace.records[0].theta.size
    header = ["iter", "evals", "obj_est", "step_norm"] + [f"theta_{i}" for i in range(N)] + ["dist_to_opt"]
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for rec in trace.records:
                dist = None if optimum is None else float(np.linalg.norm(rec.theta - optimum))
                writer.writerow(
                    [rec.n, rec.cumulative_evals, _fmt(rec.objective_estimate), _fmt(rec.step_norm)]
                    + [_fmt(float(v)) for v in rec.theta]
                    + [_fmt(dist)]
                )
    except OSError as exc:
        raise OSError(f"cannot write trace {path}: {exc}") from exc


@dataclass
class SummaryRow:
    replication: int
    seed: int
    status: str
    final_dist_to_opt: Optional[float]
    final_obj_est: float
    final_true_obj: Optional[float]
    total_evals: int
    inner_draws: Optional[int]
    wall_time_s: float = field(default=0.0, compare=False)


SUMMARY_COLUMNS = ["replication", "seed", "status", "final_dist_to_opt", "final_obj_est",
                   "final_true_obj", "total_evals", "inner_draws"]


def _optimizer_config(cfg: BenchConfig, problem, seed: int) -> OptimizerConfig:
    return OptimizerConfig(
        schedule=cfg.gains,
        iterations=cfg.iterations,
        seed=seed,
        box=_resolve_box(problem, cfg.box),
        hessian=cfg.hessian,
        cpt_batch=cfg.cpt.batch if cfg.cpt else None,
    )


def run_replication(cfg: BenchConfig, r: int):
    """Run replication ``r``.

    Returns ``(trace, row, optimum, error)``; the trace is partial and
    ``error`` a message when the run aborted.
    """
    seed = cfg.seed + r
    problem = build_problem(cfg.problem, rng=noise_rng(seed))
    opt_cfg = _optimizer_config(cfg, problem, seed)
    theta0 = np.asarray(cfg.theta0) if cfg.theta0 is not None else problem.x0
    error = None
    started = time.perf_counter()
    try:
        if cfg.algorithm == "cpt-spsa":
            trace = cpt_spsa_optimize(problem, theta0, cfg.cpt.spec(), opt_cfg)
        else:
            driver = {"kw": kw_descend, "spsa": spsa_descend, "2spsa": newton_2spsa}[cfg.algorithm]
            trace = driver(problem.oracle, theta0, opt_cfg)
    except OptimizationError as exc:
        trace, error = exc.trace, str(exc)
    elapsed = time.perf_counter() - started

    final = trace.records[-1].theta
    optimum = problem.true_optimum if isinstance(problem, TestProblem) else None
    if isinstance(problem, TestProblem):
        true_obj = problem.value_at(final) if problem.value_at else None
    else:
        true_obj = exact_cpt_value(problem, final, cfg.cpt.spec()) if problem.exact_dist_at else None
    row = SummaryRow(
        replication=r,
        seed=seed,
        status="ok" if error is None else "failed",
        final_dist_to_opt=None if optimum is None else float(np.linalg.norm(final - optimum)),
        final_obj_est=trace.records[-1].objective_estimate,
        final_true_obj=true_obj,
        total_evals=trace.total_evals,
        inner_draws=trace.inner_draws,
        wall_time_s=elapsed,
    )
    return trace, row, optimum, error


def run_benchmark(cfg: BenchConfig, out_dir: Optional[Union[str, os.PathLike]] = None,
                  timing: bool = False) -> int:
    """Run every replication, write ``trace_<r>.csv`` and ``summary.csv``.

    Wall times go into the summary only when ``timing`` is set, so that the
    default output is byte-for-byte reproducible.
    """
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    failures = 0
    for r in range(cfg.replications):
        trace, row, optimum, error = run_replication(cfg, r)
        write_trace_csv(trace, out / f"trace_{r}.csv", optimum)
        if error is not None:
            failures += 1
            print(f"replication {r} (seed {row.seed}) failed: {error}", file=sys.stderr)
        log.info("replication %d: %s evals=%d", r, row.status, row.total_evals)
        rows.append(row)

    columns = SUMMARY_COLUMNS + (["wall_time_s"] if timing else [])
    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(getattr(row, col)) for col in columns])
    return EXIT_RUN_FAILURE if failures else EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="spsa-bench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a benchmark config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="output directory (overrides out_dir)")
    run.add_argument("--seed", type=int, help="base seed override")
    run.add_argument("--timing", action="store_true", help="add wall_time_s to summary.csv")
    validate = sub.add_parser("validate", help="parse and validate a config only")
    validate.add_argument("--config", required=True)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")

    try:
        cfg = parse_config(Path(args.config))
        if args.command == "run" and args.seed is not None:
            if not 0 <= args.seed or args.seed + cfg.replications - 1 >= 2**64:
                raise ConfigRangeError("seed", "override must fit in an unsigned 64-bit integer")
            cfg = replace(cfg, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    if args.command == "validate":
        print(render_config(cfg), end="")
        return EXIT_OK
    try:
        return run_benchmark(cfg, args.out, timing=args.timing)
    except OSError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILURE


if __name__ == "__main__":
    sys.exit(main())
