"""Scenario-driven command-line harness.

Verbs:
    run      build the instance from a JSON config, run the requested
             schedulers, write results.csv / trace.csv / timings.csv and
             a manifest echoing every resolved value.
    bench    K-sweep scaling benchmark over sparse and densified priors,
             written to timings.csv.
    certify  run greedy plus exhaustive enumeration and report the bound.

Outputs are deterministic for a fixed config and seed: results.csv and
trace.csv are byte-identical across runs, with all wall-clock numbers
kept in the separate timings.csv. Floats are printed with 12 significant
digits. One root seed drives every stochastic component through
deterministically derived child seeds.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .entropy_oracle import conditional_entropy, make_context, map_linearization
from .errors import ConfigError, SensorSchedError
from .exhaustive import exhaustive_optimum
from .process_models import (
    GaussianPrior,
    build_dense_prior,
    build_gauss_markov_prior,
    build_tracking_prior,
    densify,
)
from .scheduler import GreedyTrace, StepTrace, greedy_schedule, greedy_step_detailed, random_schedule
from .sensing import Schedule, SensorSuite, builtin_sensor

__all__ = ["Scenario", "load_scenario", "run_scenario", "run_scaling_benchmark", "main"]

_SCHEDULERS = ("greedy", "lazy", "random", "exhaustive")
_LINEARIZATIONS = ("prior_mean", "receding")
_PRIOR_KINDS = ("tracking", "gauss_markov", "dense_custom")
_SENSOR_KINDS = ("linear_coordinate", "range", "bearing", "quadratic")


def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


@dataclass(frozen=True)
class Scenario:
    """Fully resolved scenario configuration."""

    name: str
    seed: int
    prior: dict
    dense: bool
    sensors: tuple[dict, ...]
    budgets: tuple[int, ...]
    linearization: str
    schedulers: tuple[str, ...]
    exhaustive_cap: int
    bench: dict | None

    def resolved(self) -> dict:
        """Manifest payload; itself a valid config that re-runs identically."""
        out = {
            "name": self.name,
            "seed": self.seed,
            "prior": self.prior,
            "dense": self.dense,
            "sensors": list(self.sensors),
            "budgets": list(self.budgets),
            "linearization": self.linearization,
            "schedulers": list(self.schedulers),
            "exhaustive_cap": self.exhaustive_cap,
        }
        if self.bench is not None:
            out["bench"] = self.bench
        return out


def _require(cfg: dict, field: str, types, path: str):
    if field not in cfg:
        raise ConfigError(f"{path}{field}: missing required field")
    value = cfg[field]
    if not isinstance(value, types):
        raise ConfigError(
            f"{path}{field}: expected {getattr(types, '__name__', types)}, "
            f"got {type(value).__name__}"
        )
    return value


def _matrix(value, n_rows: int, n_cols: int, path: str) -> list[list[float]]:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (n_rows, n_cols):
        raise ConfigError(f"{path}: expected a {n_rows}x{n_cols} matrix, got shape {arr.shape}")
    return arr.tolist()


def _validate_prior(cfg: Any, path: str = "prior.") -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError("prior: expected an object")
    kind = _require(cfg, "kind", str, path)
    if kind not in _PRIOR_KINDS:
        raise ConfigError(f"{path}kind: unknown prior kind {kind!r}")
    n = _require(cfg, "n", int, path)
    K = _require(cfg, "K", int, path)
    if n < 1:
        raise ConfigError(f"{path}n: must be >= 1, got {n}")
    if K < 1:
        raise ConfigError(f"{path}K: must be >= 1, got {K}")
    out = {"kind": kind, "n": n, "K": K}
    if kind == "tracking":
        var = _require(cfg, "marginal_var", (int, float), path)
        corr = _require(cfg, "neighbor_corr", (int, float), path)
        if var <= 0:
            raise ConfigError(f"{path}marginal_var: must be positive, got {var}")
        if not -1.0 < corr < 1.0:
            raise ConfigError(f"{path}neighbor_corr: must be in (-1, 1), got {corr}")
        out["marginal_var"] = float(var)
        out["neighbor_corr"] = float(corr)
        if "mean" in cfg:
            out["mean"] = list(np.asarray(cfg["mean"], dtype=float).reshape(-1))
            if len(out["mean"]) != n * K:
                raise ConfigError(f"{path}mean: expected length {n * K}")
    elif kind == "gauss_markov":
        out["A"] = _matrix(_require(cfg, "A", (list, int, float), path), n, n, path + "A")
        out["Q"] = _matrix(_require(cfg, "Q", (list, int, float), path), n, n, path + "Q")
        out["Sigma0"] = _matrix(
            _require(cfg, "Sigma0", (list, int, float), path), n, n, path + "Sigma0"
        )
        mu0 = cfg.get("mu0", [0.0] * n)
        mu0 = np.asarray(mu0, dtype=float).reshape(-1)
        if mu0.shape != (n,):
            raise ConfigError(f"{path}mu0: expected length {n}")
        out["mu0"] = mu0.tolist()
    else:  # dense_custom
        rep = cfg.get("representation", "covariance")
        if rep not in ("covariance", "precision"):
            raise ConfigError(
                f"{path}representation: must be 'covariance' or 'precision', got {rep!r}"
            )
        out["representation"] = rep
        out["matrix"] = _matrix(
            _require(cfg, "matrix", list, path), n * K, n * K, path + "matrix"
        )
        mean = cfg.get("mean", [0.0] * (n * K))
        mean = np.asarray(mean, dtype=float).reshape(-1)
        if mean.shape != (n * K,):
            raise ConfigError(f"{path}mean: expected length {n * K}")
        out["mean"] = mean.tolist()
    return out


def _validate_sensor(cfg: Any, n: int, idx: int) -> dict:
    path = f"sensors[{idx}]."
    if not isinstance(cfg, dict):
        raise ConfigError(f"sensors[{idx}]: expected an object")
    kind = _require(cfg, "kind", str, path)
    if kind not in _SENSOR_KINDS:
        raise ConfigError(f"{path}kind: unknown sensor kind {kind!r}")
    out = {"kind": kind}
    if "noise_cov" in cfg:
        arr = np.atleast_2d(np.asarray(cfg["noise_cov"], dtype=float))
        out["noise_cov"] = arr.tolist()
    elif "noise_var" in cfg:
        var = cfg["noise_var"]
        if not isinstance(var, (int, float)) or var <= 0:
            raise ConfigError(f"{path}noise_var: must be a positive number, got {var!r}")
        out["noise_var"] = float(var)
    else:
        raise ConfigError(f"{path}noise_var: sensor needs noise_var or noise_cov")
    if kind == "linear_coordinate":
        axis = _require(cfg, "axis", int, path)
        if not 0 <= axis < n:
            raise ConfigError(f"{path}axis: must be in [0, {n}), got {axis}")
        out["axis"] = axis
    elif kind in ("range", "bearing"):
        anchor = np.asarray(_require(cfg, "anchor", list, path), dtype=float).reshape(-1)
        if kind == "range" and anchor.shape != (n,):
            raise ConfigError(f"{path}anchor: expected length {n}")
        if kind == "bearing" and anchor.size < 2:
            raise ConfigError(f"{path}anchor: bearing anchor needs >= 2 coordinates")
        out["anchor"] = anchor.tolist()
    else:  # quadratic
        out["weight"] = _matrix(
            _require(cfg, "weight", list, path), n, n, path + "weight"
        )
    return out


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a JSON scenario config.

    Raises:
        ConfigError: with a field-level message on the first violation.
    """
    try:
        with open(path) as f:
            cfg = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root: expected an object")

    name = cfg.get("name", Path(path).stem)
    if not isinstance(name, str):
        raise ConfigError("name: expected a string")
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError(f"seed: expected an integer, got {type(seed).__name__}")

    prior = _validate_prior(_require(cfg, "prior", dict, ""))
    n, K = prior["n"], prior["K"]

    dense = cfg.get("dense", False)
    if not isinstance(dense, bool):
        raise ConfigError("dense: expected a boolean")

    raw_sensors = _require(cfg, "sensors", list, "")
    if not raw_sensors:
        raise ConfigError("sensors: need at least one sensor")
    sensors = tuple(_validate_sensor(s, n, i) for i, s in enumerate(raw_sensors))

    raw_budgets = _require(cfg, "budgets", (int, list), "")
    if isinstance(raw_budgets, int):
        budgets = tuple(raw_budgets for _ in range(K))
    else:
        if len(raw_budgets) != K:
            raise ConfigError(f"budgets: expected {K} entries, got {len(raw_budgets)}")
        budgets = tuple(raw_budgets)
    for k, b in enumerate(budgets):
        if not isinstance(b, int) or b < 0:
            raise ConfigError(f"budgets[{k}]: must be a non-negative integer, got {b!r}")
        if b > len(sensors):
            raise ConfigError(f"budgets[{k}]: {b} exceeds the {len(sensors)} sensors")

    linearization = cfg.get("linearization", "prior_mean")
    if linearization not in _LINEARIZATIONS:
        raise ConfigError(
            f"linearization: must be one of {_LINEARIZATIONS}, got {linearization!r}"
        )

    schedulers = tuple(cfg.get("schedulers", ["greedy"]))
    if not schedulers:
        raise ConfigError("schedulers: need at least one scheduler")
    for s in schedulers:
        if s not in _SCHEDULERS:
            raise ConfigError(f"schedulers: unknown scheduler {s!r}")

    cap = cfg.get("exhaustive_cap", 10**6)
    if not isinstance(cap, int) or cap < 1:
        raise ConfigError(f"exhaustive_cap: must be a positive integer, got {cap!r}")

    bench = cfg.get("bench")
    if bench is not None:
        if not isinstance(bench, dict):
            raise ConfigError("bench: expected an object")
        k_values = _require(bench, "K_values", list, "bench.")
        for i, k in enumerate(k_values):
            if not isinstance(k, int) or k < 1:
                raise ConfigError(f"bench.K_values[{i}]: must be a positive integer")
        regimes = bench.get("regimes", ["sparse", "dense"])
        for r in regimes:
            if r not in ("sparse", "dense"):
                raise ConfigError(f"bench.regimes: unknown regime {r!r}")
        reps = bench.get("repetitions", 3)
        if not isinstance(reps, int) or reps < 1:
            raise ConfigError("bench.repetitions: must be a positive integer")
        budget = bench.get("budget", budgets[0] if budgets else 1)
        if not isinstance(budget, int) or budget < 0:
            raise ConfigError("bench.budget: must be a non-negative integer")
        bench = {
            "K_values": list(k_values),
            "regimes": list(regimes),
            "repetitions": reps,
            "budget": budget,
        }

    return Scenario(
        name=name,
        seed=seed,
        prior=prior,
        dense=dense,
        sensors=sensors,
        budgets=budgets,
        linearization=linearization,
        schedulers=schedulers,
        exhaustive_cap=cap,
        bench=bench,
    )


def _build_prior(spec: dict, K_override: int | None = None) -> GaussianPrior:
    kind = spec["kind"]
    K = K_override if K_override is not None else spec["K"]
    if kind == "tracking":
        mean = spec.get("mean")
        if mean is not None and K_override is not None:
            mean = None  # sweep horizons cannot reuse a fixed-length mean
        return build_tracking_prior(
            spec["n"], K, spec["marginal_var"], spec["neighbor_corr"], mean=mean
        )
    if kind == "gauss_markov":
        return build_gauss_markov_prior(
            np.asarray(spec["A"]), np.asarray(spec["Q"]), np.asarray(spec["Sigma0"]),
            mu0=np.asarray(spec["mu0"]), K=K,
        )
    return build_dense_prior(
        spec["n"], K, np.asarray(spec["matrix"]), spec["representation"],
        mean=np.asarray(spec["mean"]),
    )


def _build_suite(sensor_specs: Sequence[dict], n: int) -> SensorSuite:
    sensors = []
    for idx, spec in enumerate(sensor_specs):
        kwargs = {k: v for k, v in spec.items() if k != "kind"}
        if "anchor" in kwargs:
            kwargs["anchor"] = np.asarray(kwargs["anchor"], dtype=float)
        if "weight" in kwargs:
            kwargs["weight"] = np.asarray(kwargs["weight"], dtype=float)
        if "noise_cov" in kwargs:
            kwargs["noise_cov"] = np.asarray(kwargs["noise_cov"], dtype=float)
        try:
            sensors.append(builtin_sensor(spec["kind"], **kwargs))
        except SensorSchedError as exc:
            raise ConfigError(f"sensors[{idx}]: {exc}") from exc
    return SensorSuite(state_dim=n, sensors=tuple(sensors))


def _simulate_measurements(suite, schedule_sets, k, x_true_k, rng):
    parts = []
    for i in schedule_sets:
        sensor = suite.sensors[i]
        chol = np.linalg.cholesky(sensor.noise_cov_at(k))
        parts.append(
            sensor.measure_at(x_true_k) + chol @ rng.standard_normal(sensor.output_dim)
        )
    return np.concatenate(parts) if parts else None


def _receding_greedy(prior, suite, budgets, lazy, seed):
    """Greedy planning that re-linearizes at the running MAP estimate.

    Ground truth is simulated from the prior; after each step the chosen
    sensors are sampled and the MAP estimate refreshed, so later steps
    linearize where the data points.
    """
    rng = np.random.default_rng(seed)
    cov = prior.covariance_dense()
    x_true = np.asarray(prior.mean) + np.linalg.cholesky(cov) @ rng.standard_normal(prior.dim)

    K = prior.K
    sets: list[tuple[int, ...]] = [() for _ in range(K)]
    measurements: list[np.ndarray | None] = [None] * K
    linearization = np.asarray(prior.mean)
    steps: list[StepTrace] = []
    ctx = None
    for k in range(K):
        started = time.perf_counter()
        ctx = make_context(prior, suite, linearization=linearization)
        prefix = Schedule(
            sets=tuple(sets[:k]) + tuple(() for _ in range(K - k)),
            budgets=budgets,
        )
        detail = greedy_step_detailed(ctx, prefix, k, budgets[k], lazy=lazy)
        sets[k] = detail.chosen
        measurements[k] = _simulate_measurements(
            suite, detail.chosen, k, x_true.reshape(K, prior.n)[k], rng
        )
        solution = map_linearization(
            prior,
            suite,
            Schedule(sets=tuple(sets), budgets=budgets),
            measurements,
        )
        linearization = solution.estimate
        steps.append(
            StepTrace(
                step=k,
                chosen=detail.chosen,
                gains=detail.gains,
                oracle_calls=detail.oracle_calls,
                wall_s=time.perf_counter() - started,
            )
        )
    schedule = Schedule(sets=tuple(sets), budgets=budgets)
    return schedule, GreedyTrace(steps=tuple(steps)), ctx


def run_scenario(
    config_path: str | Path,
    output_dir: str | Path | None = None,
    *,
    threads: int = 1,
    force_schedulers: tuple[str, ...] | None = None,
) -> dict[str, Path]:
    """Execute a scenario config and write the report files.

    Returns a mapping of output names to their paths: results, trace,
    timings, manifest.
    """
    scenario = load_scenario(config_path)
    if force_schedulers is not None:
        schedulers = tuple(
            dict.fromkeys(tuple(force_schedulers) + scenario.schedulers)
        )
        scenario = dataclasses.replace(scenario, schedulers=schedulers)
    out_dir = Path(output_dir) if output_dir is not None else Path(config_path).parent
    out_dir.mkdir(parents=True, exist_ok=True)

    try:
        prior = _build_prior(scenario.prior)
    except SensorSchedError as exc:
        raise ConfigError(f"prior: {exc}") from exc
    if scenario.dense:
        prior = densify(prior)
    suite = _build_suite(scenario.sensors, scenario.prior["n"])
    budgets = scenario.budgets

    seed_seq = np.random.SeedSequence(scenario.seed)
    random_seed, receding_seed = (int(c.generate_state(1)[0]) for c in seed_seq.spawn(2))

    plan_ctx = make_context(prior, suite)

    rows = []
    trace_rows: list[tuple[int, int, int, float]] = []
    trace_written_for: str | None = None
    timing_rows = []
    exhaustive_result = None

    for scheduler_name in scenario.schedulers:
        started = time.perf_counter()
        if scheduler_name in ("greedy", "lazy"):
            lazy = scheduler_name == "lazy"
            if scenario.linearization == "receding":
                schedule, trace, final_ctx = _receding_greedy(
                    prior, suite, budgets, lazy, receding_seed
                )
                report_ctx = final_ctx
            else:
                schedule, trace = greedy_schedule(
                    plan_ctx, budgets, lazy=lazy, threads=threads
                )
                report_ctx = plan_ctx
            entropy = conditional_entropy(report_ctx, schedule)
            mi = report_ctx.prior_entropy - entropy
            calls = trace.total_oracle_calls
            if trace_written_for is None:
                trace_rows = list(trace.picks())
                trace_written_for = scheduler_name
        elif scheduler_name == "random":
            schedule = random_schedule(budgets, suite.m, random_seed)
            entropy = conditional_entropy(plan_ctx, schedule)
            mi = plan_ctx.prior_entropy - entropy
            calls = 1
        else:  # exhaustive
            exhaustive_result = exhaustive_optimum(
                plan_ctx, budgets, cap=scenario.exhaustive_cap
            )
            entropy = exhaustive_result.opt_cost
            mi = plan_ctx.prior_entropy - entropy
            calls = exhaustive_result.num_enumerated
        wall_ms = (time.perf_counter() - started) * 1e3
        rows.append({"scheduler": scheduler_name, "entropy_nats": entropy,
                     "mutual_info_nats": mi, "oracle_calls": calls})
        timing_rows.append((scheduler_name, wall_ms))

    with_bound = exhaustive_result is not None
    if with_bound:
        gap = exhaustive_result.max_cost - exhaustive_result.opt_cost
        for row in rows:
            if row["scheduler"] == "exhaustive":
                row["bound_ratio"] = 0.0
            elif gap <= 1e-12:
                row["bound_ratio"] = 0.0
            else:
                row["bound_ratio"] = (
                    row["entropy_nats"] - exhaustive_result.opt_cost
                ) / gap

    results_path = out_dir / "results.csv"
    header = ["scheduler", "entropy_nats", "mutual_info_nats", "oracle_calls"]
    if with_bound:
        header.append("bound_ratio")
    with open(results_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            out = [row["scheduler"], _fmt(row["entropy_nats"]),
                   _fmt(row["mutual_info_nats"]), str(row["oracle_calls"])]
            if with_bound:
                out.append(_fmt(row["bound_ratio"]))
            writer.writerow(out)

    trace_path = out_dir / "trace.csv"
    with open(trace_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["k", "pick_order", "sensor", "gain_nats"])
        for k, order, sensor, gain in trace_rows:
            writer.writerow([str(k), str(order), str(sensor), _fmt(gain)])

    timings_path = out_dir / "timings.csv"
    with open(timings_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["scheduler", "wall_ms"])
        for name, wall_ms in timing_rows:
            writer.writerow([name, _fmt(wall_ms)])

    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w") as f:
        json.dump(scenario.resolved(), f, indent=2, sort_keys=True)
        f.write("\n")

    return {
        "results": results_path,
        "trace": trace_path,
        "timings": timings_path,
        "manifest": manifest_path,
    }


def run_scaling_benchmark(
    config_path: str | Path,
    output_dir: str | Path | None = None,
    *,
    repetitions: int | None = None,
    threads: int = 1,
) -> dict[str, Path]:
    """Run the K-sweep benchmark of a config's ``bench`` section.

    For each horizon K and regime (sparse prior, densified prior), runs
    the greedy scheduler ``repetitions`` times and records wall time and
    oracle calls per repetition plus a median summary row.
    """
    scenario = load_scenario(config_path)
    if scenario.bench is None:
        raise ConfigError("bench: config has no bench section")
    if scenario.prior["kind"] == "dense_custom":
        raise ConfigError("bench: K sweeps need a tracking or gauss_markov prior")
    reps = repetitions if repetitions is not None else scenario.bench["repetitions"]
    out_dir = Path(output_dir) if output_dir is not None else Path(config_path).parent
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for regime in scenario.bench["regimes"]:
        for K in scenario.bench["K_values"]:
            prior = _build_prior(scenario.prior, K_override=K)
            if regime == "dense":
                prior = densify(prior)
            suite = _build_suite(scenario.sensors, scenario.prior["n"])
            budgets = tuple(scenario.bench["budget"] for _ in range(K))
            ctx = make_context(prior, suite)
            per_call = []
            for rep in range(reps):
                started = time.perf_counter()
                _, trace = greedy_schedule(ctx, budgets, threads=threads)
                wall_ms = (time.perf_counter() - started) * 1e3
                calls = trace.total_oracle_calls
                ms_per_call = wall_ms / calls if calls else float("nan")
                per_call.append((wall_ms, calls, ms_per_call))
                rows.append((regime, K, str(rep), wall_ms, calls, ms_per_call))
            rows.append(
                (
                    regime,
                    K,
                    "median",
                    statistics.median(w for w, _, _ in per_call),
                    per_call[0][1],
                    statistics.median(c for _, _, c in per_call),
                )
            )

    timings_path = out_dir / "timings.csv"
    with open(timings_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["regime", "K", "rep", "wall_ms", "oracle_calls", "ms_per_call"])
        for regime, K, rep, wall_ms, calls, ms_per_call in rows:
            writer.writerow([regime, str(K), rep, _fmt(wall_ms), str(calls), _fmt(ms_per_call)])

    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w") as f:
        json.dump(scenario.resolved(), f, indent=2, sort_keys=True)
        f.write("\n")

    return {"timings": timings_path, "manifest": manifest_path}


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sensorsched",
        description="Budgeted sensor scheduling for Gaussian batch-state estimation.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="run a scenario config")
    bench_p = sub.add_parser("bench", help="run a K-sweep scaling benchmark")
    certify_p = sub.add_parser("certify", help="certify the greedy bound exhaustively")
    for p in (run_p, bench_p, certify_p):
        p.add_argument("--config", required=True, help="path to the JSON scenario config")
        p.add_argument("--output-dir", default=None, help="directory for report files")
        p.add_argument("--threads", type=int, default=1,
                       help="parallel candidate evaluations per greedy pick")
    bench_p.add_argument("--repetitions", type=int, default=None,
                         help="override the config's repetition count")

    args = parser.parse_args(argv)
    try:
        if args.verb == "run":
            paths = run_scenario(args.config, args.output_dir, threads=args.threads)
        elif args.verb == "bench":
            paths = run_scaling_benchmark(
                args.config, args.output_dir,
                repetitions=args.repetitions, threads=args.threads,
            )
        else:
            paths = run_scenario(
                args.config, args.output_dir, threads=args.threads,
                force_schedulers=("greedy", "exhaustive"),
            )
    except SensorSchedError as exc:
        parser.exit(2, f"error: {exc}\n")
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
