"""Command-line front end.

Subcommands:
  simulate  one run of one policy on an instance file; writes summary.csv
            (and trace.csv with --trace)
  sweep     parameter sweep from an experiment spec; writes sweep.csv
  certify   gap certificates over a list of scale factors; writes
            certificates.csv

Exit codes: 0 success, 1 invalid config or spec (violations printed),
2 I/O failure, 3 certification failure. CSV schemas are fixed and floats are
written with repr, so identical inputs reproduce byte-identical files.
``AOISCHED_WORKERS`` sets the sweep worker-pool size (default 1).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import bounds as bounds_mod
from .dual import SubgradientSettings
from .model import ConfigIOError, SystemConfig, load_config, task_ids, validate_config
from .policies import Maf, Mgf, Random
from .sim import run

__all__ = ["main", "ExperimentSpec", "load_experiment_spec"]

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2
EXIT_CERT_FAIL = 3

SUMMARY_HEADER = ["policy", "seed", "discounted_cost", "raw_cost", "tail_bound", "mean_divergence"]
TRACE_HEADER = ["slot", "task_m", "task_j", "aoi", "action", "slot_cost"]
SWEEP_HEADER = ["sweep_var", "sweep_value", "policy", "seed", "discounted_cost", "gap", "theorem1_rhs"]
CERT_HEADER = ["r", "mgf_cost", "dual_bound", "gap", "theorem1_rhs", "horizon_ok"]


@dataclass(frozen=True)
class ExperimentSpec:
    """Sweep description: base instance, the one swept variable, policies,
    seeds for the random baseline, and where results go."""

    base_config_path: str
    sweep_var: str  # tasks_per_source | channels | sources
    sweep_values: tuple[int, ...]
    policies: tuple[str, ...]
    random_seeds: tuple[int, ...]
    output_dir: str
    reoptimize_every: int = 1
    dual_iterations: int = 100


def load_experiment_spec(path: str) -> ExperimentSpec:
    if not os.path.exists(path):
        raise ConfigIOError(f"spec file not found: {path}")
    try:
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigIOError(f"spec file {path} is not valid JSON: {exc}") from exc
    except OSError as exc:
        raise ConfigIOError(f"cannot read spec file {path}: {exc}") from exc
    base_dir = os.path.dirname(os.path.abspath(path))
    try:
        sweep = data["sweep"]
        known = {"tasks_per_source", "channels", "sources"}
        given = set(sweep) & known
        if len(given) != 1:
            raise ValueError(f"sweep must name exactly one of {sorted(known)}")
        var = given.pop()
        base = data["base_config"]
        if not os.path.isabs(base):
            base = os.path.join(base_dir, base)
        out = data["output_dir"]
        if not os.path.isabs(out):
            out = os.path.join(base_dir, out)
        return ExperimentSpec(
            base_config_path=base,
            sweep_var=var,
            sweep_values=tuple(int(v) for v in sweep[var]),
            policies=tuple(str(p) for p in data["policies"]),
            random_seeds=tuple(int(s) for s in data.get("random_seeds", ())),
            output_dir=out,
            reoptimize_every=int(data.get("reoptimize_every", 1)),
            dual_iterations=int(data.get("dual_iterations", 100)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed spec file: {exc}") from exc


def validate_spec(spec: ExperimentSpec) -> list[str]:
    v = []
    if not spec.sweep_values:
        v.append("sweep list must be nonempty")
    if not spec.policies:
        v.append("at least one policy is required")
    unknown = [p for p in spec.policies if p not in ("mgf", "maf", "random")]
    if unknown:
        v.append(f"unknown policies: {unknown}")
    if "random" in spec.policies and not spec.random_seeds:
        v.append("random_seeds must be nonempty when the random policy is selected")
    if spec.sweep_var in ("tasks_per_source", "sources") and any(
        x < 1 for x in spec.sweep_values
    ):
        v.append(f"{spec.sweep_var} values must be >= 1")
    if spec.sweep_var == "channels" and any(x < 0 for x in spec.sweep_values):
        v.append("channel values must be >= 0")
    if spec.reoptimize_every < 1:
        v.append("reoptimize_every must be >= 1")
    if spec.dual_iterations < 1:
        v.append("dual_iterations must be >= 1")
    return v


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: str, header: list[str], rows) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _make_policy(name: str, seed: int, reoptimize_every: int, dual_iters: int):
    if name == "mgf":
        return Mgf(
            settings=SubgradientSettings(iterations=dual_iters),
            reoptimize_every=reoptimize_every,
        )
    if name == "maf":
        return Maf()
    if name == "random":
        return Random(seed=seed)
    raise ValueError(f"unknown policy {name!r}")


def _load_valid_config(path: str) -> SystemConfig:
    config = load_config(path)
    violations = validate_config(config)
    if violations:
        raise _Invalid(violations)
    return config


class _Invalid(Exception):
    def __init__(self, violations: list[str]) -> None:
        super().__init__("invalid config")
        self.violations = violations


# --- simulate ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    config = _load_valid_config(args.config)
    policy = _make_policy(args.policy, args.seed, args.reoptimize_every, args.dual_iters)
    result = run(config, policy, seed=args.seed)
    mean_div = (
        sum(result.divergence_trace) / len(result.divergence_trace)
        if result.divergence_trace is not None
        else ""
    )
    _write_csv(
        os.path.join(args.out, "summary.csv"),
        SUMMARY_HEADER,
        [[args.policy, args.seed, result.discounted_cost, result.raw_cost, result.tail_bound, mean_div]],
    )
    if args.trace:
        ids = task_ids(config)
        rows = []
        for t in range(config.horizon):
            aoi = result.aoi_trace[t]
            act = result.action_trace[t].actions
            for flat, tid in enumerate(ids):
                rows.append(
                    [t, tid.source_index, tid.task_index, aoi[flat], act[flat], result.per_slot_cost[t]]
                )
        _write_csv(os.path.join(args.out, "trace.csv"), TRACE_HEADER, rows)
    return EXIT_OK


# --- sweep -------------------------------------------------------------------


def _point_config(base: SystemConfig, var: str, value: int) -> SystemConfig:
    # Task-count sweeps grow the load against fixed budgets; proportional
    # scale_instance scaling belongs to the certify command.
    if var == "tasks_per_source":
        return bounds_mod.replicate_tasks(base, value)
    if var == "channels":
        return SystemConfig(
            num_sources=base.num_sources,
            num_channels=value,
            discount=base.discount,
            horizon=base.horizon,
            aoi_cap=base.aoi_cap,
            initial_aoi=base.initial_aoi,
            sources=base.sources,
        )
    if var == "sources":
        block = base.sources
        sources = tuple(block[i % len(block)] for i in range(value))
        return SystemConfig(
            num_sources=value,
            num_channels=base.num_channels,
            discount=base.discount,
            horizon=base.horizon,
            aoi_cap=base.aoi_cap,
            initial_aoi=base.initial_aoi,
            sources=sources,
        )
    raise ValueError(f"unknown sweep variable {var!r}")


def _sweep_point(job) -> list[list]:
    """All sweep.csv rows for one (sweep value) point; top-level so a worker
    pool can pickle it."""
    base, spec, value = job
    config = _point_config(base, spec.sweep_var, value)
    settings = SubgradientSettings(iterations=spec.dual_iterations)
    bound = bounds_mod.dual_lower_bound(config, settings)
    rhs, _ = bounds_mod.optimality_gap_bound(config, 1)
    rows: list[list] = []
    for policy_name in spec.policies:
        seeds = spec.random_seeds if policy_name == "random" else (0,)
        for seed in seeds:
            policy = _make_policy(policy_name, seed, spec.reoptimize_every, spec.dual_iterations)
            cost = run(config, policy, seed=seed).discounted_cost
            rows.append([spec.sweep_var, value, policy_name, seed, cost, cost - bound, rhs])
    return rows


def cmd_sweep(args) -> int:
    spec = load_experiment_spec(args.spec)
    violations = validate_spec(spec)
    if violations:
        raise _Invalid(violations)
    base = _load_valid_config(spec.base_config_path)
    jobs = [(base, spec, value) for value in spec.sweep_values]
    workers = int(os.environ.get("AOISCHED_WORKERS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_point = list(pool.map(_sweep_point, jobs))
    else:
        per_point = [_sweep_point(job) for job in jobs]
    rows = [row for point in per_point for row in point]
    _write_csv(os.path.join(spec.output_dir, "sweep.csv"), SWEEP_HEADER, rows)
    return EXIT_OK


# --- certify -------------------------------------------------------------------


def cmd_certify(args) -> int:
    config = _load_valid_config(args.config)
    try:
        r_list = [int(x) for x in args.r.split(",") if x.strip()]
    except ValueError as exc:
        raise _Invalid([f"bad --r list: {exc}"]) from exc
    if not r_list or any(r < 1 for r in r_list):
        raise _Invalid(["--r needs a comma-separated list of integers >= 1"])
    settings = SubgradientSettings(iterations=args.dual_iters)

    header = list(CERT_HEADER)
    if args.oracle:
        header.append("oracle_optimal")
    rows = []
    all_ok = True
    for r in r_list:
        cert = bounds_mod.gap_certificate(
            config, r, settings=settings, reoptimize_every=args.reoptimize_every
        )
        row = [r, cert.mgf_cost, cert.dual_bound, cert.gap, cert.gap_bound, cert.horizon_ok]
        asserted = cert.horizon_ok
        ok = cert.gap <= cert.gap_bound and cert.gap >= -1e-9
        if args.oracle:
            opt, _ = bounds_mod.brute_force_optimal(bounds_mod.scale_instance(config, r))
            row.append(opt)
            ok = ok and cert.dual_bound <= opt + 1e-9 and opt <= cert.mgf_cost + 1e-9
        if asserted and not ok:
            all_ok = False
            print(f"certificate FAILED at r={r}: gap={cert.gap} bound={cert.gap_bound}", file=sys.stderr)
        elif not asserted:
            print(f"warning: r={r} horizon below the certificate premise; row not asserted", file=sys.stderr)
        rows.append(row)
    _write_csv(os.path.join(args.out, "certificates.csv"), header, rows)
    return EXIT_OK if all_ok else EXIT_CERT_FAIL


# --- entry point ----------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aoisched", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one policy on one instance")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--policy", choices=["mgf", "maf", "random"], default="mgf")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", default=".")
    p_sim.add_argument("--trace", action="store_true", help="also write trace.csv")
    p_sim.add_argument("--reoptimize-every", dest="reoptimize_every", type=int, default=1)
    p_sim.add_argument("--dual-iters", dest="dual_iters", type=int, default=100)
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="run an experiment spec")
    p_sweep.add_argument("--spec", required=True)
    p_sweep.set_defaults(func=cmd_sweep)

    p_cert = sub.add_parser("certify", help="gap certificates over scale factors")
    p_cert.add_argument("--config", required=True)
    p_cert.add_argument("--r", required=True, help="comma-separated scale factors")
    p_cert.add_argument("--out", default=".")
    p_cert.add_argument("--oracle", action="store_true", help="add exhaustive optimum column")
    p_cert.add_argument("--reoptimize-every", dest="reoptimize_every", type=int, default=1)
    p_cert.add_argument("--dual-iters", dest="dual_iters", type=int, default=100)
    p_cert.set_defaults(func=cmd_certify)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Invalid as exc:
        for violation in exc.violations:
            print(f"invalid: {violation}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConfigIOError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
