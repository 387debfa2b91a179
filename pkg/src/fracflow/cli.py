"""Command-line entry point: ``fracflow <command> --config PATH [--out DIR] [--set k=v] [--seed N]``."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import scipy

from . import __version__, analysis, experiments
from .config import config_from_mapping, parse_json
from .errors import FracflowError, NumericalError, ValidationError
from .integrator import write_trajectory_csv
from .kernel import kernel_table

COMMANDS = ("simulate", "decay", "profile", "inequalities", "probes", "kernel")
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fracflow", description="Coupled nonlocal diffusion experiments.")
    parser.add_argument("command", help="one of: " + ", ".join(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", default="./out", help="output directory (default ./out)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key; repeatable")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed for randomized sweeps")
    return parser


def parse_override(text: str):
    if "=" not in text:
        raise ValidationError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def load_run_config(path, overrides, seed):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from exc
    data = parse_json(text)
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    for item in overrides:
        k, v = parse_override(item)
        data[k] = v
    if seed is not None:
        data["seed"] = seed
    return config_from_mapping(data)


def config_hash(config) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@contextmanager
def thread_cap():
    """Honor FRACFLOW_THREADS by limiting BLAS/OpenMP pools."""
    cap = os.environ.get("FRACFLOW_THREADS")
    if not cap:
        yield
        return
    try:
        n = int(cap)
    except ValueError:
        raise ValidationError(f"FRACFLOW_THREADS must be an integer, got {cap!r}")
    if n < 1:
        raise ValidationError(f"FRACFLOW_THREADS must be >= 1, got {n}")
    from threadpoolctl import threadpool_limits
    with threadpool_limits(limits=n):
        yield


class Timer(dict):
    @contextmanager
    def __call__(self, name):
        t0 = time.perf_counter()
        yield
        self[name] = round(time.perf_counter() - t0, 6)


def _meta(config, command):
    return {"command": command, "config_sha256": config_hash(config), "fracflow": __version__}


def _check_rows(checks):
    return [(name, bool(c["passed"])) for name, c in sorted(checks.items())]


def cmd_simulate(config, out: Path, timer):
    with timer("evolve"):
        traj = experiments.simulate(config)
    files = write_trajectory_csv(traj, out / "trajectory", _meta(config, "simulate"))
    rows = analysis.energy_dissipation_report(traj)
    files.append(analysis.write_csv(out / "energy_bound.csv", ["t", "form_energy", "bound", "pass"],
                                    [(r.t, r.form_energy, r.bound, r.ok) for r in rows],
                                    _meta(config, "simulate")))
    return files, experiments.trajectory_checks(traj)


def cmd_decay(config, out, timer):
    with timer("evolve"):
        traj = experiments.simulate(config)
    with timer("fit"):
        res = experiments.decay(traj, config)
    meta = _meta(config, "decay")
    files = [analysis.write_decay_report(res.early, out / "decay_early.csv"),
             analysis.write_decay_report(res.late, out / "decay_late.csv")]
    files.append(analysis.write_json(out / "decay_summary.json",
                                     {"early": res.early.to_dict(), "late": res.late.to_dict(),
                                      "checks": res.checks, "config_sha256": meta["config_sha256"]}))
    return files, res.checks


def cmd_profile(config, out, timer):
    analysis.check_profile_hypothesis(config.r, config.c, config.dimension)
    with timer("evolve"):
        traj = experiments.simulate(config)
    with timer("profile"):
        series, checks = experiments.profile(traj, config)
    rows = [(t, e1, e2) for (t, e1), (_, e2) in zip(series[1], series[2])]
    files = [analysis.write_csv(out / "profile_error.csv", ["t", "weighted_error_p1", "weighted_error_p2"],
                                rows, _meta(config, "profile"))]
    files.append(analysis.write_json(out / "profile_summary.json", {"checks": checks}))
    return files, checks


def cmd_inequalities(config, out, timer):
    with timer("sweeps"):
        data, checks = experiments.inequality_sweeps(config, seed=config.seed)
    meta = _meta(config, "inequalities")
    files = [
        analysis.write_csv(out / "nash.csv", ["sample", "ratio_h", "ratio_h_half"], data["nash"], meta),
        analysis.write_csv(out / "nash_dilation.csv", ["lambda", "ratio"], data["nash_dilation"], meta),
        analysis.write_csv(out / "measure_density.csv", ["sample", "lhs", "rhs", "ratio"],
                           data["measure_density"], meta),
        analysis.write_csv(out / "interpolation.csv", ["sample", "lhs", "rhs", "ratio", "pass"],
                           data["interpolation"], meta),
    ]
    files.append(analysis.write_json(out / "inequalities_summary.json", {"checks": checks}))
    return files, checks


def cmd_probes(config, out, timer):
    with timer("probes"):
        data, checks = experiments.probes(config)
    meta = _meta(config, "probes")
    small = []
    for case in ("InnerCase", "ExteriorCase"):
        p = data[case]
        small += [(case, e, en, p.slope, p.predicted) for e, en in zip(p.eps, p.energies)]
    files = [
        analysis.write_csv(out / "small_time_probe.csv", ["case", "eps", "energy", "slope", "predicted"],
                           small, meta),
        analysis.write_csv(out / "large_time_probe.csv",
                           ["radius", "center", "energy", "energy_ratio", "cross", "cross_bound",
                            "cross_ratio"],
                           [(rw.radius, rw.center, rw.energy, rw.energy_ratio, rw.cross, rw.cross_bound,
                             rw.cross_ratio) for rw in data["large_time"]], meta),
        analysis.write_csv(out / "rescaled_bounds.csv",
                           ["region", "lambda", "R", "rho", "max_abs", "predicted", "constant"],
                           [row for rep in data["rescaled"]["reports"] for row in rep.as_rows()], meta),
    ]
    files.append(analysis.write_json(out / "probes_summary.json", {"checks": checks}))
    return files, checks


def cmd_kernel(config, out, timer):
    with timer("kernel"):
        table = experiments.kernel_dump(config)
    vals = table.values
    mirrored = kernel_table(table.r, table.t, -table.x).values
    checks = {"nonnegative": {"passed": bool(vals.min() >= -1e-10), "min_value": float(vals.min())},
              "even": {"passed": bool(np.array_equal(vals, mirrored))}}
    return [table.to_csv(out / "kernel.csv")], checks


HANDLERS = {"simulate": cmd_simulate, "decay": cmd_decay, "profile": cmd_profile,
            "inequalities": cmd_inequalities, "probes": cmd_probes, "kernel": cmd_kernel}


def write_manifest(out: Path, command, argv, config, files, checks, timer) -> Path:
    entries = []
    for p in files:
        p = Path(p)
        entries.append({"path": str(p.relative_to(out)), "sha256": file_sha256(p),
                        "bytes": p.stat().st_size})
    manifest = {
        "command": command,
        "argv": list(argv),
        "config": config.to_dict(),
        "config_sha256": config_hash(config),
        "seed": config.seed,
        "versions": {"fracflow": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "timings_s": dict(timer),
        "checks": {k: v for k, v in sorted(checks.items())},
        "all_passed": all(bool(c["passed"]) for c in checks.values()),
        "files": sorted(entries, key=lambda e: e["path"]),
    }
    return analysis.write_json(out / "manifest.json", manifest)


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command not in COMMANDS:
            raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"fracflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        timer = Timer()
        with thread_cap():
            config = load_run_config(args.config, args.overrides, args.seed)
            out = Path(args.out)
            try:
                out.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise ValidationError(f"cannot create output directory {out}: {exc.strerror}") from exc
            with timer("total"):
                files, checks = HANDLERS[args.command](config, out, timer)
            write_manifest(out, args.command, argv, config, files, checks, timer)
        for name, ok in _check_rows(checks):
            print(f"{'PASS' if ok else 'FAIL'} {name}")
        return EXIT_OK
    except ValidationError as exc:
        print(f"fracflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"fracflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FracflowError as exc:
        print(f"fracflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
