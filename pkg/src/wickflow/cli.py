"""Command-line front end.

Exit codes: 0 success, 2 invalid config or operand kinds, 3 failed
convergence certificate, 4 failed stationary hypotheses.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import evolution, stationary
from .chaos import from_csv, to_csv, wick, wick_power
from .errors import ConfigError, DegenerateRateError, HypothesisError, KindMismatchError, TruncationDomainError
from .multiindex import MultiIndex, Truncation, log_weight
from .problems import build, builtin_config, load_config, validate_config

EXIT_OK, EXIT_CONFIG, EXIT_CERT, EXIT_HYPOTHESIS = 0, 2, 3, 4


def _jsonable(obj):
    if isinstance(obj, dict):
        return {(k.serialize() if isinstance(k, MultiIndex) else str(k)): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, MultiIndex):
        return obj.serialize()
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_jsonable(data), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _threads(arg: int | None) -> int:
    env = os.environ.get("WICKFLOW_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"WICKFLOW_THREADS must be an integer, got {env!r}") from None
    if arg is not None:
        return max(1, arg)
    return os.cpu_count() or 1


def _config(args) -> dict:
    if (args.config is None) == (args.builtin is None):
        raise ConfigError("give exactly one of --config or --builtin")
    if args.builtin is not None:
        return validate_config(builtin_config(args.builtin))
    return load_config(args.config)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_trajectory(path: Path, solution: evolution.SolutionProcess, stride: int = 1) -> None:
    """CSV with columns ``t, alpha, u_1..u_d, du_1..du_d``; the final node is always kept."""
    n = len(solution.grid)
    nodes = list(range(0, n, stride))
    if nodes[-1] != n - 1:
        nodes.append(n - 1)
    d = next(iter(solution.u.values())).shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "alpha"] + [f"u_{i + 1}" for i in range(d)] + [f"du_{i + 1}" for i in range(d)])
        for alpha in solution.order:
            u, du = solution.u[alpha], solution.du[alpha]
            key = alpha.serialize()
            for i in nodes:
                w.writerow([repr(float(solution.grid[i])), key] + [repr(float(x)) for x in u[i]]
                           + [repr(float(x)) for x in du[i]])


def write_stationary(path: Path, solution: stationary.StationarySolution) -> None:
    d = next(iter(solution.u.values())).size
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha"] + [f"u_{i + 1}" for i in range(d)])
        for alpha in solution.order:
            w.writerow([alpha.serialize()] + [repr(float(x)) for x in solution.u[alpha]])


def _expect(cfg: dict, kind: str) -> None:
    if cfg["type"] != kind:
        raise ConfigError(f"config type is {cfg['type']!r}; this command needs {kind!r}")


def cmd_solve_evolution(args) -> int:
    cfg = _config(args)
    _expect(cfg, "evolution")
    problem = build(cfg)
    threads = _threads(args.threads)
    solution = evolution.solve(problem, method=args.method, threads=threads)
    cert = evolution.certificate(problem, solution)
    out = _out_dir(args)
    stride = args.stride or cfg.get("output_stride", 1)
    write_trajectory(out / "trajectory.csv", solution, stride)
    _write_json(out / "certificate.json", cert.to_dict())
    if not cert.passed:
        for line in cert.failures():
            print(f"certificate: {line}", file=sys.stderr)
        return EXIT_CERT
    return EXIT_OK


def cmd_solve_stationary(args) -> int:
    cfg = _config(args)
    _expect(cfg, "stationary")
    problem = build(cfg)
    out = _out_dir(args)
    try:
        solution = stationary.solve(problem, threads=_threads(args.threads))
    except HypothesisError as exc:
        _write_json(out / "report.json", {"conditions": exc.report.to_dict(), "failures": exc.report.failures()})
        for line in exc.report.failures():
            print(f"hypothesis: {line}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    bound = stationary.norm_bound(problem, solution)
    write_stationary(out / "solution.csv", solution)
    _write_json(out / "report.json", {
        "conditions": solution.report.to_dict(),
        "norm_bound": {"lhs": bound.lhs, "rhs": bound.rhs, "M": bound.M, "pass": bound.passed},
        "max_residual": solution.max_residual,
    })
    return EXIT_OK


def _parse_grid(text: str) -> list[Truncation]:
    out = []
    for part in text.split(","):
        try:
            n, m = (int(x) for x in part.strip().lower().split("x"))
            out.append(Truncation(n, m))
        except ValueError:
            raise ConfigError(f"bad truncation {part!r}; use NxM, e.g. 3x6") from None
    for a, b in zip(out, out[1:]):
        if not b.contains_truncation(a):
            raise ConfigError(f"study truncations must be nested, I({a.n},{a.m}) is not inside I({b.n},{b.m})")
    return out


def study(cfg: dict, truncations: list[Truncation], threads: int = 1) -> tuple[dict, dict]:
    """Solve at each truncation; returns ``(report, timings)``.

    ``sup`` norms are used for evolution problems, Euclidean norms for
    stationary ones.  ``delta`` is the weighted norm of the difference to
    the previous truncation, with missing coefficients read as zero.
    """
    cfg = validate_config(cfg)
    p = float(cfg.get("p", 1.0))
    rows, timings, prev = [], [], None
    for t in truncations:
        start = time.perf_counter()
        problem = build(cfg, truncation=t)
        if cfg["type"] == "evolution":
            sol = evolution.solve(problem, threads=threads)
            passed = evolution.certificate(problem, sol).passed
            coeffs = {a: sol.u[a] for a in sol.order}

            def size(x):
                return float(np.max(np.linalg.norm(x, axis=-1)))
        else:
            sol = stationary.solve(problem, threads=threads, check=False)
            passed = sol.report.passed and stationary.norm_bound(problem, sol).passed
            coeffs = dict(sol.u)

            def size(x):
                return float(np.linalg.norm(x))
        timings.append({"n": t.n, "m": t.m, "seconds": time.perf_counter() - start})
        levels: dict[int, float] = {}
        for a, x in coeffs.items():
            levels[len(a)] = levels.get(len(a), 0.0) + size(x) ** 2 * math.exp(-p * log_weight(a))
        norm = math.fsum(levels.values())
        row = {"n": t.n, "m": t.m, "terms": len(coeffs), "norm_sq": norm,
               "level_mass": [levels.get(k, 0.0) for k in range(t.n + 1)], "pass": passed, "delta": None}
        if prev is not None:
            diff = {a: coeffs[a] - prev[a] if a in prev else coeffs[a] for a in coeffs}
            diff.update({a: prev[a] for a in prev if a not in coeffs})
            row["delta"] = math.fsum(size(x) ** 2 * math.exp(-p * log_weight(a)) for a, x in diff.items())
        rows.append(row)
        prev = coeffs
    return {"name": cfg.get("name", ""), "p": p, "truncations": rows}, {"timings": timings}


def cmd_study(args) -> int:
    cfg = _config(args)
    report, timings = study(cfg, _parse_grid(args.grid), threads=_threads(args.threads))
    out = _out_dir(args)
    _write_json(out / "study.json", report)
    _write_json(out / "timings.json", timings)
    return EXIT_OK


def cmd_wick(args) -> int:
    try:
        lhs = from_csv(Path(args.lhs).read_text(encoding="utf-8"))
        if args.op == "product":
            if args.rhs is None:
                raise ConfigError("--op product needs --rhs")
            result = wick(lhs, from_csv(Path(args.rhs).read_text(encoding="utf-8")))
        else:
            if args.power is None or args.power < 0:
                raise ConfigError("--op power needs a non-negative --power")
            result = wick_power(lhs, args.power)
    except OSError as exc:
        raise ConfigError(f"cannot read operand: {exc}") from None
    text = to_csv(result)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wickflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def problem_args(sp):
        sp.add_argument("--config", help="problem config (JSON)")
        sp.add_argument("--builtin", help="name of a shipped problem")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (WICKFLOW_THREADS overrides)")

    sp = sub.add_parser("solve-evolution", help="solve a Cauchy problem and certify it")
    problem_args(sp)
    sp.add_argument("--method", choices=["exponential", "trapezoid"], default="exponential")
    sp.add_argument("--stride", type=int, default=None, help="write every k-th time node")
    sp.set_defaults(func=cmd_solve_evolution)

    sp = sub.add_parser("solve-stationary", help="solve a stationary equation after checking its hypotheses")
    problem_args(sp)
    sp.set_defaults(func=cmd_solve_stationary)

    sp = sub.add_parser("study", help="solve on nested truncations and report tail decay")
    problem_args(sp)
    sp.add_argument("--grid", required=True, help='comma-separated NxM truncations, e.g. "2x4,3x6"')
    sp.set_defaults(func=cmd_study)

    sp = sub.add_parser("wick", help="Wick product or power of coefficient CSV files")
    sp.add_argument("--lhs", required=True)
    sp.add_argument("--rhs")
    sp.add_argument("--op", choices=["product", "power"], default="product")
    sp.add_argument("--power", type=int)
    sp.add_argument("--out", help="output CSV (default: standard output)")
    sp.set_defaults(func=cmd_wick)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, KindMismatchError, TruncationDomainError, DegenerateRateError) as exc:
        print(f"wickflow: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"wickflow: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
