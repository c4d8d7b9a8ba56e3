"""Command line entry point: ``hierlab <kind> [--config FILE] [--out DIR] ...``.

Exit codes: 0 PASS, 1 FAIL, 2 configuration error, 3 capacity error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import KINDS, Scenario, defaults, load
from .errors import CapacityError, ConfigError, ContractViolation, IntegratorAccuracyError
from .experiments import RUNNERS, SCHEMA_VERSION, Outcome, regimes_report, run_chaos, write_csv_text

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_CAPACITY = 0, 1, 2, 3


def _to_builtin(v):
    if isinstance(v, dict):
        return {str(k): _to_builtin(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_to_builtin(x) for x in v]
    if isinstance(v, np.ndarray):
        return _to_builtin(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if np.isfinite(f) else str(f)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def atomic_write(path: str, text: str):
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_report(sc: Scenario, out: Outcome) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "hierlab": __version__,
        "scenario": sc.name,
        "kind": sc.kind,
        "seed": sc.seed,
        "config_digest": sc.digest(),
        "verdict": out.verdict,
        "results": _to_builtin(out.report),
    }


def execute(sc: Scenario, out_dir: str | None, timings: bool = False) -> tuple[dict, str | None]:
    """Run one scenario and write its artifacts; returns (report, output directory)."""
    if sc.kind == "chaos":
        outcome = run_chaos(sc, timings)
    else:
        outcome = RUNNERS[sc.kind](sc)
    report = build_report(sc, outcome)
    target = None
    if out_dir is not None:
        target = os.path.join(out_dir, f"{sc.name}-{sc.digest()}")
        for fname, (header, rows) in outcome.tables.items():
            atomic_write(os.path.join(target, fname), write_csv_text(header, rows))
        atomic_write(os.path.join(target, "report.json"), json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report, target


def _run_one(args):
    sc, out_dir, timings = args
    try:
        report, target = execute(sc, out_dir, timings)
        return report, target, None
    except CapacityError as e:
        return None, None, ("capacity", str(e))
    except ConfigError as e:
        return None, None, ("config", str(e))
    except (ContractViolation, IntegratorAccuracyError) as e:
        return None, None, ("run", str(e))


def merge_reports(reports: list[dict]):
    """One report is returned unchanged; several become a list.  Schema versions must agree."""
    if not reports:
        raise ConfigError("no reports to merge")
    versions = {r.get("schema") for r in reports}
    if len(versions) != 1:
        raise ConfigError(f"cannot merge reports with schema versions {sorted(map(str, versions))}")
    if versions != {SCHEMA_VERSION}:
        raise ConfigError(f"unsupported report schema {versions.pop()} (this build reads {SCHEMA_VERSION})")
    return reports[0] if len(reports) == 1 else list(reports)


def _scenario(args, kind: str, path: str | None) -> Scenario:
    sc = load(path, kind) if path else defaults(kind)
    overrides = {}
    if args.seed is not None:
        overrides[("scenario", "seed")] = args.seed
    if kind == "regimes":
        for key in ("d", "s", "alpha"):
            v = getattr(args, key, None)
            if v is not None:
                overrides[("regimes", key)] = v
    for (sec, key), v in overrides.items():
        sc.values[sec][key] = v
    return sc


def _summary(report: dict) -> str:
    return f"{report['scenario']} [{report['kind']}] {report['verdict']}"


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hierlab", description="Hierarchy/Liouville duality experiments on a truncated Fourier model.")
    p.add_argument("--version", action="version", version=f"hierlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", action="append", help="scenario file (sectioned key = value); repeat for a batch")
        sp.add_argument("--out", help="output directory (HIERLAB_OUT overrides)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for a batch of scenarios")
        sp.add_argument("--seed", type=lambda s: int(s, 0), help="override scenario.seed")
        sp.add_argument("--json", action="store_true", help="print the JSON report to stdout")

    for kind in KINDS:
        sp = sub.add_parser(kind, help=f"run the {kind} experiment")
        common(sp)
        if kind == "chaos":
            sp.add_argument("--timings", action="store_true", help="record wall-clock runtime_ms (not reproducible)")
        if kind == "regimes":
            sp.add_argument("d", nargs="?", type=int)
            sp.add_argument("s", nargs="?")
            sp.add_argument("alpha", nargs="?")

    sp = sub.add_parser("run", help="run scenario files of any kind")
    common(sp, config=False)
    sp.add_argument("--config", action="append", required=True, help="scenario file; repeat for several")
    sp.add_argument("--timings", action="store_true")

    sp = sub.add_parser("report", help="merge report.json files")
    sp.add_argument("inputs", nargs="+")
    sp.add_argument("--out", help="write the merged report here instead of stdout")
    return p


def _out_dir(args) -> str | None:
    return os.environ.get("HIERLAB_OUT") or getattr(args, "out", None)


def _cmd_report(args) -> int:
    reports = []
    for path in args.inputs:
        try:
            with open(path, encoding="utf-8") as fh:
                reports.append(json.load(fh))
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot read report {path}: {e}") from None
    merged = merge_reports(reports)
    text = json.dumps(merged, indent=2, sort_keys=True) + "\n"
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_PASS


def _cmd_run(args) -> int:
    scenarios = []
    for path in args.config:
        sc = load(path)
        if args.seed is not None:
            sc.values["scenario"]["seed"] = args.seed
        scenarios.append(sc)
    return _batch(scenarios, args)


def _batch(scenarios: list[Scenario], args) -> int:
    out_dir = _out_dir(args)
    jobs = [(sc, out_dir, getattr(args, "timings", False)) for sc in scenarios]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    code = EXIT_PASS
    reports = []
    for sc, (report, target, err) in zip(scenarios, results):
        if err is not None:
            kind, msg = err
            print(f"{sc.name}: {kind} error: {msg}", file=sys.stderr)
            code = max(code, {"capacity": EXIT_CAPACITY, "config": EXIT_CONFIG}.get(kind, EXIT_FAIL))
            continue
        reports.append(report)
        print(_summary(report) + (f" -> {target}" if target else ""), file=sys.stderr)
        if report["verdict"] != "PASS":
            code = max(code, EXIT_FAIL)
    if args.json:
        sys.stdout.write(json.dumps(reports, indent=2, sort_keys=True) + "\n")
    return code


def _cmd_kind(args) -> int:
    paths = args.config or [None]
    if len(paths) > 1:
        return _batch([_scenario(args, args.command, p) for p in paths], args)
    sc = _scenario(args, args.command, paths[0])
    if sc.kind == "regimes":
        regimes_report(sc["regimes"]["d"], sc["regimes"]["s"], sc["regimes"]["alpha"])  # validate early
    report, target = execute(sc, _out_dir(args), getattr(args, "timings", False))
    if args.json:
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    else:
        print(_summary(report) + (f" -> {target}" if target else ""))
    return EXIT_PASS if report["verdict"] == "PASS" else EXIT_FAIL


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_kind(args)
    except ConfigError as e:
        print(f"hierlab: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as e:
        print(f"hierlab: capacity error: {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ContractViolation, IntegratorAccuracyError) as e:
        print(f"hierlab: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
