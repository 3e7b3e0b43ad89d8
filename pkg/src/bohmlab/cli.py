"""Command line: ``bohmlab <subcommand> --config FILE --out DIR [--seed N] [--snapshots K]``.

Exit status is 0 when every assertion in the report passes, 1 when the run
completed with failed assertions and 2 when the run could not be completed.
In the last case ``DIR/error.json`` is the only file written.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
import tempfile
import traceback
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import parse_config
from .errors import BohmLabError, InvalidConfigError
from .io import jsonable, write_manifest, write_outputs
from .scenarios import run_scenario

SUBCOMMANDS = {
    "stationary": "stationary_well",
    "release": "wall_release",
    "vonneumann": "von_neumann",
    "protective": "protective",
    "sweep": "adiabatic_sweep",
    "fields": "fields",
}
EXIT_OK, EXIT_FAILED_ASSERTIONS, EXIT_ERROR = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bohmlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bohmlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, scenario in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run the {scenario} scenario")
        p.add_argument("--config", required=True, type=Path, help="INI configuration file")
        p.add_argument("--out", required=True, type=Path, help="output directory")
        p.add_argument("--seed", type=int, help="override ensemble.seed")
        p.add_argument("--snapshots", type=int, help="number of wavefunction snapshots to dump")
    return parser


def _write_error(out: Path, exc: BaseException, command: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    kind = exc.kind if isinstance(exc, BohmLabError) else "internal"
    record = {"command": command, "kind": kind, "type": type(exc).__name__,
              "message": str(exc), "code_version": __version__,
              "time": datetime.now(timezone.utc).isoformat()}
    if kind == "internal":
        record["traceback"] = traceback.format_exc()
    path = out / "error.json"
    path.write_text(json.dumps(jsonable(record), indent=2) + "\n")
    return path


def format_report(report) -> str:
    lines = [f"{report.scenario}: {'PASS' if report.passed else 'FAIL'}"]
    lines += [f"  {a.describe()}" for a in report.assertions]
    lines += [f"  warning: {w}" for w in report.warnings]
    return "\n".join(lines)


def run(command: str, config_path, out_dir, seed: int | None = None,
        snapshots: int | None = None) -> int:
    """Execute one subcommand; returns the process exit status."""
    out = Path(out_dir)
    start = datetime.now(timezone.utc).isoformat()
    staging = None
    try:
        cfg = parse_config(config_path, SUBCOMMANDS[command])
        overrides = {k: v for k, v in (("seed", seed), ("snapshots", snapshots)) if v is not None}
        try:
            cfg = replace(cfg, **overrides)
        except InvalidConfigError as err:
            raise InvalidConfigError(f"--{str(err)}") from None
        report = run_scenario(cfg)
        out.mkdir(parents=True, exist_ok=True)
        # results are staged next to the target so a failure leaves nothing behind
        staging = Path(tempfile.mkdtemp(prefix=".bohmlab-", dir=out))
        files = write_outputs(report, staging)
        final = []
        for f in files:
            dest = out / f.name
            f.replace(dest)
            final.append(dest)
        (out / "error.json").unlink(missing_ok=True)
        write_manifest(out, final, report.config, start,
                       extra={"command": command, "passed": report.passed,
                              "runtime": report.runtime})
    except Exception as exc:  # every failure must leave a machine-readable record
        _write_error(out, exc, command)
        print(f"bohmlab {command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        if staging is not None:
            shutil.rmtree(staging, ignore_errors=True)
    print(format_report(report))
    return EXIT_OK if report.passed else EXIT_FAILED_ASSERTIONS


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.out, args.seed, args.snapshots)


if __name__ == "__main__":
    sys.exit(main())
