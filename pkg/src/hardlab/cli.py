"""``lab`` command line.

    lab <experiment> --config PATH --out DIR [--seed N] [--ensemble K] [--no-figures]
    lab verify --suite PATH [--out DIR] [--only a,b] [--check-determinism]

Exit codes: 0 success, 2 some verdict failed, 1 error.
"""

from __future__ import annotations

import argparse
import filecmp
import shlex
import sys
from dataclasses import dataclass
from pathlib import Path

from hardlab.events import ContactError, PenetrationError
from hardlab.experiments import EXPERIMENTS
from hardlab.model_core import ConfigError, PlacementError
from hardlab.runner import ExperimentSpec, comparable, emit_plot_data, load_report, run

EXIT_OK, EXIT_ERROR, EXIT_VERDICT = 0, 1, 2


@dataclass
class SuiteEntry:
    name: str
    experiment: str
    config: Path
    seed: int | None = None
    ensemble: int | None = None


def parse_suite(path: str | Path) -> list[SuiteEntry]:
    """Suite lines: ``name experiment config [seed=N] [ensemble=K]``.

    Config paths are relative to the suite file; ``#`` starts a comment.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read suite {path}: {exc}") from None
    entries, seen = [], set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = shlex.split(line)
        if len(parts) < 3:
            raise ConfigError(f"{path}:{lineno}: expected 'name experiment config [...]'")
        name, exp, cfg = parts[:3]
        if exp not in EXPERIMENTS:
            raise ConfigError(f"{path}:{lineno}: unknown experiment {exp!r}")
        if name in seen:
            raise ConfigError(f"{path}:{lineno}: duplicate entry name {name!r}")
        seen.add(name)
        opts = {}
        for p in parts[3:]:
            key, _, val = p.partition("=")
            if key not in ("seed", "ensemble") or not val:
                raise ConfigError(f"{path}:{lineno}: bad option {p!r}")
            try:
                opts[key] = int(val)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: {key} must be an integer") from None
        entries.append(SuiteEntry(name, exp, path.parent / cfg, **opts))
    if not entries:
        raise ConfigError(f"{path}: empty suite")
    return entries


def _run_one(spec: ExperimentSpec, figures: bool = True) -> tuple[int, str]:
    try:
        rep = run(spec, figures=figures)
    except ConfigError as exc:
        return EXIT_ERROR, f"config error: {exc}"
    except (PenetrationError, ContactError, PlacementError) as exc:
        return EXIT_ERROR, f"engine abort ({spec.experiment}, {spec.config}): {exc}"
    except (OSError, RuntimeError, ValueError) as exc:
        return EXIT_ERROR, f"error ({spec.experiment}, {spec.config}): {exc}"
    failed = [v["name"] for v in rep.verdicts if not v["passed"]]
    if failed:
        return EXIT_VERDICT, "verdict failed: " + ", ".join(failed)
    return EXIT_OK, "ok"


def _same_outputs(a: Path, b: Path) -> bool:
    if comparable(load_report(a)) != comparable(load_report(b)):
        return False
    names = sorted(p.name for p in a.glob("*.csv"))
    if names != sorted(p.name for p in b.glob("*.csv")):
        return False
    return all(filecmp.cmp(a / n, b / n, shallow=False) for n in names)


def verify(suite: str, out: str, only: list[str] | None = None,
           check_determinism: bool = False) -> int:
    entries = parse_suite(suite)
    if only:
        unknown = set(only) - {e.name for e in entries}
        if unknown:
            raise ConfigError(f"unknown suite entries: {', '.join(sorted(unknown))}")
        entries = [e for e in entries if e.name in only]
    codes = []
    for e in entries:
        d = Path(out) / e.name
        spec = ExperimentSpec(e.experiment, str(e.config), str(d), e.seed, e.ensemble)
        code, msg = _run_one(spec)
        if code != EXIT_ERROR and check_determinism:
            spec2 = ExperimentSpec(e.experiment, str(e.config), str(d) + ".rerun", e.seed,
                                   e.ensemble)
            code2, msg2 = _run_one(spec2)
            if code2 == EXIT_ERROR:
                code, msg = code2, msg2
            elif not _same_outputs(d, Path(spec2.out)):
                code, msg = EXIT_VERDICT, "rerun differs"
            else:
                msg += " (rerun identical)"
        label = {EXIT_OK: "PASS", EXIT_VERDICT: "FAIL", EXIT_ERROR: "ERROR"}[code]
        print(f"{label:5s} {e.name:28s} {msg}", flush=True)
        codes.append(code)
    if EXIT_ERROR in codes:
        return EXIT_ERROR
    return EXIT_VERDICT if EXIT_VERDICT in codes else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lab", description="hard-disc reversibility lab")
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        s = sub.add_parser(name, help=f"run the {name} experiment")
        s.add_argument("--config", required=True)
        s.add_argument("--out", required=True)
        s.add_argument("--seed", type=int)
        s.add_argument("--ensemble", type=int)
        s.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
        s.add_argument("--plot-data", action="store_true",
                       help="also write gnuplot .dat files and plot.gp")
    v = sub.add_parser("verify", help="run every entry of a suite file")
    v.add_argument("--suite", required=True)
    v.add_argument("--out", default="verify_out")
    v.add_argument("--only", help="comma-separated entry names")
    v.add_argument("--check-determinism", action="store_true",
                   help="rerun each entry and compare outputs byte for byte")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            only = [s for s in args.only.split(",") if s] if args.only else None
            return verify(args.suite, args.out, only, args.check_determinism)
        spec = ExperimentSpec(args.command, args.config, args.out, args.seed, args.ensemble)
    except ConfigError as exc:
        print(f"lab: {exc}", file=sys.stderr)
        return EXIT_ERROR
    code, msg = _run_one(spec, figures=not args.no_figures)
    if code != EXIT_ERROR and args.plot_data:
        emit_plot_data(spec.out)
    stream = sys.stderr if code == EXIT_ERROR else sys.stdout
    print(f"lab {spec.experiment}: {msg}", file=stream)
    return code


if __name__ == "__main__":
    sys.exit(main())
