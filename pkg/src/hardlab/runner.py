"""Bind a config file to an experiment and write its report and series."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

from hardlab.experiments import DEFAULT_ENSEMBLE, EXPERIMENTS, REGISTRY, Outcome, Params
from hardlab.model_core import ConfigError, parse_config_text

REPORT_NAME = "report.json"
WALL_CLOCK_KEY = "wall_clock_s"


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    config: str
    out: str
    seed: int | None = None
    ensemble: int | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; "
                              f"choose from {', '.join(EXPERIMENTS)}")
        if self.ensemble is not None and self.ensemble < 1:
            raise ConfigError("ensemble size must be >= 1")


@dataclass
class ExperimentReport:
    spec: dict
    metrics: dict
    series: dict  # name -> csv file name, relative to the report
    figures: dict
    verdicts: list
    wall_clock_s: float
    unused_keys: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec,
            "metrics": self.metrics,
            "series": self.series,
            "figures": self.figures,
            "verdicts": self.verdicts,
            "passed": self.passed,
            "unused_keys": self.unused_keys,
            WALL_CLOCK_KEY: self.wall_clock_s,
        }


def _clean(x):
    """JSON-safe copy: non-finite floats become null, numpy scalars plain."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):
        return _cell(v.item())
    return "" if v is None else str(v)


def write_series(out_dir: Path, name: str, series) -> str:
    fname = f"{name}.csv"
    with open(out_dir / fname, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(series.columns)
        for row in series.rows:
            w.writerow([_cell(v) for v in row])
    return fname


def run(spec: ExperimentSpec, figures: bool = True) -> ExperimentReport:
    """Execute ``spec`` and write ``report.json``, CSV series and figures."""
    t0 = time.perf_counter()
    cfg_path = Path(spec.config)
    try:
        text = cfg_path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {cfg_path}: {exc}") from None
    config, region, extras = parse_config_text(text, source=str(cfg_path))
    seed = config.seed if spec.seed is None else spec.seed
    ensemble = spec.ensemble
    if ensemble is None:
        ensemble = int(extras.get("ensemble", DEFAULT_ENSEMBLE.get(spec.experiment, 1)))
    if ensemble < 1:
        raise ConfigError("ensemble size must be >= 1")
    config = config.with_(seed=seed)
    out_dir = Path(spec.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    params = Params(extras)
    outcome: Outcome = REGISTRY[spec.experiment](config, region, params, seed, ensemble)

    series = {name: write_series(out_dir, name, s) for name, s in sorted(outcome.series.items())}
    figs = {}
    if figures and outcome.plots:
        from hardlab.plotting import render

        figs = render(outcome, out_dir)
    echo = {
        "experiment": spec.experiment,
        "config_path": str(cfg_path),
        "config_text": text,
        "seed": seed,
        "ensemble": ensemble,
        "parameters": params.used,
    }
    verdicts = [dict(name=v.name, value=v.value, threshold=v.threshold,
                     comparator=v.comparator, passed=v.passed) for v in outcome.verdicts]
    report = ExperimentReport(
        spec=_clean(echo),
        metrics=_clean(outcome.metrics),
        series=series,
        figures=figs,
        verdicts=_clean(verdicts),
        wall_clock_s=round(time.perf_counter() - t0, 3),
        unused_keys=params.unused(),
    )
    (out_dir / REPORT_NAME).write_text(dumps(report.to_dict()))
    return report


def dumps(d: dict) -> str:
    return json.dumps(d, sort_keys=True, indent=2, allow_nan=False) + "\n"


def load_report(out_dir: str | Path) -> dict:
    return json.loads((Path(out_dir) / REPORT_NAME).read_text())


def comparable(report: dict) -> dict:
    """Report without the wall-clock field, for determinism checks."""
    return {k: v for k, v in report.items() if k != WALL_CLOCK_KEY}


def emit_plot_data(out_dir: str | Path) -> list[Path]:
    """Write a whitespace ``.dat`` file per series and a ``plot.gp`` script.

    The script refers to the data files by relative path, so the directory
    can be moved as a whole. Returns the paths written.
    """
    out_dir = Path(out_dir)
    report = load_report(out_dir)
    if not report.get("series"):
        raise ValueError("report has no series")
    written = []
    lines = ["# gnuplot script; run from this directory with: gnuplot plot.gp",
             "set terminal pngcairo size 800,600", "set key left top", ""]
    for name, fname in sorted(report["series"].items()):
        with open(out_dir / fname, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        dat = out_dir / f"{name}.dat"
        with open(dat, "w") as fh:
            fh.write("# " + " ".join(header) + "\n")
            for r in body:
                fh.write(" ".join(c if c not in ("", "nan") else "NaN" for c in r) + "\n")
        written.append(dat)
        numeric = _numeric_columns(body)
        if len(numeric) >= 2:
            x, y = numeric[0], numeric[1]
            lines += [f"set output '{name}_gp.png'",
                      f"set title '{name}'",
                      f"set xlabel '{header[x]}'",
                      f"set ylabel '{header[y]}'",
                      f"plot '{dat.name}' using {x + 1}:{y + 1} with linespoints title '{header[y]}'",
                      ""]
    script = out_dir / "plot.gp"
    script.write_text("\n".join(lines))
    written.append(script)
    return written


def _numeric_columns(rows) -> list[int]:
    if not rows:
        return []
    out = []
    for j in range(len(rows[0])):
        try:
            for r in rows[:20]:
                if r[j] not in ("", "nan"):
                    float(r[j])
            out.append(j)
        except ValueError:
            pass
    return out
