"""Experiment bodies behind the command-line runner.

Each experiment takes the parsed system config, the start region, the free
``key=value`` extras of the config file, a base seed and an ensemble size,
and returns an :class:`Outcome`: scalar metrics, verdicts against named
thresholds, tabular series and plot hints. Ensemble member ``i`` always
uses seed ``seed + i``; members run through :func:`ensemble_map`, which
keeps the results in member order whatever the completion order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from hardlab.chaos import (
    make_frozen_scene,
    measure_divergence,
    measure_mean_free_path,
    required_initial_precision,
    run_expansion,
    run_reversal,
    InsufficientStatistics,
)
from hardlab.diffraction import (
    Z_THRESHOLD,
    classify_snapshot,
    probe_window,
    smeared_reference,
    structure_factor,
    uniform_positions,
)
from hardlab.events import WALL, advance
from hardlab.model_core import ConfigError, SystemConfig, mean_free_path_nominal, sample_initial_configuration
from hardlab.oracles import bessel_reference, naive_time_stepping
from hardlab.overlap import interference_verdict, overlap_from_deltas
from hardlab.scatter import (
    PhaseShiftTable,
    bessel_J_all,
    bessel_Y_all,
    default_m_max,
    semiclassical_deflection_check,
    total_cross_section,
)
from hardlab.semiclassics import (
    RayPacket,
    amplification_factor,
    n_crit_raw,
    predict_n_crit,
    propagate_packet,
    ray_amplification,
    validate_wkb,
)

EXPERIMENTS = ("simulate", "reverse", "divergence", "wavepacket", "phaseshift", "overlap",
               "diffract", "expansion", "precision")

DEFAULT_ENSEMBLE = {"reverse": 20, "divergence": 100, "wavepacket": 10, "diffract": 50}


# --------------------------------------------------------------------------
# plumbing


@dataclass
class Verdict:
    name: str
    value: float
    threshold: float | list
    comparator: str  # one of <=, >=, ==, in
    passed: bool

    @classmethod
    def check(cls, name, value, comparator, threshold):
        value = float(value)
        if comparator == "<=":
            ok = value <= threshold
        elif comparator == ">=":
            ok = value >= threshold
        elif comparator == "==":
            ok = value == threshold
        elif comparator == "in":
            ok = threshold[0] <= value <= threshold[1]
        else:
            raise ValueError(f"unknown comparator {comparator!r}")
        return cls(name, value, threshold, comparator, bool(ok and math.isfinite(value)))


@dataclass
class Series:
    columns: list[str]
    rows: list[list]


@dataclass
class PlotHint:
    series: str
    x: str
    y: str
    title: str
    logy: bool = False
    group: str | None = None  # column splitting rows into separate curves


@dataclass
class Outcome:
    metrics: dict[str, float] = field(default_factory=dict)
    verdicts: list[Verdict] = field(default_factory=list)
    series: dict[str, Series] = field(default_factory=dict)
    plots: list[PlotHint] = field(default_factory=list)
    params: dict[str, object] = field(default_factory=dict)


class Params:
    """Typed access to the config extras; remembers every value it hands out."""

    def __init__(self, extras: dict[str, str]):
        self.extras = dict(extras)
        self.used: dict[str, object] = {}

    def get(self, key, default, kind=float):
        raw = self.extras.get(key)
        if raw is None:
            val = default
        else:
            try:
                val = kind(raw)
            except ValueError:
                raise ConfigError(f"bad value for {key}: {raw!r}") from None
        self.used[key] = val
        return val

    def floats(self, key, default):
        raw = self.extras.get(key)
        if raw is None:
            vals = list(default)
        else:
            try:
                vals = [float(x) for x in raw.split(",") if x.strip()]
            except ValueError:
                raise ConfigError(f"bad list for {key}: {raw!r}") from None
        self.used[key] = vals
        return vals

    def ints(self, key, default):
        return [int(x) for x in self.floats(key, default)]

    def unused(self) -> list[str]:
        return sorted(set(self.extras) - set(self.used) - {"ensemble"})


def worker_count() -> int:
    raw = os.environ.get("LAB_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"LAB_THREADS must be an integer, got {raw!r}") from None
        if n < 1:
            raise ConfigError("LAB_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def ensemble_map(fn, items) -> list:
    """``[fn(x) for x in items]``, possibly on worker processes, in item order."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _median(x) -> float:
    x = np.asarray([v for v in x if v is not None and not math.isnan(v)], dtype=float)
    return float(np.median(x)) if len(x) else math.nan


def _c_nominal(config: SystemConfig) -> float:
    return (config.mean_separation / config.disc_radius) ** 2


# --------------------------------------------------------------------------
# simulate


def _simulate_member(args):
    config, region, n_events, t_end, keep_log = args
    s0 = sample_initial_configuration(config, region)
    e0 = s0.kinetic_energy(config.disc_mass)
    worst = [0.0]

    def watch(rec, vb, va):
        if rec.id_b != WALL:
            pb, pa = vb.sum(axis=0), va.sum(axis=0)
            scale = np.abs(vb).sum()
            worst[0] = max(worst[0], float(np.abs(pa - pb).max()) / scale)

    s1, log = advance(s0, t_end, on_event=watch, max_events=n_events)
    drift = abs(s1.kinetic_energy(config.disc_mass) - e0) / e0
    n_dd = len(log.disc_disc())
    try:
        mfp = measure_mean_free_path(log)
    except InsufficientStatistics:
        mfp = math.nan
    return dict(drift=drift, dp=worst[0], events=len(log), disc_disc=n_dd,
                min_gap=s1.min_pair_distance() - 2 * config.disc_radius, mfp=mfp,
                time=s1.time, log=log if keep_log else None)


def simulate(config, region, params: Params, seed, ensemble) -> Outcome:
    n_events = params.get("n_events", 100_000, int)
    t_end = params.get("t_end", math.inf)
    oracle_events = params.get("oracle_events", 0, int)
    oracle_dt = params.get("oracle_dt", 1e-5)
    energy_tol = params.get("energy_tol", 1e-9)
    momentum_tol = params.get("momentum_tol", 1e-12)
    oracle_tol = params.get("oracle_tol", 1e-4)
    members = [(config.with_(seed=seed + i), region, n_events, t_end, i == 0)
               for i in range(ensemble)]
    res = ensemble_map(_simulate_member, members)
    out = Outcome()
    a = config.disc_radius
    out.metrics.update(
        energy_drift_rel=max(r["drift"] for r in res),
        momentum_change_rel=max(r["dp"] for r in res),
        events=sum(r["events"] for r in res),
        disc_disc_events=sum(r["disc_disc"] for r in res),
        min_gap_over_a=min(r["min_gap"] for r in res) / a,
        mean_free_path=_median([r["mfp"] for r in res]),
        mean_free_path_nominal=mean_free_path_nominal(config),
    )
    out.verdicts += [
        Verdict.check("energy_drift_rel", out.metrics["energy_drift_rel"], "<=", energy_tol),
        Verdict.check("momentum_change_rel", out.metrics["momentum_change_rel"], "<=",
                      momentum_tol),
    ]
    log = res[0]["log"]
    if log is not None:
        recs = log.records[:2000]
        out.series["events"] = Series(
            ["time", "id_a", "id_b", "b_impact", "free_path"],
            [[r.time, r.id_a, r.id_b, r.impact_parameter, r.free_path] for r in recs])
        out.series["free_paths"] = Series(
            ["index", "free_path"],
            [[i, r.free_path] for i, r in enumerate(log.disc_disc()[:2000])])
        out.plots.append(PlotHint("free_paths", "index", "free_path", "free path per collision"))
    if oracle_events > 0:
        err = oracle_comparison(config.with_(seed=seed), region, oracle_events, oracle_dt)
        out.metrics["oracle_position_error_over_a"] = err["position"] / a
        out.metrics["oracle_time_error"] = err["time"]
        out.verdicts.append(Verdict.check("oracle_position_error_over_a",
                                          err["position"] / a, "<=", oracle_tol))
        out.series["oracle"] = Series(["event", "t_event", "t_oracle"],
                                      [[i + 1, x, y] for i, (x, y) in enumerate(err["pairs"])])
    return out


def oracle_comparison(config, region, n_events, dt):
    """Event-driven run vs the fixed-step bisection oracle over ``n_events`` events."""
    if config.n_discs > 10:
        raise ConfigError("oracle comparison is limited to n_discs <= 10")
    s0 = sample_initial_configuration(config, region)
    t_or, pos, vel, times = naive_time_stepping(s0.positions, s0.velocities, config.disc_radius,
                                                s0.enclosure_radius, dt, n_events)
    # a little slack past the oracle's last contact, then stop on the same event
    s1, log = advance(s0, t_or + 1e-3, max_events=n_events)
    s1_pos = s1.positions + s1.velocities * (t_or - s1.time)
    te = log.times()
    m = min(len(te), len(times))
    return dict(position=float(np.abs(s1_pos - pos).max()),
                time=float(np.abs(te[:m] - np.asarray(times[:m])).max()) if m else math.nan,
                pairs=list(zip(te[:m].tolist(), times[:m])))


# --------------------------------------------------------------------------
# reverse


def _reverse_member(args):
    config, region, t_rev, exclude = args
    rep = run_reversal(config, t_rev, exclude=exclude, region=region)
    return rep.errors, rep.collisions_per_disc


def reverse(config, region, params: Params, seed, ensemble) -> Outcome:
    a, R = config.disc_radius, config.R
    t_list = params.floats("t_rev", [mean_free_path_nominal(config) / config.speed])
    exclude = tuple(params.ints("exclude", []))
    bad = [i for i in exclude if not 0 <= i < config.n_discs]
    if bad:
        raise ConfigError(f"exclude ids out of range: {bad}")
    wavelength = params.get("wavelength", 1e-10)
    max_error_tol = params.get("max_error_tol", 1e-6)
    max_cpd = params.get("max_collisions_per_disc", 5.0)
    min_cpd = params.get("min_collisions_per_disc", 10.0)
    band = (params.get("saturation_low", 0.1), params.get("saturation_high", 2.0))
    min_fraction = params.get("success_fraction", 0.9)

    members = [(config.with_(seed=seed + i), region, t, exclude)
               for t in t_list for i in range(ensemble)]
    res = ensemble_map(_reverse_member, members)
    out = Outcome()
    ladder = []
    for j, t in enumerate(t_list):
        chunk = res[j * ensemble:(j + 1) * ensemble]
        maxes = [float(e.max()) for e, _ in chunk]
        rmss = [float(np.sqrt(np.mean(e**2))) for e, _ in chunk]
        cpds = [c for _, c in chunk]
        ok = [interference_verdict(e, config.n_discs, wavelength)[0] for e, _ in chunk]
        ladder.append(dict(t=t, cpd=_median(cpds), max=_median(maxes), rms=_median(rmss),
                           rms_all=rmss, interf=float(np.mean(ok))))
    out.series["ladder"] = Series(
        ["T_rev", "collisions_per_disc", "median_max_error", "median_rms_error",
         "interference_fraction"],
        [[d["t"], d["cpd"], d["max"], d["rms"], d["interf"]] for d in ladder])
    out.series["members"] = Series(
        ["T_rev", "member", "seed", "max_error", "rms_error", "collisions_per_disc"],
        [[t_list[k // ensemble], k % ensemble, seed + k % ensemble, float(e.max()),
          float(np.sqrt(np.mean(e**2))), c] for k, (e, c) in enumerate(res)])
    out.plots.append(PlotHint("ladder", "collisions_per_disc", "median_rms_error",
                              "median return error vs forward collisions", logy=True))
    last = ladder[-1]
    out.metrics.update(
        median_max_error_over_a=last["max"] / a,
        median_rms_error_over_R=last["rms"] / R,
        median_collisions_per_disc=last["cpd"],
        interference_fraction=last["interf"],
        R=R,
    )
    if exclude:
        frac = float(np.mean([r >= band[0] * R for r in last["rms_all"]]))
        out.metrics["fraction_rms_above_floor"] = frac
        out.verdicts += [
            Verdict.check("median_collisions_per_disc", last["cpd"], ">=", min_cpd),
            Verdict.check("fraction_rms_above_floor", frac, ">=", min_fraction),
        ]
    elif len(ladder) == 1:
        out.verdicts += [
            Verdict.check("median_max_error_over_a", last["max"] / a, "<=", max_error_tol),
            Verdict.check("median_collisions_per_disc", last["cpd"], "<=", max_cpd),
        ]
    else:
        # nondecreasing until the saturation band is entered
        viol = 0
        for p, q in zip(ladder[:-1], ladder[1:]):
            if p["rms"] < band[0] * R and q["rms"] < p["rms"]:
                viol += 1
        out.metrics["monotonicity_violations"] = viol
        out.verdicts += [
            Verdict.check("monotonicity_violations", viol, "<=", 0),
            Verdict.check("median_rms_error_over_R", last["rms"] / R, "in", list(band)),
        ]
    return out


# --------------------------------------------------------------------------
# divergence


def _divergence_member(args):
    config, delta_b0, n_max, offsets, miss_n_max, saturation = args
    scene = make_frozen_scene(config)
    a = config.disc_radius
    ser = measure_divergence(scene, delta_b0 * a, n_max, saturation)
    misses = [measure_divergence(scene, off * a, miss_n_max, saturation).n_miss
              for off in offsets]
    return ser.n, ser.delta_b, ser.slope, ser.ratios, misses


def divergence(config, region, params: Params, seed, ensemble) -> Outcome:
    delta_b0 = params.get("delta_b0", 1e-10)
    n_max = params.get("n_max", 12, int)
    offsets = params.floats("miss_offsets", [1e-4, 1e-6, 1e-8])
    miss_n_max = params.get("miss_n_max", 30, int)
    saturation = params.get("saturation", 0.1)
    slope_band = (params.get("slope_low", 1.5), params.get("slope_high", 3.0))
    ratio_factor = params.get("ratio_factor", 2.0)
    miss_tol = params.get("miss_tolerance", 2.0)
    c = params.get("c", _c_nominal(config))
    ln_la = math.log(config.mean_separation / config.disc_radius)
    a_eff = 2.0 * config.disc_radius

    members = [(config.with_(seed=seed + i), delta_b0, n_max, offsets, miss_n_max, saturation)
               for i in range(ensemble)]
    res = ensemble_map(_divergence_member, members)
    out = Outcome()
    slopes = [r[2] for r in res]
    ratios = np.concatenate([r[3] for r in res]) if res else np.array([])
    med_slope = _median(slopes)
    med_ratio = float(np.median(ratios)) if len(ratios) else math.nan
    out.metrics.update(
        median_slope=med_slope,
        slope_over_ln_l_a=med_slope / ln_la,
        median_ratio=med_ratio,
        c_nominal=c,
        fitted_members=sum(s is not None for s in slopes),
    )
    out.verdicts += [
        Verdict.check("slope_over_ln_l_a", med_slope / ln_la, "in", list(slope_band)),
        Verdict.check("median_ratio", med_ratio, "in", [c / ratio_factor, c * ratio_factor]),
    ]
    rows = []
    for j, off in enumerate(offsets):
        vals = [r[4][j] for r in res if r[4][j] is not None]
        pred = math.log(a_eff / (off * config.disc_radius)) / math.log(c)
        med = float(np.median(vals)) if vals else math.nan
        tag = f"{off:g}"
        out.metrics[f"n_miss_median[{tag}]"] = med
        out.metrics[f"n_miss_predicted[{tag}]"] = pred
        out.metrics[f"n_miss_escaped[{tag}]"] = len(res) - len(vals)
        out.verdicts.append(Verdict.check(f"n_miss_error[{tag}]", abs(med - pred), "<=", miss_tol))
        rows.append([off, pred, med, len(vals)])
    out.series["missing_partners"] = Series(["delta_b0_over_a", "predicted", "median_n_miss",
                                             "members"], rows)
    # median ln(delta_b_n) over members that reach collision n
    by_n: dict[int, list] = {}
    for n, db, *_ in res:
        for k, v in zip(n, db):
            if v > 0:
                by_n.setdefault(int(k), []).append(math.log(v / a_eff))
    out.series["divergence"] = Series(
        ["n", "median_ln_delta_b_over_a_eff", "members"],
        [[k, float(np.median(v)), len(v)] for k, v in sorted(by_n.items())])
    out.series["slopes"] = Series(["member", "seed", "slope"],
                                  [[i, seed + i, s if s is not None else math.nan]
                                   for i, s in enumerate(slopes)])
    out.plots.append(PlotHint("divergence", "n", "median_ln_delta_b_over_a_eff",
                              "ln(delta b_n / a_eff) vs collision number"))
    return out


# --------------------------------------------------------------------------
# wavepacket


DELOCALIZING = ("delocalized", "split", "grazing")


def _wavepacket_member(args):
    config, delta0, wavelength, diffusion, n_max = args
    scene = make_frozen_scene(config)
    pk = RayPacket.gaussian(scene.origin, scene.direction, delta0 * scene.a_eff, wavelength,
                            diffusion)
    wkb = validate_wkb(pk, config)
    log = propagate_packet(pk, scene, n_max)
    return log, wkb


def wavepacket(config, region, params: Params, seed, ensemble) -> Outcome:
    delta0 = params.get("delta0", 1e-6)
    wavelength = params.get("wavelength", 1e-15)
    diffusion = bool(params.get("quantum_diffusion", 1, int))
    n_max = params.get("n_max", 20, int)
    tol = params.get("halt_tolerance", 1.0)
    min_fraction = params.get("halt_fraction", 0.8)
    fd_samples = params.get("fd_samples", 100, int)
    fd_tol = params.get("fd_tolerance", 0.05)
    c = params.get("c", _c_nominal(config))
    a_eff = 2.0 * config.disc_radius

    members = [(config.with_(seed=seed + i), delta0, wavelength, diffusion, n_max)
               for i in range(ensemble)]
    res = ensemble_map(_wavepacket_member, members)
    pred = predict_n_crit(delta0 * a_eff, a_eff, c)
    halts = [log.halt_index if log.halt_reason in DELOCALIZING else None for log, _ in res]
    within = [h is not None and abs(h - pred) <= tol for h in halts]
    frac = float(np.mean(within))
    slopes = []
    for log, _ in res:
        d = log.deltas()
        if len(d) >= 2:
            slopes.append(float(np.mean(np.diff(np.log(d)))))
    wkb_ok = all(ok for _, wkb in res for _, ok, _ in wkb)
    out = Outcome()
    out.metrics.update(
        n_crit_predicted=pred,
        n_crit_raw=n_crit_raw(delta0 * a_eff, a_eff, c),
        median_halt_index=_median([h if h is not None else math.nan for h in halts]),
        halt_fraction_within=frac,
        mean_log_growth=_median(slopes),
        ln_mfp_over_a_eff=math.log(mean_free_path_nominal(config) / a_eff),
        wkb_valid=float(wkb_ok),
    )
    out.verdicts += [
        Verdict.check("halt_fraction_within", frac, ">=", min_fraction),
        Verdict.check("wkb_valid", float(wkb_ok), "==", 1.0),
    ]
    if fd_samples > 0:
        fd = amplification_oracle_check(fd_samples, a_eff, seed)
        out.metrics["fd_max_rel_error"] = max(r[3] for r in fd)
        out.verdicts.append(Verdict.check("fd_max_rel_error", out.metrics["fd_max_rel_error"],
                                          "<=", fd_tol))
        out.series["amplification_check"] = Series(
            ["b_over_a_eff", "r0_over_a_eff", "closed_form", "finite_difference", "rel_error"],
            [[b / a_eff, r0 / a_eff, cf, fdv, err] for b, r0, cf, err, fdv in fd])
    rows = []
    for i, (log, _) in enumerate(res):
        for r in log.rows:
            rows.append([i, r.n, math.log(r.delta / a_eff), r.b, r.disc_id, r.free_path,
                         r.halt_reason])
    out.series["spread"] = Series(["member", "n", "ln_delta_over_a_eff", "b", "disc_id",
                                   "free_path", "halt_reason"], rows)
    out.series["halts"] = Series(["member", "seed", "halt_index", "halt_reason"],
                                 [[i, seed + i, log.halt_index, log.halt_reason]
                                  for i, (log, _) in enumerate(res)])
    out.plots.append(PlotHint("spread", "n", "ln_delta_over_a_eff",
                              "ln(Delta_n / a_eff) vs collision number", group="member"))
    return out


def amplification_oracle_check(n: int, a_eff: float, seed: int):
    """Closed form vs two-ray finite difference at random (b, r0).

    Returns rows ``(b, r0, closed, rel_error, finite_difference)``.
    """
    rng = np.random.default_rng([seed, 20])
    rows = []
    for _ in range(n):
        b = rng.uniform(-0.9, 0.9) * a_eff
        r0 = rng.uniform(20.0, 200.0) * a_eff
        cf = amplification_factor(b, r0, a_eff)
        fd = ray_amplification(b, r0, a_eff)
        rows.append((b, r0, cf, abs(fd - cf) / cf, fd))
    return rows


# --------------------------------------------------------------------------
# phaseshift


def bessel_grid(n_points: int, seed: int, m_hi: int = 200, x_lo: float = 0.01,
                x_hi: float = 500.0):
    """Deterministic (m, x) grid: orders uniform on 0..m_hi, x log-uniform."""
    rng = np.random.default_rng([seed, 14])
    ms = rng.integers(0, m_hi + 1, size=n_points)
    xs = np.exp(rng.uniform(math.log(x_lo), math.log(x_hi), size=n_points))
    return [(int(m), float(x)) for m, x in zip(ms, xs)]


def bessel_errors(grid):
    """Scaled errors |f - ref| / max(1, |ref|) for J and Y, and the Wronskian residual."""
    rows = []
    for m, x in grid:
        j = bessel_J_all(m + 1, x)
        y = bessel_Y_all(m + 1, x)
        jr, yr = bessel_reference(m, x)
        ej = abs(j[m] - jr) / max(1.0, abs(jr))
        ey = abs(y[m] - yr) / max(1.0, abs(yr)) if math.isfinite(yr) else 0.0
        w = 2.0 / (math.pi * x)
        if math.isfinite(y[m + 1]):
            ew = abs(j[m + 1] * y[m] - j[m] * y[m + 1] - w) / w
        else:
            ew = math.nan  # product under/overflows in double precision
        rows.append([m, x, ej, ey, ew])
    return rows


def phaseshift(config, region, params: Params, seed, ensemble) -> Outcome:
    ka = params.get("ka", 200.0)
    n_grid = params.get("grid_points", 50, int)
    tol = params.get("bessel_tol", 1e-10)
    tail_tol = params.get("tail_tol", 1e-8)
    b_values = params.floats("b_over_a", [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7])
    defl_tol = params.get("deflection_tol", 0.05)
    a = config.disc_radius
    k = ka / a

    rows = bessel_errors(bessel_grid(n_grid, seed))
    ew = [r[4] for r in rows if not math.isnan(r[4])]
    cut = ka + 10 * ka ** (1 / 3) + 10
    table = PhaseShiftTable.compute(ka, default_m_max(ka) + 20)
    tail = float(np.abs(table.deltas[int(math.floor(cut)) + 1:]).max())
    defl = [semiclassical_deflection_check(table, k, b * a) for b in b_values]
    xs = total_cross_section(table, k)
    out = Outcome()
    out.metrics.update(
        bessel_J_max_error=max(r[2] for r in rows),
        bessel_Y_max_error=max(r[3] for r in rows),
        wronskian_max_error=max(ew) if ew else math.nan,
        wronskian_points=len(ew),
        tail_max_abs_delta=tail,
        deflection_max_rel_error=max(d[2] for d in defl),
        cross_section_over_2a=xs.sigma_total / (2 * a),
        ka=ka,
    )
    out.verdicts += [
        Verdict.check("bessel_J_max_error", out.metrics["bessel_J_max_error"], "<=", tol),
        Verdict.check("bessel_Y_max_error", out.metrics["bessel_Y_max_error"], "<=", tol),
        Verdict.check("wronskian_max_error", out.metrics["wronskian_max_error"], "<=", tol),
        Verdict.check("tail_max_abs_delta", tail, "<=", tail_tol),
        Verdict.check("deflection_max_rel_error", out.metrics["deflection_max_rel_error"], "<=",
                      defl_tol),
    ]
    out.series["bessel_grid"] = Series(["m", "x", "err_J", "err_Y", "err_wronskian"], rows)
    out.series["phase_shifts"] = Series(["m", "ka", "delta_m"],
                                        [[m, ka, float(d)] for m, d in enumerate(table.deltas)])
    out.series["deflection"] = Series(["b_over_a", "quantum", "classical", "rel_error"],
                                      [[b, *d] for b, d in zip(b_values, defl)])
    out.plots += [
        PlotHint("phase_shifts", "m", "delta_m", f"delta_m vs m at ka = {ka:g}"),
        PlotHint("deflection", "b_over_a", "quantum", "deflection angle vs b/a"),
    ]
    return out


# --------------------------------------------------------------------------
# overlap


def overlap(config, region, params: Params, seed, ensemble) -> Outcome:
    n = params.get("n", 100, int)
    delta = params.get("delta", 0.01)
    draws = params.get("draws", 1000, int)
    n_hi = params.get("draw_n_max", 100, int)
    d_hi = params.get("draw_delta_max", 0.01)
    tol = params.get("rel_tol", 0.01)
    exact, approx = overlap_from_deltas(np.full(n, delta))
    rng = np.random.default_rng([seed, 12])
    rows = []
    for i in range(draws):
        m = int(rng.integers(1, n_hi + 1))
        d = rng.uniform(0.0, d_hi, size=m)
        ex, ap = overlap_from_deltas(d)
        rows.append([i, m, float(d.sum()), ex, ap, abs(ex - ap) / ap])
    out = Outcome()
    out.metrics.update(
        uniform_case_exact=exact,
        uniform_case_rel_error_vs_e_minus_1=abs(exact - math.exp(-1)) / math.exp(-1),
        draws_max_rel_error=max(r[5] for r in rows),
    )
    out.verdicts += [
        Verdict.check("uniform_case_rel_error_vs_e_minus_1",
                      out.metrics["uniform_case_rel_error_vs_e_minus_1"], "<=", tol),
        Verdict.check("draws_max_rel_error", out.metrics["draws_max_rel_error"], "<=", tol),
    ]
    out.series["draws"] = Series(["draw", "n", "sum_delta", "exact", "approx", "rel_error"], rows)
    out.plots.append(PlotHint("draws", "sum_delta", "rel_error",
                              "product vs exponential: relative gap"))
    return out


# --------------------------------------------------------------------------
# diffract


def _uniform_member(args):
    n, R, seed, i, q, n_dir, shell, n_shell = args
    pos = uniform_positions(n, R, np.random.default_rng([seed, 99, i]))
    return structure_factor(pos, q, n_dir, shell=shell, n_shell=n_shell).s


def diffract(config, region, params: Params, seed, ensemble) -> Outcome:
    t_eq = params.get("equilibrate_time", 60.0)
    n_ref = params.get("reference_samples", 400, int)
    n_dir = params.get("directions", 64, int)
    shell = params.get("shell", 0.3)
    n_shell = params.get("shell_points", 13, int)
    n_q = params.get("q_points", 64, int)
    threshold = params.get("z_threshold", Z_THRESHOLD)
    min_fraction = params.get("uniform_pass_fraction", 0.95)
    R_eff = config.R - config.disc_radius
    q = probe_window(config.R, config.mean_separation, n_q)

    s0 = sample_initial_configuration(config.with_(seed=seed), region)
    s1, _ = advance(s0, t_eq)
    snap = structure_factor(s1.positions, q, n_dir, shell=shell, n_shell=n_shell)
    ref = smeared_reference(config.n_discs, R_eff, q, n_ref, seed, n_dir, shell, n_shell)
    verdict, zmax = classify_snapshot(snap, ref, threshold)
    members = [(config.n_discs, R_eff, seed, i, q, n_dir, shell, n_shell) for i in range(ensemble)]
    curves = ensemble_map(_uniform_member, members)
    zs = []
    for s in curves:
        zs.append(classify_snapshot(type(snap)(q, s), ref, threshold)[1])
    passed = float(np.mean([z < threshold for z in zs]))
    out = Outcome()
    out.metrics.update(
        snapshot_max_z=zmax,
        uniform_indistinguishable_fraction=passed,
        uniform_median_max_z=float(np.median(zs)),
        packing_fraction=config.packing_fraction,
    )
    out.verdicts += [
        Verdict.check("snapshot_max_z", zmax, ">=", threshold),
        Verdict.check("uniform_indistinguishable_fraction", passed, ">=", min_fraction),
    ]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.abs(snap.s - ref.s) / ref.sigma
    out.series["reference"] = Series(["q", "S_mean", "S_sigma"],
                                     [[a, b, c] for a, b, c in zip(q, ref.s, ref.sigma)])
    out.series["snapshot"] = Series(["q", "S", "z"], [[a, b, c] for a, b, c in zip(q, snap.s, z)])
    out.series["uniform_z"] = Series(["member", "max_z"], [[i, v] for i, v in enumerate(zs)])
    out.plots.append(PlotHint("snapshot", "q", "z", "snapshot z-score vs |q|"))
    return out


# --------------------------------------------------------------------------
# expansion


def _expansion_member(args):
    config, T, fraction, n_samples = args
    r = run_expansion(config, T, fraction, n_samples)
    return r.mean_collisions, r.mean_free_path, r.times, r.outer_fraction, r.R


def expansion(config, region, params: Params, seed, ensemble) -> Outcome:
    T = params.get("T", 10.0 * config.R / config.speed)
    fraction = params.get("fraction", 0.5)
    n_samples = params.get("samples", 50, int)
    members = [(config.with_(seed=seed + i), T, fraction, n_samples) for i in range(ensemble)]
    res = ensemble_map(_expansion_member, members)
    k_bar = float(np.mean([r[0] for r in res]))
    mfps = [r[1] for r in res if r[1]]
    mfp = float(np.mean(mfps)) if mfps else math.nan
    R = config.R
    nominal = mean_free_path_nominal(config)
    out = Outcome()
    out.metrics.update(
        mean_collisions=k_bar,
        mean_free_path=mfp,
        mean_free_path_nominal=nominal,
        lower_bound=R / mfp,
        upper_bound=(R / mfp) ** 2,
        lower_bound_nominal=R / nominal,
        upper_bound_nominal=(R / nominal) ** 2,
        outer_fraction_final=float(np.mean([r[3][-1] for r in res])),
        T=T,
    )
    out.verdicts.append(Verdict.check("mean_collisions", k_bar, "in",
                                      [R / mfp, (R / mfp) ** 2]))
    times = res[0][2]
    occ = np.mean([r[3] for r in res], axis=0)
    out.series["occupancy"] = Series(["time", "outer_fraction"],
                                     [[t, f] for t, f in zip(times, occ)])
    out.plots.append(PlotHint("occupancy", "time", "outer_fraction",
                              "fraction of discs beyond the partition"))
    return out


# --------------------------------------------------------------------------
# precision


def precision(config, region, params: Params, seed, ensemble) -> Outcome:
    k = params.get("k", 100, int)
    c = params.get("c", 100.0)
    expected = params.get("expected", -200.0)
    val = required_initial_precision(k, c)
    out = Outcome()
    out.metrics.update(log10_precision=val, k=k, c=c)
    out.verdicts.append(Verdict.check("log10_precision", val, "==", expected))
    out.series["precision"] = Series(["k", "log10_delta_b0_over_a"],
                                     [[i, required_initial_precision(i, c)] for i in range(k + 1)])
    out.plots.append(PlotHint("precision", "k", "log10_delta_b0_over_a",
                              "required log10 initial precision vs collisions"))
    return out


REGISTRY = {name: globals()[name] for name in EXPERIMENTS}
