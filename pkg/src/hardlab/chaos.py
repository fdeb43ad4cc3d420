"""Chaos experiments: velocity-reversal echoes, divergence, missing partners,
mean free path, expansion and the precision bound.

The frozen-scatterer model (one active point particle among immobile
discs of contact radius 2a) lives here too; the semiclassical tracer reuses
its ray geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hardlab.events import EventLog, advance, reverse_velocities
from hardlab.model_core import SystemConfig, sample_initial_configuration


class InsufficientStatistics(ValueError):
    pass


# --------------------------------------------------------------------------
# velocity reversal


@dataclass
class ReversalReport:
    T_rev: float
    collisions_forward: int
    errors: np.ndarray
    exclude: tuple = ()

    @property
    def max_error(self) -> float:
        return float(self.errors.max())

    @property
    def rms_error(self) -> float:
        return float(np.sqrt(np.mean(self.errors**2)))

    @property
    def collisions_per_disc(self) -> float:
        return 2.0 * self.collisions_forward / len(self.errors)


def run_reversal(config: SystemConfig, T_rev: float, exclude=(), region="full", state=None):
    """Forward to ``T_rev``, reverse all velocities but ``exclude``, run to ``2*T_rev``.

    ``collisions_forward`` counts disc-disc collisions of the forward leg.
    """
    if T_rev <= 0:
        raise ValueError("T_rev must be positive")
    s0 = sample_initial_configuration(config, region) if state is None else state
    try:
        s1, log = advance(s0, s0.time + T_rev)
        s2, _ = advance(reverse_velocities(s1, exclude), s0.time + 2 * T_rev)
    except RuntimeError as exc:
        raise RuntimeError(f"reversal run (seed={config.seed}, T_rev={T_rev}): {exc}") from exc
    err = np.hypot(*(s2.positions - s0.positions).T)
    return ReversalReport(T_rev, len(log.disc_disc()), err, tuple(exclude))


# --------------------------------------------------------------------------
# frozen scatterers


@dataclass
class FrozenScene:
    centers: np.ndarray
    a_eff: float
    origin: np.ndarray
    direction: np.ndarray
    speed: float = 1.0

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float).reshape(-1, 2)
        self.origin = np.asarray(self.origin, dtype=float)
        d = np.asarray(self.direction, dtype=float)
        self.direction = d / math.hypot(d[0], d[1])
        if len(self.centers):
            gap = np.hypot(*(self.centers - self.origin).T).min()
            if gap <= self.a_eff:
                raise ValueError("active particle starts inside a contact circle")

    def scaled(self, s: float) -> "FrozenScene":
        return FrozenScene(self.centers * s, self.a_eff * s, self.origin * s, self.direction,
                           self.speed)


def make_frozen_scene(config: SystemConfig) -> FrozenScene:
    """Freeze all discs but the one nearest the centre, which becomes the tracer."""
    state = sample_initial_configuration(config)
    pos = state.positions
    k = int(np.argmin(np.hypot(pos[:, 0], pos[:, 1])))
    rng = np.random.default_rng([config.seed, 7])
    phi = rng.uniform(0, 2 * math.pi)
    return FrozenScene(
        centers=np.delete(pos, k, axis=0),
        a_eff=2.0 * config.disc_radius,
        origin=pos[k].copy(),
        direction=(math.cos(phi), math.sin(phi)),
        speed=config.speed,
    )


def first_hit(centers, a_eff, origin, direction, skip=-1):
    """Nearest intersection of a ray with any contact circle.

    Returns ``(distance, index)`` or ``(inf, -1)`` if the ray escapes.
    """
    if len(centers) == 0:
        return math.inf, -1
    w = centers - origin
    proj = w[:, 0] * direction[0] + w[:, 1] * direction[1]
    w2 = w[:, 0] ** 2 + w[:, 1] ** 2
    perp2 = w2 - proj * proj
    a2 = a_eff * a_eff
    ok = (proj > 0) & (perp2 < a2)
    if skip >= 0:
        ok[skip] = False
    if not ok.any():
        return math.inf, -1
    idx = np.nonzero(ok)[0]
    s = (w2[idx] - a2) / (proj[idx] + np.sqrt(a2 - perp2[idx]))
    k = int(np.argmin(s))
    return float(s[k]), int(idx[k])


def reflect(point, direction, center):
    n = point - center
    n = n / math.hypot(n[0], n[1])
    return direction - 2.0 * (direction @ n) * n


@dataclass
class Hit:
    path: float  # cumulative path length at the hit
    disc: int
    point: np.ndarray
    impact: float  # signed impact parameter of the incoming ray
    d_in: np.ndarray
    d_out: np.ndarray


def trace(scene: FrozenScene, origin, direction, n_max: int) -> list[Hit]:
    """Follow a point particle through up to ``n_max`` specular reflections."""
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    hits: list[Hit] = []
    total, last = 0.0, -1
    for _ in range(n_max):
        s, k = first_hit(scene.centers, scene.a_eff, o, d, skip=last)
        if k < 0:
            break
        p = o + s * d
        c = scene.centers[k]
        impact = d[0] * (c[1] - o[1]) - d[1] * (c[0] - o[0])
        d_out = reflect(p, d, c)
        total += s
        hits.append(Hit(total, k, p, float(impact), d, d_out))
        o, d, last = p, d_out, k
    return hits


# --------------------------------------------------------------------------
# divergence and missing partners


@dataclass
class DivergenceSeries:
    n: np.ndarray
    delta_b: np.ndarray
    slope: float | None
    ratios: np.ndarray
    n_miss: int | None = None
    partners_ref: list = field(default_factory=list)
    partners_pert: list = field(default_factory=list)


def _fit_slope(n, db, cap):
    keep = (db > 0) & (db < cap)
    if keep.sum() < 2:
        return None
    return float(np.polyfit(n[keep], np.log(db[keep]), 1)[0])


def measure_divergence(scene: FrozenScene, delta_b0: float, n_max: int,
                       saturation: float = 0.1) -> DivergenceSeries:
    """Amplification of a transverse offset ``delta_b0`` collision by collision.

    ``delta_b[n-1]`` is the impact-parameter difference at the n-th collision,
    taken while both trajectories still share the same partner sequence.
    The log-slope is fitted where ``delta_b < saturation * a_eff``.
    """
    d = scene.direction
    perp = np.array([-d[1], d[0]])
    ref = trace(scene, scene.origin, d, n_max)
    pert = trace(scene, scene.origin + delta_b0 * perp, d, n_max)
    pr = [h.disc for h in ref]
    pp = [h.disc for h in pert]
    n_miss = detect_missing_partner(pr, pp)
    m = min(len(ref), len(pert)) if n_miss is None else n_miss - 1
    n = np.arange(1, m + 1)
    db = np.array([abs(pert[i].impact - ref[i].impact) for i in range(m)])
    cap = saturation * scene.a_eff
    pre = db < cap
    ratios = []
    for i in range(m - 1):
        if pre[i] and pre[i + 1] and db[i] > 0:
            ratios.append(db[i + 1] / db[i])
    slope = None
    if n_miss is None or n_miss > 3:
        slope = _fit_slope(n.astype(float), db, cap)
    return DivergenceSeries(n, db, slope, np.array(ratios), n_miss, pr, pp)


def detect_missing_partner(ref, pert) -> int | None:
    """First 1-based collision index where the partner sequences differ.

    Accepts ``EventLog`` objects (partner ids of disc 0 are compared; for
    multi-disc logs the full (id_a, id_b) sequence is used) or plain
    sequences of partner ids. A trajectory that runs out of collisions
    while the other continues does not count as a miss.
    """
    if isinstance(ref, EventLog):
        ref = [(r.id_a, r.id_b) for r in ref.records]
    if isinstance(pert, EventLog):
        pert = [(r.id_a, r.id_b) for r in pert.records]
    for i, (x, y) in enumerate(zip(ref, pert)):
        if x != y:
            return i + 1
    return None


# --------------------------------------------------------------------------
# mean free path, expansion, precision


def measure_mean_free_path(log: EventLog, min_records: int = 100) -> float:
    """Mean flight length between disc-disc collisions, over both partners."""
    recs = log.disc_disc()
    if len(recs) < min_records:
        raise InsufficientStatistics(f"only {len(recs)} disc-disc records (< {min_records})")
    paths = [r.free_path for r in recs]
    paths += [r.free_path_b for r in recs if not math.isnan(r.free_path_b)]
    return float(np.mean(paths))


@dataclass
class ExpansionResult:
    T: float
    mean_collisions: float
    mean_free_path: float | None
    times: np.ndarray
    outer_fraction: np.ndarray
    log: EventLog

    @property
    def bounds(self):
        if not self.mean_free_path:
            return (math.nan, math.nan)
        return self.R / self.mean_free_path, (self.R / self.mean_free_path) ** 2

    R: float = math.nan


def run_expansion(config: SystemConfig, T: float | None = None, fraction: float = 0.5,
                  n_samples: int = 50) -> ExpansionResult:
    """Release discs packed inside ``fraction*R`` and follow them to ``T``.

    ``T`` defaults to ``10 R / v``. Occupancy of the annulus beyond
    ``fraction*R`` is sampled on ``n_samples`` evenly spaced times.
    """
    R = config.R
    T = 10.0 * R / config.speed if T is None else T
    state = sample_initial_configuration(config, ("inner-circle", fraction))
    if state.max_radius() > fraction * R - config.disc_radius + 1e-12:
        raise AssertionError("initial discs outside the inner circle")
    times = np.linspace(0.0, T, n_samples + 1)
    frac = [0.0]
    merged = EventLog(config.n_discs)
    s = state
    for t in times[1:]:
        s, log = advance(s, float(t))
        for r in log.records:
            merged.append(r)
        frac.append(float(np.mean(np.hypot(*s.positions.T) > fraction * R)))
    mean_k = float(merged.disc_counts.mean())
    try:
        mfp = measure_mean_free_path(merged)
    except InsufficientStatistics:
        mfp = None
    return ExpansionResult(T, mean_k, mfp, times, np.array(frac), merged, R=R)


def required_initial_precision(k: int, c: float) -> float:
    """log10(delta_b0 / a) needed so that c**k * delta_b0 stays below a."""
    if k < 0 or c <= 1:
        raise ValueError("need k >= 0 and c > 1")
    return -k * math.log10(c)
