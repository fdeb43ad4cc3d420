"""Event-driven hard-disc dynamics in a circular reflecting enclosure.

Each disc carries an anchor (position and time of its last velocity change).
Collision times are pure functions of the two anchors involved, so the same
event sequence results whether a run is advanced in one call or several.
Stale queue entries are detected with per-disc event counters.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from hardlab.model_core import SystemState

WALL = -1
ROOT_EPS = 1e-12  # reject roots closer than this (in a/|v|) to the prediction origin
ABORT_PENETRATION = 1e-6  # in units of a


class PenetrationError(RuntimeError):
    """Two discs (or a disc and the wall) overlap beyond tolerance."""


class ContactError(ValueError):
    """A collision was resolved for a pair that is not in contact."""


@dataclass(frozen=True)
class CollisionRecord:
    time: float
    id_a: int
    id_b: int  # WALL for the enclosure
    impact_parameter: float
    free_path: float  # distance disc id_a flew since its previous disc-disc collision
    normal: tuple[float, float]
    free_path_b: float = math.nan

    @property
    def is_wall(self) -> bool:
        return self.id_b == WALL


@dataclass
class EventLog:
    n_discs: int
    records: list[CollisionRecord] = field(default_factory=list)

    def __post_init__(self):
        self.disc_counts = np.zeros(self.n_discs, dtype=int)
        self.wall_counts = np.zeros(self.n_discs, dtype=int)

    def append(self, rec: CollisionRecord) -> None:
        self.records.append(rec)
        if rec.is_wall:
            self.wall_counts[rec.id_a] += 1
        else:
            self.disc_counts[rec.id_a] += 1
            self.disc_counts[rec.id_b] += 1

    def __len__(self):
        return len(self.records)

    def disc_disc(self) -> list[CollisionRecord]:
        return [r for r in self.records if not r.is_wall]

    def partner_sequence(self, disc: int) -> list[int]:
        out = []
        for r in self.records:
            if r.id_a == disc:
                out.append(r.id_b)
            elif r.id_b == disc:
                out.append(r.id_a)
        return out

    def times(self) -> np.ndarray:
        return np.array([r.time for r in self.records])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "id_a", "id_b", "bx_impact", "free_path", "nx", "ny"])
            for r in self.records:
                w.writerow(
                    [repr(r.time), r.id_a, r.id_b, repr(r.impact_parameter),
                     repr(r.free_path), repr(r.normal[0]), repr(r.normal[1])]
                )


def _stable_root(b: float, a: float, c: float) -> float | None:
    """Smaller root of a*t**2 + 2*b*t + c = 0 for approaching pairs (b < 0)."""
    if b >= 0.0:
        return None
    disc = b * b - a * c
    if disc < 0.0:
        return None
    return c / (-b + math.sqrt(disc))


def predict_disc_disc(r_a, v_a, r_b, v_b, contact_distance: float) -> float | None:
    """Earliest positive time at which the centres are ``contact_distance`` apart."""
    dx, dy = r_a[0] - r_b[0], r_a[1] - r_b[1]
    ux, uy = v_a[0] - v_b[0], v_a[1] - v_b[1]
    a = ux * ux + uy * uy
    if a == 0.0:
        return None
    b = dx * ux + dy * uy
    c = dx * dx + dy * dy - contact_distance * contact_distance
    t = _stable_root(b, a, c)
    if t is None or t <= ROOT_EPS * contact_distance / 2 / math.sqrt(a):
        return None
    return t


def predict_disc_wall(r, v, R: float, a: float) -> float:
    """Time for a disc centre inside ``|r| <= R - a`` to reach ``R - a``."""
    rw = R - a
    vv = v[0] * v[0] + v[1] * v[1]
    if vv == 0.0:
        return math.inf
    b = r[0] * v[0] + r[1] * v[1]
    c = r[0] * r[0] + r[1] * r[1] - rw * rw
    disc = max(b * b - vv * c, 0.0)
    if b < 0.0:
        t = (-b + math.sqrt(disc)) / vv
    else:
        t = -c / (b + math.sqrt(disc))
    return max(t, 0.0)


def resolve_disc_disc(r_a, v_a, r_b, v_b, contact_distance: float, tol: float | None = None):
    """Equal-mass elastic collision: swap normal velocity components."""
    r_a, v_a, r_b, v_b = (np.asarray(x, dtype=float) for x in (r_a, v_a, r_b, v_b))
    d = r_a - r_b
    dist = math.hypot(d[0], d[1])
    tol = 1e-9 * contact_distance if tol is None else tol
    if abs(dist - contact_distance) > tol:
        raise ContactError(f"not in contact: distance {dist} vs {contact_distance}")
    n = d / dist
    k = (v_a - v_b) @ n
    return v_a - k * n, v_b + k * n


def resolve_disc_wall(r, v, R: float, a: float, tol: float | None = None):
    """Specular reflection about the inward radial normal."""
    r, v = np.asarray(r, dtype=float), np.asarray(v, dtype=float)
    rho = math.hypot(r[0], r[1])
    tol = 1e-9 * a if tol is None else tol
    if abs(rho - (R - a)) > tol:
        raise ContactError(f"not at the wall: |r| = {rho}, expected {R - a}")
    n = r / rho
    return v - 2.0 * (v @ n) * n


def reverse_velocities(state: SystemState, exclude=()) -> SystemState:
    """Negate every velocity (except discs in ``exclude``) at ``state.time``."""
    v = -state.velocities
    exclude = list(exclude)
    if exclude:
        v[exclude] = state.velocities[exclude]
    return SystemState.at(
        state.time, state.positions, v, radius=state.radius,
        enclosure_radius=state.enclosure_radius,
    )


class _Engine:
    def __init__(self, state: SystemState):
        self.n = state.n
        self.a = state.radius
        self.sigma = 2.0 * state.radius
        self.rw = state.enclosure_radius - state.radius
        self.ap = state.anchor_pos.copy()
        self.at = state.anchor_time.copy()
        self.v = state.velocities.copy()
        self.stamp = np.zeros(self.n, dtype=np.int64)
        self.path = np.zeros(self.n)  # distance since last disc-disc collision
        self.now = state.time
        self.queue: list = []

    def scan(self, i: int) -> None:
        """Push disc i's earliest future event."""
        ap, at, v = self.ap, self.at, self.v
        best_t, best_j = math.inf, WALL
        if self.n > 1:
            t_ref = np.maximum(at, at[i])
            ri = ap[i] + v[i] * (t_ref - at[i])[:, None]
            rj = ap + v * (t_ref - at)[:, None]
            dx = ri[:, 0] - rj[:, 0]
            dy = ri[:, 1] - rj[:, 1]
            ux = v[i, 0] - v[:, 0]
            uy = v[i, 1] - v[:, 1]
            b = dx * ux + dy * uy
            aa = ux * ux + uy * uy
            c = dx * dx + dy * dy - self.sigma * self.sigma
            disc = b * b - aa * c
            ok = (b < 0.0) & (disc >= 0.0)
            ok[i] = False
            if ok.any():
                idx = np.nonzero(ok)[0]
                tau = c[idx] / (-b[idx] + np.sqrt(disc[idx]))
                t = t_ref[idx] + tau
                good = (tau > ROOT_EPS * self.a / np.sqrt(aa[idx])) & (t >= self.now)
                if good.any():
                    idx, t = idx[good], t[good]
                    k = int(np.argmin(t))
                    best_t, best_j = float(t[k]), int(idx[k])
        if math.isfinite(self.rw):
            tw = at[i] + predict_disc_wall(ap[i], v[i], self.rw + self.a, self.a)
            if tw < best_t:
                best_t, best_j = tw, WALL
        if math.isfinite(best_t):
            sj = self.stamp[best_j] if best_j != WALL else 0
            lo, hi = (i, best_j) if best_j == WALL or i < best_j else (best_j, i)
            heapq.heappush(self.queue, (best_t, lo, hi, i, best_j, self.stamp[i], sj))

    def position(self, i: int, t: float) -> np.ndarray:
        return self.ap[i] + self.v[i] * (t - self.at[i])

    def execute_pair(self, t, i, j, on_event):
        if i > j:
            i, j = j, i
        ri, rj = self.position(i, t), self.position(j, t)
        d = ri - rj
        dist = math.hypot(d[0], d[1])
        if dist < self.sigma - ABORT_PENETRATION * self.a:
            raise PenetrationError(
                f"discs {i},{j} overlap by {self.sigma - dist:.3e} at t={t!r}"
            )
        n = d / dist
        vi, vj = self.v[i].copy(), self.v[j].copy()
        u = vi - vj
        speed = math.hypot(u[0], u[1])
        bimp = (d[0] * u[1] - d[1] * u[0]) / speed if speed > 0 else 0.0
        k = u @ n
        new_i, new_j = vi - k * n, vj + k * n
        fp_i = self.path[i] + math.hypot(vi[0], vi[1]) * (t - self.at[i])
        fp_j = self.path[j] + math.hypot(vj[0], vj[1]) * (t - self.at[j])
        self.ap[i], self.ap[j] = ri, rj
        self.at[i] = self.at[j] = t
        self.v[i], self.v[j] = new_i, new_j
        self.path[i] = self.path[j] = 0.0
        self.stamp[i] += 1
        self.stamp[j] += 1
        rec = CollisionRecord(t, i, j, float(bimp), float(fp_i), (float(n[0]), float(n[1])),
                              float(fp_j))
        if on_event is not None:
            on_event(rec, np.array([vi, vj]), np.array([new_i, new_j]))
        return rec

    def execute_wall(self, t, i, on_event):
        r = self.position(i, t)
        rho = math.hypot(r[0], r[1])
        if rho > self.rw + ABORT_PENETRATION * self.a:
            raise PenetrationError(f"disc {i} beyond wall by {rho - self.rw:.3e} at t={t!r}")
        n = r / rho
        v = self.v[i].copy()
        new = v - 2.0 * (v @ n) * n
        fp = math.hypot(v[0], v[1]) * (t - self.at[i])
        self.path[i] += fp
        self.ap[i] = r
        self.at[i] = t
        self.v[i] = new
        self.stamp[i] += 1
        tang = n[0] * v[1] - n[1] * v[0]
        rec = CollisionRecord(t, i, WALL, float(tang), float(fp), (float(n[0]), float(n[1])))
        if on_event is not None:
            on_event(rec, np.array([v]), np.array([new]))
        return rec


def advance(
    state: SystemState,
    t_end: float,
    on_event: Callable | None = None,
    max_events: int | None = None,
) -> tuple[SystemState, EventLog]:
    """Evolve ``state`` through every collision up to and including ``t_end``.

    ``on_event(record, v_before, v_after)`` is called after each collision.
    If ``max_events`` is given, evolution stops right after that many events
    and the returned state sits at the last event time.
    """
    if t_end < state.time:
        raise ValueError("t_end precedes state time")
    tol = ABORT_PENETRATION * state.radius
    if state.min_pair_distance() < 2 * state.radius - tol:
        raise PenetrationError(f"initial state overlaps: min distance {state.min_pair_distance()!r}")
    if state.max_radius() > state.enclosure_radius - state.radius + tol:
        raise PenetrationError(f"initial state outside the wall: {state.max_radius()!r}")
    eng = _Engine(state)
    log = EventLog(state.n)
    for i in range(eng.n):
        eng.scan(i)
    stop_time = t_end
    q = eng.queue
    while q:
        t, _, _, owner, partner, s_own, s_part = q[0]
        if t > t_end:
            break
        heapq.heappop(q)
        if eng.stamp[owner] != s_own:
            continue
        if partner != WALL and eng.stamp[partner] != s_part:
            eng.scan(owner)
            continue
        eng.now = t
        if partner == WALL:
            rec = eng.execute_wall(t, owner, on_event)
            eng.scan(owner)
        else:
            rec = eng.execute_pair(t, owner, partner, on_event)
            eng.scan(owner)
            eng.scan(partner)
        log.append(rec)
        if max_events is not None and len(log) >= max_events:
            stop_time = t
            break
    out = SystemState(
        time=float(stop_time),
        velocities=eng.v,
        anchor_pos=eng.ap,
        anchor_time=eng.at,
        radius=state.radius,
        enclosure_radius=state.enclosure_radius,
    )
    return out, log


def kinetic_energy(velocities: np.ndarray, mass: float = 1.0) -> float:
    return 0.5 * mass * float(np.sum(velocities**2))
