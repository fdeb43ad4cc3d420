"""Edge-ray tracer for a narrow Gaussian packet among frozen scatterers.

A packet is a central ray plus two edge rays offset by +/- width. Every ray
reflects specularly. The packet width (half the edge-ray separation across
the central ray) then grows by roughly 2 r0 / sqrt(a_eff**2 - b**2) per
collision until it reaches the scatterer size.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hardlab.chaos import FrozenScene, first_hit, reflect
from hardlab.model_core import SystemConfig, mean_free_path_nominal


class GrazingBreakdown(ValueError):
    """Packet straddles the rim of a scatterer, or b is too close to a_eff."""


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / math.hypot(v[0], v[1])


def _perp(d):
    return np.array([-d[1], d[0]])


@dataclass
class RayPacket:
    origin: np.ndarray
    direction: np.ndarray
    edge_origins: np.ndarray  # (2, 2)
    edge_directions: np.ndarray  # (2, 2)
    wavelength: float
    quantum_diffusion: bool = False

    @classmethod
    def gaussian(cls, origin, direction, width, wavelength, quantum_diffusion=False):
        if width <= 0:
            raise ValueError("width must be positive")
        d = _unit(direction)
        o = np.asarray(origin, dtype=float)
        p = _perp(d)
        edges = np.array([o + width * p, o - width * p])
        return cls(o, d, edges, np.array([d, d]), wavelength, quantum_diffusion)

    @property
    def p0(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def width(self) -> float:
        return transverse_halfwidth(self.origin, self.direction, self.edge_origins,
                                    self.edge_directions)

    @property
    def angular_spread(self) -> float:
        return edge_angle(self.edge_directions)


def edge_angle(dirs) -> float:
    c = float(np.clip(dirs[0] @ dirs[1], -1.0, 1.0))
    s = dirs[0][0] * dirs[1][1] - dirs[0][1] * dirs[1][0]
    return abs(math.atan2(s, c))


def transverse_halfwidth(point, direction, edge_origins, edge_dirs) -> float:
    """Half the distance between the edge-ray lines, measured on the line
    through ``point`` perpendicular to ``direction``."""
    p = _perp(direction)
    xs = []
    for o, d in zip(edge_origins, edge_dirs):
        # intersect o + s d with point + u p
        den = d[0] * p[1] - d[1] * p[0]
        w = point - o
        if abs(den) < 1e-300:
            raise GrazingBreakdown("edge ray parallel to the measuring line")
        s = (w[0] * p[1] - w[1] * p[0]) / den
        q = o + s * d
        xs.append((q - point) @ p)
    return abs(xs[0] - xs[1]) / 2.0


def validate_wkb(packet: RayPacket, config: SystemConfig, strictness: float = 0.1):
    """Return ``[(name, satisfied, margin)]``; each margin must be <= strictness."""
    width = packet.width
    a = config.disc_radius
    mfp = mean_free_path_nominal(config)
    checks = [
        ("wavelength<<width", packet.wavelength / width),
        ("width<<radius", width / a),
        ("diffusion<<width^2", (mfp / packet.p0) / width**2),
    ]
    return [(name, margin <= strictness, margin) for name, margin in checks]


def reflect_ray_off_disc(origin, direction, center, a_eff):
    """Move the ray to its hit on the contact circle and reflect it.

    Returns ``(point, new_direction)`` or ``None`` on a miss.
    """
    o = np.asarray(origin, dtype=float)
    d = _unit(direction)
    s, k = first_hit(np.asarray(center, dtype=float).reshape(1, 2), a_eff, o, d)
    if k < 0:
        return None
    p = o + s * d
    return p, reflect(p, d, np.asarray(center, dtype=float))


def collision_entry_geometry(b: float, width: float, a_eff: float):
    """Angular location arcsin(b/a_eff) and angular width width/a_eff on the rim."""
    if abs(b) + width >= a_eff:
        raise GrazingBreakdown(f"packet straddles the rim: |b|+width = {abs(b) + width}")
    return math.asin(b / a_eff), width / a_eff


def amplification_factor(b: float, r0: float, a_eff: float, grazing: float = 0.95) -> float:
    """Width amplification 2 r0 / sqrt(a_eff**2 - b**2) over one collision and flight r0."""
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    if abs(b) > grazing * a_eff:
        raise GrazingBreakdown(f"|b| = {abs(b)} beyond {grazing} a_eff")
    return 2.0 * r0 / math.sqrt(a_eff * a_eff - b * b)


def ray_amplification(b: float, r0: float, a_eff: float, db: float = 1e-6) -> float:
    """Two-ray finite-difference amplification.

    Rays at impact parameters b +/- db*a_eff hit a disc at the origin; their
    separation is measured a distance r0 past the central ray's hit, across
    the central reflected ray, and divided by the initial separation.
    """
    start = -10.0 * a_eff
    center = np.zeros(2)
    h = db * a_eff
    p, d = reflect_ray_off_disc((start, b), (1.0, 0.0), center, a_eff)
    q = p + r0 * d
    edges = [reflect_ray_off_disc((start, b + s * h), (1.0, 0.0), center, a_eff)
             for s in (1, -1)]
    half = transverse_halfwidth(q, d, [e[0] for e in edges], [e[1] for e in edges])
    return half / h


# --------------------------------------------------------------------------
# propagation


@dataclass
class SpreadRow:
    n: int
    delta: float
    dphi: float
    b: float
    disc_id: int
    free_path: float
    halt_reason: str = ""


@dataclass
class SpreadLog:
    rows: list[SpreadRow] = field(default_factory=list)
    halt_reason: str = ""
    halt_index: int | None = None

    def deltas(self) -> np.ndarray:
        return np.array([r.delta for r in self.rows])

    def amplification(self) -> np.ndarray:
        d = self.deltas()
        return d[1:] / d[:-1]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "delta", "dphi", "b", "disc_id", "free_path", "halt_reason"])
            for r in self.rows:
                w.writerow([r.n, repr(r.delta), repr(r.dphi), repr(r.b), r.disc_id,
                            repr(r.free_path), r.halt_reason])


def _diffuse(edge_origins, centre, direction, width, extra2):
    """Push edge rays outwards so the half-width becomes sqrt(width^2 + extra2)."""
    if width <= 0:
        return edge_origins
    scale = math.sqrt(width * width + extra2) / width
    p = _perp(direction)
    out = []
    for o in edge_origins:
        off = (o - centre) @ p
        out.append(o + (scale - 1.0) * off * p)
    return np.array(out)


def propagate_packet(packet: RayPacket, scene: FrozenScene, n_max: int,
                     max_path: float | None = None) -> SpreadLog:
    """Trace the packet through up to ``n_max`` reflections.

    Row ``n`` holds the state on arrival at the next scatterer after ``n``
    reflections: half-width, edge-ray angle, impact parameter, disc hit and
    the flight length. Halts on delocalisation (width >= a_eff), grazing,
    packet splitting (an edge ray hits another disc or none), escape or
    ``n_max``. ``max_path`` bounds the flight when nothing is hit.
    """
    a_eff = scene.a_eff
    o, d = packet.origin.copy(), packet.direction.copy()
    eo, ed = packet.edge_origins.copy(), packet.edge_directions.copy()
    log = SpreadLog()
    last = -1
    max_path = 10.0 * float(np.ptp(scene.centers)) if max_path is None and len(scene.centers) else max_path
    for n in range(n_max + 1):
        s, k = first_hit(scene.centers, a_eff, o, d, skip=last)
        flight = s if k >= 0 else (max_path or 0.0)
        p = o + flight * d
        width_before = transverse_halfwidth(p, d, eo, ed)
        if packet.quantum_diffusion:
            # free spreading over the flight, dDelta^2 = t/M = path/p0 with hbar = 1
            eo = _diffuse(eo, p, d, width_before, flight / packet.p0)
        width = transverse_halfwidth(p, d, eo, ed)
        dphi = edge_angle(ed)
        if k < 0:
            log.rows.append(SpreadRow(n, width, dphi, math.nan, -1, flight, "escaped"))
            log.halt_reason, log.halt_index = "escaped", n
            return log
        c = scene.centers[k]
        b = d[0] * (c[1] - o[1]) - d[1] * (c[0] - o[0])
        row = SpreadRow(n, width, dphi, float(b), k, flight)
        log.rows.append(row)
        reason = ""
        if width >= a_eff:
            reason = "delocalized"
        else:
            try:
                collision_entry_geometry(b, width, a_eff)
            except GrazingBreakdown:
                reason = "grazing"
        if not reason:
            new_eo, new_ed = [], []
            for eo_i, ed_i in zip(eo, ed):
                se, ke = first_hit(scene.centers, a_eff, eo_i, ed_i, skip=last)
                if ke != k:
                    reason = "split"
                    break
                q = eo_i + se * ed_i
                new_eo.append(q)
                new_ed.append(reflect(q, ed_i, c))
        if not reason and n == n_max:
            reason = "n_max"
        if reason:
            row.halt_reason = reason
            log.halt_reason, log.halt_index = reason, n
            return log
        eo, ed = np.array(new_eo), np.array(new_ed)
        d = reflect(p, d, c)
        o, last = p, k
    return log


def predict_n_crit(delta0: float, a_eff: float, c: float) -> int:
    """ceil(ln(a_eff/delta0) / ln c): collisions until the packet reaches a_eff."""
    if c <= 1:
        raise ValueError("c must exceed 1")
    if delta0 >= a_eff:
        return 0
    if delta0 <= 0:
        raise ValueError("delta0 must be positive")
    return int(math.ceil(math.log(a_eff / delta0) / math.log(c) - 1e-12))


def n_crit_raw(delta0: float, a_eff: float, c: float) -> float:
    return math.log(a_eff / delta0) / math.log(c)
