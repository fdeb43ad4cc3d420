"""Domain types, units, configuration and initial-state sampling.

Units: hbar = 1, disc mass M = 1 and disc radius a = 1 unless configured
otherwise. Every other length is naturally read as a multiple of ``a``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

MAX_ATTEMPTS_PER_DISC = 1_000_000
PENETRATION_EPS = 1e-9  # in units of the disc radius


class ConfigError(ValueError):
    """Raised for invalid configurations or unparseable config files."""


class PlacementError(RuntimeError):
    """Raised when rejection sampling cannot place every disc."""

    def __init__(self, message: str, achieved: int):
        super().__init__(message)
        self.achieved = achieved


class Vec2(NamedTuple):
    x: float
    y: float

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)


def de_broglie(mass: float, speed: float) -> float:
    """de Broglie wavelength 2*pi/(M*|v|) with hbar = 1."""
    if speed == 0:
        raise ValueError("wavelength undefined for zero speed")
    return 2.0 * math.pi / (mass * abs(speed))


@dataclass(frozen=True)
class SystemConfig:
    n_discs: int
    disc_radius: float = 1.0
    mean_separation: float = 10.0
    enclosure_radius: float | None = None
    disc_mass: float = 1.0
    seed: int = 0
    placement: str = "poisson-rejection"
    speed: float = 1.0
    velocity_dist: str = "fixed"
    radius_factor: float = 0.5

    def __post_init__(self):
        if self.enclosure_radius is None:
            object.__setattr__(
                self, "enclosure_radius", math.sqrt(self.n_discs) * self.mean_separation
            )
        self.validate()

    @property
    def R(self) -> float:
        return float(self.enclosure_radius)

    @property
    def packing_fraction(self) -> float:
        return self.n_discs * self.disc_radius**2 / self.R**2

    def validate(self) -> None:
        a, l = self.disc_radius, self.mean_separation
        if self.n_discs < 1:
            raise ConfigError("n_discs must be >= 1")
        if a <= 0 or l <= 0:
            raise ConfigError("disc_radius and mean_separation must be positive")
        if not a < l / 2:
            raise ConfigError(f"need disc_radius < mean_separation/2, got a={a}, l={l}")
        if self.R < self.radius_factor * math.sqrt(self.n_discs) * l:
            raise ConfigError(
                f"enclosure_radius {self.R} below {self.radius_factor} * sqrt(N) * l"
            )
        if self.R <= a:
            raise ConfigError("enclosure smaller than a disc")
        if self.packing_fraction >= 0.5:
            raise ConfigError(f"packing fraction {self.packing_fraction:.3f} >= 0.5")
        if self.placement not in ("poisson-rejection", "jittered-lattice"):
            raise ConfigError(f"unknown placement {self.placement!r}")
        if self.velocity_dist not in ("fixed", "maxwellian"):
            raise ConfigError(f"unknown velocity_dist {self.velocity_dist!r}")
        if self.speed <= 0:
            raise ConfigError("speed must be positive")

    def with_(self, **changes) -> "SystemConfig":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class SystemState:
    """Discs at a common time.

    Trajectories are stored as per-disc anchors (position at the disc's last
    velocity change, and that time) so that advancing is restartable without
    accumulating drift; ``positions`` is evaluated at ``time`` from them.
    """

    time: float
    velocities: np.ndarray
    anchor_pos: np.ndarray
    anchor_time: np.ndarray
    radius: float = 1.0
    enclosure_radius: float = math.inf
    positions: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pos = self.anchor_pos + self.velocities * (self.time - self.anchor_time)[:, None]
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @classmethod
    def at(cls, time, positions, velocities, radius=1.0, enclosure_radius=math.inf):
        positions = np.array(positions, dtype=float).reshape(-1, 2)
        velocities = np.array(velocities, dtype=float).reshape(-1, 2)
        if positions.shape != velocities.shape:
            raise ValueError("positions and velocities differ in shape")
        return cls(
            time=float(time),
            velocities=velocities,
            anchor_pos=positions.copy(),
            anchor_time=np.full(len(positions), float(time)),
            radius=float(radius),
            enclosure_radius=float(enclosure_radius),
        )

    @property
    def n(self) -> int:
        return len(self.velocities)

    def discs(self):
        """Yield ``(id, position, velocity)`` per disc."""
        for i in range(self.n):
            yield i, Vec2(*self.positions[i]), Vec2(*self.velocities[i])

    def kinetic_energy(self, mass: float = 1.0) -> float:
        return 0.5 * mass * float(np.sum(self.velocities**2))

    def momentum(self, mass: float = 1.0) -> np.ndarray:
        return mass * self.velocities.sum(axis=0)

    def min_pair_distance(self) -> float:
        if self.n < 2:
            return math.inf
        d = self.positions[:, None, :] - self.positions[None, :, :]
        r = np.hypot(d[..., 0], d[..., 1])
        r[np.diag_indices(self.n)] = np.inf
        return float(r.min())

    def max_radius(self) -> float:
        return float(np.hypot(self.positions[:, 0], self.positions[:, 1]).max())

    def check_invariants(self, tol: float | None = None) -> None:
        eps = PENETRATION_EPS * self.radius if tol is None else tol
        if self.min_pair_distance() < 2 * self.radius - eps:
            raise AssertionError(f"overlap: min distance {self.min_pair_distance()}")
        if self.max_radius() > self.enclosure_radius - self.radius + eps:
            raise AssertionError(f"disc outside enclosure: {self.max_radius()}")

    def same_as(self, other: "SystemState") -> bool:
        return (
            self.time == other.time
            and np.array_equal(self.velocities, other.velocities)
            and np.array_equal(self.positions, other.positions)
        )


_REGION_RE = re.compile(r"^inner-circle\(\s*([0-9.eE+-]+)\s*\)$")


def parse_region(text: str) -> tuple[str, float]:
    text = text.strip()
    if text == "full":
        return ("full", 1.0)
    m = _REGION_RE.match(text)
    if not m:
        raise ConfigError(f"bad region {text!r}; expected 'full' or 'inner-circle(f)'")
    frac = float(m.group(1))
    if not 0 < frac <= 1:
        raise ConfigError("inner-circle fraction must be in (0, 1]")
    return ("inner-circle", frac)


def mean_free_path_nominal(config: SystemConfig) -> float:
    """Order-of-magnitude 2D mean free path l**2 / a."""
    a, l = config.disc_radius, config.mean_separation
    if a <= 0 or l <= 0:
        raise ValueError("a and l must be positive")
    return l * l / a


def mean_free_path_nominal_3d(l: float, a: float) -> float:
    """3D counterpart l**3 / a**2, reported for reference only."""
    return l**3 / a**2


def _sample_velocities(config: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    n, v = config.n_discs, config.speed
    if config.velocity_dist == "fixed":
        theta = rng.uniform(0.0, 2 * math.pi, n)
        return v * np.column_stack([np.cos(theta), np.sin(theta)])
    # mean square speed v**2 for 2D Gaussian components
    return rng.normal(0.0, v / math.sqrt(2), size=(n, 2))


def _place_rejection(n, a, rmax, rng):
    pos = np.empty((n, 2))
    min_d2 = (2 * a) ** 2
    for i in range(n):
        for attempt in range(MAX_ATTEMPTS_PER_DISC):
            # uniform in the disc of radius rmax
            r = rmax * math.sqrt(rng.uniform())
            phi = rng.uniform(0.0, 2 * math.pi)
            p = (r * math.cos(phi), r * math.sin(phi))
            if i == 0:
                break
            d = pos[:i] - p
            if float(np.min(d[:, 0] ** 2 + d[:, 1] ** 2)) >= min_d2:
                break
        else:
            raise PlacementError(
                f"placed only {i} of {n} discs after {MAX_ATTEMPTS_PER_DISC} attempts", i
            )
        pos[i] = p
    return pos


def _place_lattice(n, a, rmax, rng):
    spacing = math.sqrt(math.pi * rmax**2 / n)
    while True:
        if spacing <= 2 * a:
            raise PlacementError("lattice spacing would drop below a disc diameter", 0)
        jitter = 0.999 * (spacing - 2 * a) / 2
        k = int(math.ceil(rmax / spacing)) + 1
        g = np.arange(-k, k + 1) * spacing
        pts = np.array([(x, y) for x in g for y in g])
        # keep the jittered point inside rmax in the worst case
        inside = np.hypot(pts[:, 0], pts[:, 1]) <= rmax - jitter * math.sqrt(2)
        pts = pts[inside]
        if len(pts) >= n:
            break
        spacing *= 0.98
    order = np.lexsort((pts[:, 1], pts[:, 0], np.round(np.hypot(pts[:, 0], pts[:, 1]), 9)))
    pts = pts[order[:n]]
    return pts + rng.uniform(-jitter, jitter, size=pts.shape)


def sample_initial_configuration(
    config: SystemConfig, region: str | tuple[str, float] = "full"
) -> SystemState:
    """Place discs without overlap and draw isotropic velocities.

    ``region`` is ``"full"`` or ``"inner-circle(f)"``; the latter confines every
    centre to ``|r| <= f*R - a``. Deterministic in ``config.seed``.
    """
    kind, frac = parse_region(region) if isinstance(region, str) else region
    a, R, n = config.disc_radius, config.R, config.n_discs
    rmax = (frac * R if kind == "inner-circle" else R) - a
    if rmax < 0:
        raise ConfigError("region smaller than a disc")
    if n * a * a / max(rmax + a, 1e-300) ** 2 >= 0.5:
        raise ConfigError("requested packing infeasible in region")
    rng = np.random.default_rng(config.seed)
    if config.placement == "poisson-rejection":
        pos = _place_rejection(n, a, rmax, rng)
    else:
        pos = _place_lattice(n, a, rmax, rng)
    vel = _sample_velocities(config, rng)
    state = SystemState.at(0.0, pos, vel, radius=a, enclosure_radius=R)
    state.check_invariants(tol=0.0)
    return state


CONFIG_KEYS = {
    "n_discs": int,
    "disc_radius": float,
    "mean_separation": float,
    "enclosure_radius": float,
    "seed": int,
    "placement": str,
    "region": str,
}


def parse_config_text(text: str, source: str = "<config>"):
    """Parse flat ``key=value`` text.

    Returns ``(SystemConfig, region, extras)``; ``extras`` holds any keys beyond
    the system keys, left as strings for the experiment to interpret.
    """
    values: dict[str, object] = {}
    extras: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in values or key in extras:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        if key in CONFIG_KEYS:
            try:
                values[key] = CONFIG_KEYS[key](val)
            except ValueError:
                raise ConfigError(f"{source}:{lineno}: bad value for {key}: {val!r}") from None
        else:
            extras[key] = val
    if "n_discs" not in values:
        raise ConfigError(f"{source}: missing required key n_discs")
    region = parse_region(str(values.pop("region", "full")))
    try:
        config = SystemConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return config, region, extras


def load_config(path: str | Path):
    path = Path(path)
    return parse_config_text(path.read_text(), source=str(path))
