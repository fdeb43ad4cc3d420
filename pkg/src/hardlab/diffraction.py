"""Static structure factor probe: classical snapshot vs smeared matter."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

N_DIRECTIONS = 64
Z_THRESHOLD = 3.0


@dataclass
class StructureFactorCurve:
    q: np.ndarray
    s: np.ndarray
    sigma: np.ndarray | None = None

    def to_csv(self, path: str | Path) -> None:
        sig = self.sigma if self.sigma is not None else np.zeros_like(self.s)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["q", "S_mean", "S_sigma"])
            for row in zip(self.q, self.s, sig):
                w.writerow([repr(float(x)) for x in row])


def probe_window(R: float, l: float, n: int = 64) -> np.ndarray:
    """Logarithmic |q| grid spanning [2 pi / R, 2 pi / l]."""
    return np.geomspace(2 * math.pi / R, 2 * math.pi / l, n)


def _directions(n_dir: int) -> np.ndarray:
    # half circle suffices: S(q) = S(-q) for real positions
    th = (np.arange(n_dir) + 0.5) * math.pi / n_dir
    return np.column_stack([np.cos(th), np.sin(th)])


def structure_factor(positions, q_grid, n_directions: int = N_DIRECTIONS,
                     window=None, shell: float = 0.0, n_shell: int = 1,
                     directions=None) -> StructureFactorCurve:
    """S(q) = |sum_j exp(i q.r_j)|^2 / N averaged over directions of q.

    With ``shell > 0`` each grid value is further averaged over ``n_shell``
    magnitudes spread evenly across ``[q (1 - shell), q (1 + shell)]``.
    ``directions`` (unit vectors) replaces the default half-circle set.
    """
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    if len(pos) == 0:
        raise ValueError("no positions")
    q_grid = np.asarray(q_grid, dtype=float)
    if window is not None and (q_grid.min() < window[0] * (1 - 1e-12)
                               or q_grid.max() > window[1] * (1 + 1e-12)):
        warnings.warn("q grid extends outside the probe window", stacklevel=2)
    if directions is None:
        dirs = _directions(n_directions)
    else:
        dirs = np.asarray(directions, dtype=float).reshape(-1, 2)
        dirs = dirs / np.hypot(dirs[:, 0], dirs[:, 1])[:, None]
    proj = pos @ dirs.T  # (N, n_dir)
    offsets = np.linspace(-shell, shell, n_shell) if shell > 0 and n_shell > 1 else np.zeros(1)
    s = np.empty(len(q_grid))
    for i, q in enumerate(q_grid):
        ph = (q * (1.0 + offsets))[:, None, None] * proj[None]  # (shell, N, dir)
        re = np.cos(ph).sum(axis=1)
        im = np.sin(ph).sum(axis=1)
        s[i] = np.mean(re * re + im * im) / len(pos)
    return StructureFactorCurve(q_grid, s)


def uniform_positions(n: int, R: float, rng: np.random.Generator) -> np.ndarray:
    r = R * np.sqrt(rng.uniform(size=n))
    phi = rng.uniform(0, 2 * math.pi, size=n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def smeared_reference(n: int, R: float, q_grid, n_samples: int = 200, seed: int = 0,
                      n_directions: int = N_DIRECTIONS, shell: float = 0.0,
                      n_shell: int = 1) -> StructureFactorCurve:
    """Monte-Carlo mean and spread of S(q) for N independent uniform positions.

    Sample ``i`` draws from its own stream ``(seed, i)``, so the result does
    not depend on evaluation order.
    """
    if n_samples < 100:
        raise ValueError("need at least 100 samples")
    curves = np.array([
        structure_factor(uniform_positions(n, R, np.random.default_rng([seed, i])), q_grid,
                         n_directions, shell=shell, n_shell=n_shell).s
        for i in range(n_samples)
    ])
    return StructureFactorCurve(np.asarray(q_grid, dtype=float), curves.mean(axis=0),
                                curves.std(axis=0, ddof=1) if n > 1 else np.zeros(len(q_grid)))


def classify_snapshot(snapshot: StructureFactorCurve, reference: StructureFactorCurve,
                      threshold: float = Z_THRESHOLD):
    """Return ``(verdict, max_z)``; distinguishable iff some |z| >= threshold."""
    if len(snapshot.q) != len(reference.q) or not np.allclose(snapshot.q, reference.q,
                                                               rtol=1e-12, atol=0):
        raise ValueError("q grids differ")
    diff = np.abs(snapshot.s - reference.s)
    sig = reference.sigma if reference.sigma is not None else np.zeros_like(diff)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(diff == 0, 0.0, diff / sig)
    zmax = float(np.max(z))
    return ("distinguishable" if zmax >= threshold else "indistinguishable"), zmax
