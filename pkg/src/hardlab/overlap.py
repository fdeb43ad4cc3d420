"""Pointer-state overlaps and the interference precision bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MARGIN_CAP = 1e300  # reported margin for a perfect return


@dataclass(frozen=True)
class PointerPair:
    displacements: np.ndarray
    width: float
    wavelength: float = 1.0

    def __post_init__(self):
        d = np.asarray(self.displacements, dtype=float)
        object.__setattr__(self, "displacements", d)
        if self.width <= 0:
            raise ValueError("width must be positive")
        if len(d) < 1 or (d < 0).any():
            raise ValueError("need N >= 1 non-negative displacements")

    @property
    def n(self) -> int:
        return len(self.displacements)


def gaussian_overlap(d, width):
    """|<g(x0, w)|g(x0 + d, w)>| = exp(-d^2 / (8 w^2)) for equal widths w."""
    if width <= 0:
        raise ValueError("width must be positive")
    return np.exp(-np.square(d) / (8.0 * width * width))


def pointer_overlap(pair: PointerPair) -> tuple[float, float]:
    """Exact product of per-disc overlaps and its exp(-sum delta_i) estimate."""
    g = gaussian_overlap(pair.displacements, pair.width)
    exact = float(np.prod(g))
    approx = math.exp(-float(np.sum(1.0 - g)))
    return exact, approx


def overlap_from_deltas(deltas) -> tuple[float, float]:
    deltas = np.asarray(deltas, dtype=float)
    return float(np.prod(1.0 - deltas)), math.exp(-float(deltas.sum()))


def interference_precision(n: int, wavelength: float) -> float:
    """Per-disc return tolerance lambda / N."""
    if n < 1 or wavelength <= 0:
        raise ValueError("need N >= 1 and wavelength > 0")
    return wavelength / n


def interference_precision_delta(delta: float, wavelength: float) -> float:
    """The delta*lambda form of the same bound, with delta given explicitly."""
    return delta * wavelength


def interference_verdict(errors, n: int, wavelength: float) -> tuple[bool, float]:
    """True iff every per-disc error is within lambda/N (inclusive).

    ``errors`` may be a ``ReversalReport`` or an array of per-disc errors.
    The margin is lambda / (N * max error), capped at ``MARGIN_CAP``.
    """
    errors = getattr(errors, "errors", errors)
    worst = float(np.max(errors))
    threshold = interference_precision(n, wavelength)
    margin = MARGIN_CAP if worst == 0 else min(threshold / worst, MARGIN_CAP)
    return worst <= threshold, margin
