"""Exact 2D scattering from an impenetrable disc.

J_m is computed by Miller's backward recurrence normalised with
J_0 + 2*sum(J_2k) = 1, or by the ascending series for small arguments.
Y_0 and Y_1 come from Neumann series in those J values; higher orders use
the forward recurrence, which is stable for Y.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EULER_GAMMA = 0.5772156649015329
M_MAX_ORDER = 1000  # accuracy is verified on orders 0..200
X_MIN, X_MAX = 1e-6, 500.0
SERIES_X = 1e-3
_RESCALE = 1e250


class BesselDomainError(ValueError):
    pass


def _check(m_max: int, x: float) -> None:
    if not (0 <= m_max <= M_MAX_ORDER):
        raise BesselDomainError(f"order {m_max} outside [0, {M_MAX_ORDER}]")
    if not (X_MIN <= x <= X_MAX):
        raise BesselDomainError(f"argument {x} outside [{X_MIN}, {X_MAX}]")


def _j_series(m_max: int, x: float) -> np.ndarray:
    # tiny x: two or three terms of the ascending series suffice
    h = 0.5 * x
    out = np.zeros(m_max + 1)
    log_h = math.log(h)
    for m in range(m_max + 1):
        lead = m * log_h - math.lgamma(m + 1)
        if lead < -745:
            break
        term = math.exp(lead)
        s, k = term, 0
        while abs(term) > 1e-17 * abs(s):
            k += 1
            term *= -h * h / (k * (m + k))
            s += term
        out[m] = s
    return out


def _j_miller(n_keep: int, x: float) -> tuple[np.ndarray, np.ndarray]:
    """J_0..J_{n_keep} (n_keep >= 1) by backward recurrence."""
    start = int(max(n_keep, x) + 40 + 12 * x ** (1 / 3))
    start += start % 2
    vals = np.zeros(start + 2)
    nxt, cur = 0.0, 1e-300
    norm = 0.0
    for k in range(start, 0, -1):
        prev = (2.0 * k / x) * cur - nxt  # J_{k-1}
        nxt, cur = cur, prev
        vals[k - 1] = cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * cur
        if abs(cur) > _RESCALE:
            vals[k - 1:] /= _RESCALE
            nxt /= _RESCALE
            cur /= _RESCALE
            norm /= _RESCALE
    norm += vals[0]
    return vals[: max(n_keep, 1) + 1] / norm, vals / norm


def bessel_J_all(m_max: int, x: float) -> np.ndarray:
    """J_0(x) .. J_{m_max}(x)."""
    _check(m_max, x)
    if x < SERIES_X:
        return _j_series(m_max, x)
    return _j_miller(m_max, x)[0][: m_max + 1]


def bessel_Y_all(m_max: int, x: float) -> np.ndarray:
    """Y_0(x) .. Y_{m_max}(x); entries overflow to -inf for m >> x."""
    _check(m_max, x)
    if x < SERIES_X:
        j = _j_series(max(m_max, 2) + 2, x)
        # Neumann sums converge in very few terms here
        j_even = j
    else:
        _, j_even = _j_miller(1, x)
    L = math.log(0.5 * x) + EULER_GAMMA
    n_terms = (len(j_even) - 2) // 2
    k = np.arange(1, n_terms + 1)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    j2k = j_even[2 * k]
    y0 = (2 / math.pi) * (L * j_even[0] - 2.0 * np.sum(sign * j2k / k))
    y1 = (2 / math.pi) * (
        L * j_even[1] - j_even[0] / x + np.sum(sign * (j_even[2 * k - 1] - j_even[2 * k + 1]) / k)
    )
    out = np.empty(m_max + 1)
    out[0] = y0
    if m_max >= 1:
        out[1] = y1
    with np.errstate(over="ignore", invalid="ignore"):
        for m in range(1, m_max):
            out[m + 1] = (2.0 * m / x) * out[m] - out[m - 1]
            if not math.isfinite(out[m + 1]):
                out[m + 1:] = -math.inf
                break
    return out


def bessel_J(m: int, x: float) -> float:
    return float(bessel_J_all(m, x)[m])


def bessel_Y(m: int, x: float) -> float:
    return float(bessel_Y_all(m, x)[m])


# --------------------------------------------------------------------------
# phase shifts


def _delta(j: float, y: float) -> float:
    if y == 0.0:
        return math.pi / 2
    if math.isinf(y):
        return 0.0
    d = math.atan(j / y)
    return math.pi / 2 if d == -math.pi / 2 else d


def phase_shift(m: int, ka: float) -> float:
    """delta_m = arctan(J_m(ka) / Y_m(ka)) on the branch (-pi/2, pi/2]."""
    m = abs(m)
    return _delta(bessel_J(m, ka), bessel_Y(m, ka))


def phase_shift_sweep(m: int, ka_grid) -> np.ndarray:
    """delta_m along a ka grid, unwrapped by pi where Y_m changes sign."""
    raw = np.array([phase_shift(m, float(x)) for x in ka_grid])
    return np.unwrap(raw, period=math.pi)


def default_m_max(ka: float) -> int:
    return int(math.ceil(ka + 10 * ka ** (1 / 3) + 10))


@dataclass
class PhaseShiftTable:
    ka: float
    deltas: np.ndarray  # principal branch, m = 0..m_max

    @property
    def m_max(self) -> int:
        return len(self.deltas) - 1

    @classmethod
    def compute(cls, ka: float, m_max: int | None = None) -> "PhaseShiftTable":
        m_max = default_m_max(ka) if m_max is None else m_max
        j, y = bessel_J_all(m_max, ka), bessel_Y_all(m_max, ka)
        return cls(ka, np.array([_delta(a, b) for a, b in zip(j, y)]))

    def continuous(self) -> np.ndarray:
        """Branch-tracked deltas for m = -m_max..m_max.

        Uses delta_{-m} = delta_m - m*pi, the smooth continuation of the
        semiclassical phase, and keeps successive steps in (-pi/4, 3pi/4].
        """
        m = np.arange(-self.m_max, self.m_max + 1)
        raw = np.concatenate([self.deltas[:0:-1], self.deltas])
        steps = np.diff(raw)
        steps = steps - math.pi * np.ceil((steps - 0.75 * math.pi) / math.pi)
        out = np.concatenate([[raw[0]], raw[0] + np.cumsum(steps)])
        # anchor so that m = 0 carries its principal value
        return m, out - out[self.m_max] + self.deltas[0]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "ka", "delta_m"])
            for m, d in enumerate(self.deltas):
                w.writerow([m, repr(self.ka), repr(float(d))])


@dataclass
class CrossSectionReport:
    ka: float
    sigma_total: float
    partials: np.ndarray
    tail_fraction: float


class UnconvergedTail(ValueError):
    pass


def total_cross_section(table: PhaseShiftTable, k: float) -> CrossSectionReport:
    """sigma = (4/k) [sin^2 d_0 + 2 sum_{m>=1} sin^2 d_m] (length in 2D)."""
    need = table.ka + 10 * table.ka ** (1 / 3) + 10
    if table.m_max < need:
        raise UnconvergedTail(f"m_max={table.m_max} below {need:.1f}")
    s2 = np.sin(table.deltas) ** 2
    partials = (4.0 / k) * s2 * np.where(np.arange(len(s2)) == 0, 1.0, 2.0)
    total = float(partials.sum())
    cut = int(math.floor(need))
    tail = float(partials[cut:].sum()) / total if total > 0 else 0.0
    if tail > 1e-8:
        raise UnconvergedTail(f"tail carries {tail:.2e} of the total")
    return CrossSectionReport(table.ka, total, partials, tail)


def semiclassical_deflection_check(table: PhaseShiftTable, k: float, b: float):
    """Compare 2 d(delta)/dm at m = round(k b) with pi - 2 arcsin(b/a).

    Returns ``(quantum, classical, relative_error)``.
    """
    a = table.ka / k
    m = int(round(k * abs(b)))
    if m + 1 > table.m_max:
        raise IndexError(f"m={m} outside table (m_max={table.m_max})")
    ms, cont = table.continuous()
    i = m + table.m_max
    quantum = abs(cont[i + 1] - cont[i - 1])
    classical = math.pi - 2 * math.asin(min(abs(b) / a, 1.0))
    return quantum, classical, abs(quantum - classical) / classical
