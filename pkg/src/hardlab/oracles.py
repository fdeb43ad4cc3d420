"""Independent reference computations used to cross-check the fast paths.

Nothing here shares code with the routines it checks: collision times come
from bisection rather than the quadratic formula, trajectories from fixed
global time steps rather than event scheduling, and Bessel values from
arbitrary-precision arithmetic.
"""

from __future__ import annotations

import math

import numpy as np


def bisect(f, lo: float, hi: float, tol: float = 1e-15, max_iter: int = 200) -> float:
    """Root of ``f`` bracketed by ``[lo, hi]`` (sign change required)."""
    flo = f(lo)
    if flo == 0:
        return lo
    if flo * f(hi) > 0:
        raise ValueError("root not bracketed")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0 or hi - lo <= tol * max(1.0, abs(mid)):
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pair_contact_time_bisection(r_a, v_a, r_b, v_b, contact, t_max, n_grid=20000):
    """First time the separation drops to ``contact``, via a scan then bisection."""
    r_a, v_a, r_b, v_b = (np.asarray(x, dtype=float) for x in (r_a, v_a, r_b, v_b))

    def gap(t):
        d = (r_a + v_a * t) - (r_b + v_b * t)
        return math.hypot(d[0], d[1]) - contact

    ts = np.linspace(0.0, t_max, n_grid + 1)
    prev = gap(0.0)
    for t0, t1 in zip(ts[:-1], ts[1:]):
        g = gap(t1)
        if g <= 0 < prev or (g <= 0 and prev <= 0 and t0 == 0):
            return bisect(gap, t0, t1)
        prev = g
    return None


def wall_time_bisection(r, v, R, a, t_max, n_grid=20000):
    r, v = np.asarray(r, dtype=float), np.asarray(v, dtype=float)

    def f(t):
        p = r + v * t
        return math.hypot(p[0], p[1]) - (R - a)

    ts = np.linspace(0.0, t_max, n_grid + 1)
    for t0, t1 in zip(ts[:-1], ts[1:]):
        if f(t1) >= 0 > f(t0):
            return bisect(f, t0, t1)
    return None


def naive_time_stepping(positions, velocities, radius, R, dt, n_events, chunk=4096,
                        t_limit=1e7):
    """Brute-force reference: fixed global steps, overlap detection, bisection.

    Positions at step k are evaluated from each disc's last contact, so no
    drift accumulates between collisions. When a step produces an overlap
    (pair or wall) the contact instant inside that step is located by
    bisection and resolved elastically. Returns ``(t_final, positions,
    velocities, event_times)`` just after the ``n_events``-th collision.
    """
    pos0 = np.array(positions, dtype=float)
    vel = np.array(velocities, dtype=float)
    n = len(pos0)
    t0 = np.zeros(n)
    sigma, rw = 2.0 * radius, R - radius
    iu, ju = np.triu_indices(n, 1)
    events = []
    k = 0  # global step counter
    t_last = 0.0

    def pos_at(t):
        return pos0 + vel * (t - t0)[:, None]

    while len(events) < n_events:
        steps = (k + 1 + np.arange(chunk)) * dt
        if steps[0] > t_limit:
            raise RuntimeError("oracle ran past its time limit")
        p = pos0[None] + vel[None] * (steps[:, None] - t0[None])[..., None]  # (K, n, 2)
        d = p[:, iu] - p[:, ju]
        pair_bad = np.hypot(d[..., 0], d[..., 1]) < sigma
        wall_bad = np.hypot(p[..., 0], p[..., 1]) > rw
        bad_step = pair_bad.any(axis=1) | wall_bad.any(axis=1)
        if not bad_step.any():
            k += chunk
            continue
        s = int(np.argmax(bad_step))
        lo = max(t_last, (k + s) * dt)
        hi = (k + s + 1) * dt
        cands = []
        for c in np.nonzero(pair_bad[s])[0]:
            i, j = int(iu[c]), int(ju[c])

            def gap(t, i=i, j=j):
                q = pos_at(t)
                return math.hypot(*(q[i] - q[j])) - sigma

            if gap(lo) > 0:
                cands.append((bisect(gap, lo, hi), i, j))
        for i in np.nonzero(wall_bad[s])[0]:
            i = int(i)

            def out(t, i=i):
                q = pos_at(t)[i]
                return rw - math.hypot(q[0], q[1])

            if out(lo) > 0:
                cands.append((bisect(out, lo, hi), i, -1))
        if not cands:
            # overlap already present at lo: a grazing contact was stepped over
            k += s + 1
            continue
        tc, i, j = min(cands)
        q = pos_at(tc)
        if j < 0:
            nrm = q[i] / math.hypot(*q[i])
            vel[i] = vel[i] - 2.0 * (vel[i] @ nrm) * nrm
        else:
            nrm = (q[i] - q[j]) / math.hypot(*(q[i] - q[j]))
            dv = (vel[i] - vel[j]) @ nrm
            vel[i] = vel[i] - dv * nrm
            vel[j] = vel[j] + dv * nrm
        for m in (i, j):
            if m >= 0:
                pos0[m] = q[m]
                t0[m] = tc
        events.append((tc, i, j))
        t_last = tc
        k = k + s  # re-examine the same step with the updated velocities
    tc = events[-1][0]
    return tc, pos_at(tc), vel.copy(), [e[0] for e in events]


def bessel_reference(m: int, x: float, dps: int = 40) -> tuple[float, float]:
    """J_m(x), Y_m(x) in arbitrary precision (mpmath), rounded to float."""
    import mpmath as mp

    with mp.workdps(dps):
        return float(mp.besselj(m, x)), float(mp.bessely(m, x))


def bessel_series_reference(m: int, x: float, dps: int = 60) -> float:
    """J_m(x) from the ascending power series summed in high precision."""
    import mpmath as mp

    with mp.workdps(dps):
        x = mp.mpf(x)
        h = x / 2
        term = h**m / mp.factorial(m)
        total = term
        k = 0
        while abs(term) > mp.mpf(10) ** (-dps + 5) * max(abs(total), mp.mpf(10) ** (-300)):
            k += 1
            term *= -h * h / (k * (m + k))
            total += term
        return float(total)


def y0_integral_reference(x: float) -> float:
    """Y_0(x) = (4/pi^2) int_0^{pi/2} cos(x cos t) (gamma + ln(2 x sin^2 t)) dt."""
    import mpmath as mp

    with mp.workdps(30):
        f = lambda t: mp.cos(x * mp.cos(t)) * (mp.euler + mp.log(2 * x * mp.sin(t) ** 2))
        return float(4 / mp.pi**2 * mp.quad(f, [0, mp.pi / 2]))
