"""Direct integration of the perturbed piecewise system and its return map.

The section is {x = 0, -1 < y < 0}. A point (0, y) there lies on L_h with
h = 1 - y^2; one revolution runs right of the axis (saddle subsystem) up to
(0, y') with y' > 0, then left (center subsystem) back to the section.
The displacement is d(h) = (1 - y1^2) - h.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .melnikov import closed_form
from .model import SADDLE, PerturbationSpec
from .zeros import count_zeros

__all__ = [
    "SimConfig",
    "SimulationError",
    "EscapeError",
    "SaddleCaptureError",
    "CrossingLimitError",
    "CycleReport",
    "vector_field",
    "integrate_to_section",
    "displacement",
    "find_limit_cycles",
    "EPS_MAX",
]

EPS_MAX = 0.05
ESCAPE_RADIUS = 10.0
SADDLE_RADIUS = 1e-3
T_MAX = 200.0


class SimulationError(RuntimeError):
    pass


class EscapeError(SimulationError):
    """Trajectory left the ball of radius 10."""


class SaddleCaptureError(SimulationError):
    """Trajectory came within 1e-3 of the saddle (1, 0)."""


class CrossingLimitError(SimulationError):
    """No return to the section within the allowed number of switchings."""


@dataclass(frozen=True)
class SimConfig:
    epsilon: float
    step_tol: float = 1e-10
    event_tol: float = 1e-12
    max_crossings: int = 4
    fixed_step: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= EPS_MAX:
            raise ValueError(f"epsilon must lie in [0, {EPS_MAX}] (first-order regime)")
        if self.fixed_step is not None and not 0.0 < self.fixed_step < 0.1:
            raise ValueError("fixed_step must lie in (0, 0.1)")
        if self.max_crossings < 2:
            raise ValueError("one revolution needs two crossings")


def vector_field(spec: PerturbationSpec, eps: float, side: int):
    """Right (side=+1) or left (side=-1) subsystem as f(t, z)."""
    if side > 0:
        p, q = spec.terms("a_plus"), spec.terms("b_plus")
    else:
        p, q = spec.terms("a_minus"), spec.terms("b_minus")

    def poly(terms, x, y):
        return sum(c * x ** i * y ** j for i, j, c in terms)

    if side > 0:
        def f(t, z):
            x, y = z
            return [-y + eps * poly(p, x, y), 1.0 - x + eps * poly(q, x, y)]
    else:
        def f(t, z):
            x, y = z
            return [-y + eps * poly(p, x, y), x + eps * poly(q, x, y)]
    return f


def _guards(side):
    def switch(t, z):
        return z[0]
    switch.terminal = True
    switch.direction = -1.0 if side > 0 else 1.0

    def escape(t, z):
        return ESCAPE_RADIUS - math.hypot(z[0], z[1])
    escape.terminal = True
    escape.direction = -1.0

    def saddle(t, z):
        return math.hypot(z[0] - SADDLE[0], z[1] - SADDLE[1]) - SADDLE_RADIUS
    saddle.terminal = True
    saddle.direction = -1.0
    return [switch, escape, saddle]


def _half_adaptive(f, z0, side, cfg, trace):
    sol = solve_ivp(f, (0.0, T_MAX), z0, method="DOP853", rtol=cfg.step_tol,
                    atol=cfg.step_tol * 1e-2, events=_guards(side), dense_output=trace is not None)
    if trace is not None:
        ts = np.linspace(0.0, sol.t[-1], 200)
        for t, (x, y) in zip(ts, sol.sol(ts).T):
            trace.append((t, x, y))
    if sol.t_events[1].size:
        raise EscapeError(f"escaped |z| > {ESCAPE_RADIUS} from {z0}")
    if sol.t_events[2].size:
        raise SaddleCaptureError(f"came within {SADDLE_RADIUS} of the saddle from {z0}")
    if not sol.t_events[0].size:
        raise CrossingLimitError(f"no switching within t = {T_MAX} from {z0}")
    z = sol.y_events[0][0]
    if abs(z[0]) > cfg.event_tol:
        raise SimulationError(f"event located to |x| = {abs(z[0]):.2e} > event_tol")
    return float(sol.t_events[0][0]), float(z[1])


def _rk4(f, z, h):
    k1 = np.asarray(f(0.0, z))
    k2 = np.asarray(f(0.0, z + 0.5 * h * k1))
    k3 = np.asarray(f(0.0, z + 0.5 * h * k2))
    k4 = np.asarray(f(0.0, z + h * k3))
    return z + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _half_fixed(f, z0, side, cfg, trace):
    """Classical RK4 with constant step; the crossing is found by bisecting the last step."""
    h = cfg.fixed_step
    z = np.asarray(z0, dtype=float)
    t = 0.0
    nmax = int(T_MAX / h)
    for _ in range(nmax):
        z_new = _rk4(f, z, h)
        if trace is not None:
            trace.append((t + h, z_new[0], z_new[1]))
        if math.hypot(*z_new) > ESCAPE_RADIUS:
            raise EscapeError(f"escaped |z| > {ESCAPE_RADIUS} from {z0}")
        if math.hypot(z_new[0] - SADDLE[0], z_new[1] - SADDLE[1]) < SADDLE_RADIUS:
            raise SaddleCaptureError(f"came within {SADDLE_RADIUS} of the saddle from {z0}")
        crossed = z_new[0] < 0.0 if side > 0 else z_new[0] > 0.0
        if crossed and t > 0.0:
            lo, hi = 0.0, h
            zc = z_new
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                zc = _rk4(f, z, mid)
                if abs(zc[0]) <= cfg.event_tol:
                    break
                if (zc[0] < 0.0) == (side > 0):
                    hi = mid
                else:
                    lo = mid
            return t + mid, float(zc[1])
        z, t = z_new, t + h
    raise CrossingLimitError(f"no switching within t = {T_MAX} from {z0}")


def integrate_to_section(y0: float, spec: PerturbationSpec, cfg: SimConfig, *,
                         trace: Optional[list] = None) -> dict:
    """Follow (0, y0) once around: right subsystem, then left, back to y < 0.

    Returns y1, the number of switchings and the times spent on each side.
    """
    if not -1.0 < y0 < 0.0:
        raise ValueError("y0 must lie in (-1, 0)")
    half = _half_adaptive if cfg.fixed_step is None else _half_fixed
    y, crossings, times = y0, 0, []
    side = 1
    while True:
        f = vector_field(spec, cfg.epsilon, side)
        t, y = half(f, [0.0, y], side, cfg, trace)
        times.append(t)
        crossings += 1
        if side < 0 and y < 0.0:
            return {"y1": y, "crossings": crossings, "times": times}
        if crossings >= cfg.max_crossings:
            raise CrossingLimitError(f"{crossings} switchings without returning to the section")
        side = -side


def displacement(h: float, spec: PerturbationSpec, cfg: SimConfig) -> float:
    """d(h) = (1 - y1^2) - h for the orbit started at (0, -sqrt(1-h))."""
    if not 0.0 < h < 1.0:
        raise ValueError("h must lie in (0, 1)")
    y0 = -math.sqrt(1.0 - h)
    y1 = integrate_to_section(y0, spec, cfg)["y1"]
    return (1.0 - y1 * y1) - h


@dataclass
class CycleReport:
    fixed_points: list
    melnikov_zeros: list
    matched: list
    unmatched_cycles: list = field(default_factory=list)
    unmatched_zeros: list = field(default_factory=list)
    epsilon: float = 0.0

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "fixed_points": self.fixed_points,
                "melnikov_zeros": self.melnikov_zeros,
                "matched": [list(m) for m in self.matched],
                "unmatched_cycles": self.unmatched_cycles, "unmatched_zeros": self.unmatched_zeros}

    @property
    def max_mismatch(self) -> float:
        return max((m[2] for m in self.matched), default=float("nan"))


def find_limit_cycles(spec: PerturbationSpec, cfg: SimConfig,
                      h_range: Tuple[float, float] = (0.02, 0.98), grid: int = 40,
                      *, match_radius: float = 0.05) -> CycleReport:
    """Fixed points of the return map in ``h_range``, paired with zeros of Mbar."""
    lo, hi = h_range
    if not 0.0 < lo < hi < 1.0:
        raise ValueError("need 0 < h_lo < h_hi < 1")
    hs = np.linspace(lo, hi, grid)
    ds = np.array([displacement(float(h), spec, cfg) for h in hs])
    # below this |d| is integration noise (about step_tol), not a sign
    floor = max(10 * cfg.event_tol, 100 * cfg.step_tol)
    fixed = []
    for i in range(grid - 1):
        a, b = ds[i], ds[i + 1]
        if abs(a) <= floor and abs(b) <= floor:
            continue
        if a * b < 0.0:
            fn = lambda h: displacement(h, spec, cfg)
            r = brentq(fn, hs[i], hs[i + 1], xtol=1e-10, rtol=1e-12)
            res = abs(fn(r))
            step = 1e-6
            slope = (fn(r + step) - fn(r - step)) / (2 * step)
            fixed.append({"h": r, "y_section": -math.sqrt(1.0 - r), "residual": res,
                          "stability": int(np.sign(slope))})
    zeros = []
    if not spec.is_zero():
        rep = count_zeros(closed_form(spec), h_min=lo, h_max=hi, dps=30)
        zeros = rep.h_values
    matched, used = [], set()
    unmatched_cycles = []
    for fp in fixed:
        best = None
        for k, z in enumerate(zeros):
            if k in used:
                continue
            dist = abs(fp["h"] - z)
            if best is None or dist < best[1]:
                best = (k, dist)
        if best is not None and best[1] <= match_radius:
            used.add(best[0])
            matched.append((fp["h"], zeros[best[0]], best[1]))
        else:
            unmatched_cycles.append(fp["h"])
    unmatched_zeros = [z for k, z in enumerate(zeros) if k not in used]
    matched.sort()
    return CycleReport(fixed, zeros, matched, unmatched_cycles, unmatched_zeros, cfg.epsilon)


def trace_csv(trace: List[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x", "y"])
    for row in trace:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
