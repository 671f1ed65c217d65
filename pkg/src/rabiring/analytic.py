"""Closed-form critical lines, triple points and N=4 order parameters.

These expressions follow from the normal-phase quadratic Hamiltonian and
from the stationarity equations of the square ring; they serve as the
reference against which the numerical minimizer is checked.

Note on the chiral boundary: the general momentum-resolved line evaluated at
``q = +-pi/2`` gives ``g1c = sqrt(1 - 4 (J/omega)^2 sin^2 theta) / 2``, with
a minus sign under the root.  Direct minimization reproduces this sign (see
the test suite).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import MeanFieldState, ModelParams, PhaseKind, momentum_grid, symmetry_orbit

_TIE = 1e-14
# amplitude radicands this close below zero are roundoff at the boundary itself
_EDGE = 1e-14


@dataclass(frozen=True)
class CriticalLine:
    q: float
    theta: float
    g1c: float
    phase_hint: PhaseKind


def phase_hint(q: float) -> PhaseKind:
    if abs(math.sin(q)) < 1e-12:
        return PhaseKind.FERRO if math.cos(q) > 0 else PhaseKind.ANTIFERRO
    return PhaseKind.CHIRAL


def critical_g1(q: float, theta: float, params: ModelParams) -> float:
    """Coupling at which the normal-phase mode ``q`` softens."""
    j = params.j_ratio
    if j >= 0.5:
        raise DomainError("critical_g1 requires J/omega < 1/2")
    den = 1.0 + 2.0 * j * math.cos(theta) * math.cos(q)
    num = (1.0 + 4.0 * j * math.cos(theta) * math.cos(q)
           + 4.0 * j * j * math.cos(theta + q) * math.cos(theta - q))
    if den <= 0.0 or num <= 0.0:
        raise DomainError(f"critical line undefined at q={q}, theta={theta}")
    return 0.5 * math.sqrt(num / den)


def critical_line(q: float, theta: float, params: ModelParams) -> CriticalLine:
    return CriticalLine(q, theta, critical_g1(q, theta, params), phase_hint(q))


def second_order_boundary(theta: float, params: ModelParams) -> tuple[float, float]:
    """Lowest critical coupling over the ring momenta and the mode that condenses.

    Ties (``+-q`` pairs) resolve to the first momentum in grid order.
    """
    best_g, best_q = math.inf, 0.0
    for q in momentum_grid(params.n_sites):
        g = critical_g1(float(q), theta, params)
        if g < best_g - _TIE:
            best_g, best_q = g, float(q)
    return best_g, best_q


def _bisect(f, a: float, b: float, tol: float = 1e-12) -> float:
    fa = f(a)
    for _ in range(200):
        if abs(b - a) <= tol:
            break
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def triple_points_square(params: ModelParams) -> tuple[float, float]:
    """``(theta_c^-, theta_c^+)`` for the square ring."""
    j = params.j_ratio
    if j == 0.0:
        return math.pi / 2, math.pi / 2
    c = (1.0 - math.sqrt(1.0 + 16.0 * j * j)) / (4.0 * j)
    return math.acos(-c), math.acos(c)


def triple_point_triangle(params: ModelParams) -> float:
    """Edge of the chiral region of the triangular ring."""
    j = params.j_ratio
    return math.acos(-2.0 * j / (math.sqrt(8.0 * j * j + 1.0) + 1.0))


def _mode_class(q: float) -> float:
    # +q and -q share one critical line
    return round(abs(q), 12)


def triple_points_general(params: ModelParams, samples: int = 4001) -> list[float]:
    """Angles in ``[0, pi]`` where the condensing mode changes.

    Located by a scan of the lowest critical line followed by bisection on
    the difference of the two competing lines.
    """
    if params.j_ratio == 0.0:
        return []
    grid = np.linspace(0.0, math.pi, samples)
    qs = momentum_grid(params.n_sites)

    def lowest(theta):
        vals = [critical_g1(float(q), theta, params) for q in qs]
        k = int(np.argmin(vals))
        return _mode_class(float(qs[k])), float(qs[k])

    out = []
    prev_cls, prev_q = lowest(grid[0])
    for a, b in zip(grid[:-1], grid[1:]):
        cls, q = lowest(b)
        if cls != prev_cls:
            qa, qb = prev_q, q
            root = _bisect(
                lambda t: critical_g1(qa, t, params) - critical_g1(qb, t, params), a, b
            )
            out.append(root)
        prev_cls, prev_q = cls, q
    return out


def triple_points(params: ModelParams) -> list[float]:
    """Triple-point angles on ``[0, pi]`` for the ring size in ``params``."""
    n = params.n_sites
    if n == 4:
        lo, hi = triple_points_square(params)
        return [lo] if lo == hi else [lo, hi]
    if n == 3:
        return [0.0, triple_point_triangle(params)]
    pts = triple_points_general(params)
    if n % 2 == 1 and params.j_ratio > 0.0:
        pts = [0.0] + pts
    return pts


def _collinear_amplitude(params: ModelParams, sign: float) -> float | None:
    g1 = params.g1
    c = 1.0 + sign * 2.0 * params.j_ratio * math.cos(params.theta)
    if g1 == 0.0:
        return None
    val = (16.0 * g1**4 / c**2 - 1.0) / (16.0 * g1**2)
    if val < -_EDGE:
        return None
    return math.sqrt(val) if val > _EDGE else 0.0


def fsp_amplitude(params: ModelParams) -> float | None:
    """Uniform real amplitude of the ferro-superradiant state, ``None`` below threshold."""
    return _collinear_amplitude(params, +1.0)


def afsp_amplitude(params: ModelParams) -> float | None:
    """Staggered real amplitude of the antiferro-superradiant state (even N)."""
    return _collinear_amplitude(params, -1.0)


def csp_amplitudes_n4(params: ModelParams):
    """Chiral superradiant amplitudes of the square ring.

    Returns ``(x_amp, y_amp, patterns)`` with the four degenerate states, or
    ``None`` outside the chiral region.  The transverse part follows from
    the imaginary-part stationarity equation ``y_n = -(J/omega) sin(theta)
    (x_{n+1} - x_{n-1})``.
    """
    if params.n_sites != 4:
        raise DomainError("closed-form chiral amplitudes exist only for N = 4")
    lo, hi = triple_points_square(params)
    th = params.physical_theta
    if not lo < params.theta < hi or params.g1 == 0.0:
        return None
    j = params.j_ratio
    s = math.sin(th)
    c = 1.0 - 4.0 * j * j * s * s
    val = (16.0 * params.g1**4 / c**2 - 1.0) / (16.0 * params.g1**2)
    if val < -_EDGE:
        return None
    a = math.sqrt(val) if val > _EDGE else 0.0
    x = np.array([a, -a, -a, a])
    y = -j * s * (np.roll(x, -1) - np.roll(x, 1))
    base = MeanFieldState(x, y)
    return a, 2.0 * j * abs(s) * a, symmetry_orbit(base)
