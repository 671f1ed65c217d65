"""Mean-field energy functionals, multi-start minimization and phase labels.

Two functionals are supported:

* ``QRR_CO`` -- the quantum Rabi ring ground-state energy in the
  classical-oscillator limit, divided by the atomic splitting so that it
  depends only on ``g1``, ``J/omega`` and ``theta``;
* ``LMGR`` -- the classical energy per unit spin length of the ring of
  Lipkin-Meshkov-Glick systems with XY exchange and DM couplings.

Their dispersive (DM-like) terms enter with opposite sign conventions, so a
given ``theta`` in one functional corresponds to ``-theta`` in the other;
the phase diagrams are mirror images and therefore coincide on
``[0, pi]``.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import (
    BracketError,
    ConvergenceError,
    DomainError,
    UnclassifiedPhaseError,
)
from .model import (
    NORMAL_THRESHOLD,
    Functional,
    MeanFieldState,
    ModelParams,
    PhaseKind,
    PhaseLabel,
    canonical_representative,
    momentum_grid,
    symmetry_orbit,
    unique_states,
)

log = logging.getLogger(__name__)

#: Gradient infinity-norm below which a descent counts as converged.
ACCEPT_GTOL = 1e-10
#: Relative energy window grouping minima into one degenerate set.
DEGENERACY_WINDOW = 1e-9
#: Relative tolerance of the phase templates.
PHASE_TOL = 1e-5
#: Two converged descents closer than this are the same minimum.
DEDUP_TOL = 1e-7
#: Smallest Hessian eigenvalue still accepted as a local minimum.
HESSIAN_FLOOR = -1e-10
#: Components smaller than this (relative) are roundoff and set to zero.
SNAP_TOL = 1e-14


def _functional_code(params: ModelParams) -> int:
    return kernels.QRR if params.functional is Functional.QRR_CO else kernels.LMGR


def _couplings(params: ModelParams, functional: Functional | None = None):
    functional = functional or params.functional
    th = params.physical_theta
    j = params.j_ratio
    if functional is Functional.QRR_CO:
        return 2.0 * j * math.cos(th), -2.0 * j * math.sin(th)
    return j * math.cos(th), j * math.sin(th)


def _zero_energy(n: int, functional: Functional) -> float:
    return -0.5 * n if functional is Functional.QRR_CO else -float(n)


def _kernel_args(params: ModelParams, functional: Functional):
    hop_c, hop_s = _couplings(params, functional)
    code = kernels.QRR if functional is Functional.QRR_CO else kernels.LMGR
    return params.n_sites, params.g1, hop_c, hop_s, code


def _vector(state: MeanFieldState, params: ModelParams) -> np.ndarray:
    if state.n_sites != params.n_sites:
        raise ValueError(
            f"state has {state.n_sites} sites but params describe {params.n_sites}"
        )
    return np.ascontiguousarray(state.as_vector(), dtype=float)


def _check_sphere(state: MeanFieldState):
    if np.any(state.x**2 + state.y**2 >= 1.0):
        raise DomainError("LMG ring state violates x_n^2 + y_n^2 < 1")


def energy_lmgr(state: MeanFieldState, params: ModelParams) -> float:
    """Classical LMG-ring energy ``E_MF / (omega S)``."""
    _check_sphere(state)
    v = _vector(state, params)
    e = kernels.excess_energy(v, *_kernel_args(params, Functional.LMGR))
    return e + _zero_energy(params.n_sites, Functional.LMGR)


def energy_qrr(state: MeanFieldState, params: ModelParams) -> float:
    """Rescaled quantum Rabi ring mean-field energy ``E_g / Delta``."""
    v = _vector(state, params)
    e = kernels.excess_energy(v, *_kernel_args(params, Functional.QRR_CO))
    return e + _zero_energy(params.n_sites, Functional.QRR_CO)


def energy(state: MeanFieldState, params: ModelParams) -> float:
    """Energy under the functional selected by ``params.functional``."""
    if params.functional is Functional.QRR_CO:
        return energy_qrr(state, params)
    return energy_lmgr(state, params)


def excess_energy(state: MeanFieldState, params: ModelParams) -> float:
    """Energy measured from the all-zero (normal / paramagnetic) state."""
    if params.functional is Functional.LMGR:
        _check_sphere(state)
    return kernels.excess_energy(
        _vector(state, params), *_kernel_args(params, params.functional)
    )


def gradient(state: MeanFieldState, params: ModelParams) -> np.ndarray:
    """Analytic derivatives ``(dE/dx_1..dE/dx_N, dE/dy_1..dE/dy_N)``."""
    if params.functional is Functional.LMGR:
        _check_sphere(state)
    return kernels.gradient(
        _vector(state, params), *_kernel_args(params, params.functional)
    )


def hessian(state: MeanFieldState, params: ModelParams) -> np.ndarray:
    if params.functional is Functional.LMGR:
        _check_sphere(state)
    return kernels.hessian(
        _vector(state, params), *_kernel_args(params, params.functional)
    )


def saddle_residual(state: MeanFieldState, params: ModelParams) -> np.ndarray:
    """Left-hand sides of the real- and imaginary-part stationarity equations.

    Written directly from the vanishing of the linear (off-diagonal) terms of
    the displaced Hamiltonian, in rescaled variables.  Returns the N real-part
    residuals followed by the N imaginary-part residuals.
    """
    x, y = state.x, state.y
    g2 = params.g1**2
    j = params.j_ratio
    c, s = math.cos(params.physical_theta), math.sin(params.physical_theta)
    xp, xm = np.roll(x, -1), np.roll(x, 1)
    yp, ym = np.roll(y, -1), np.roll(y, 1)
    re = x - 4.0 * g2 * x / np.sqrt(1.0 + 16.0 * g2 * x * x) + j * c * (xp + xm) + j * s * (ym - yp)
    im = y + j * s * (xp - xm) + j * c * (yp + ym)
    return np.concatenate([re, im])


def classify_phase(state: MeanFieldState, params: ModelParams,
                   rel_tol: float = PHASE_TOL) -> PhaseLabel:
    """Map a converged state onto the normal / ferro / antiferro / chiral table."""
    x, y = state.x, state.y
    lengths = state.site_lengths
    lmax = float(lengths.max())
    if lmax < NORMAL_THRESHOLD:
        return PhaseLabel(PhaseKind.NORMAL)
    tol = rel_tol * lmax
    n = state.n_sites
    xp, yp = np.roll(x, -1), np.roll(y, -1)
    if np.max(np.abs(y)) <= tol:
        if np.max(np.abs(x - xp)) <= tol:
            return PhaseLabel(PhaseKind.FERRO)
        if n % 2 == 0 and np.max(np.abs(x + xp)) <= tol:
            return PhaseLabel(PhaseKind.ANTIFERRO)
        th = params.physical_theta
        if n % 2 == 1 and abs(math.sin(th)) < 1e-12 and math.cos(th) > 0:
            # collinear but frustrated: the odd-ring antiferromagnet
            return PhaseLabel(PhaseKind.ANTIFERRO)
        raise UnclassifiedPhaseError(
            "collinear state is neither ferro- nor antiferro-ordered", state
        )
    chirality = float(np.sum(x * yp - xp * y))
    if abs(chirality) <= tol * lmax:
        raise UnclassifiedPhaseError("state has transverse components but no chirality", state)
    return PhaseLabel(PhaseKind.CHIRAL, 1 if chirality > 0 else -1)


@dataclass(frozen=True)
class SeedSpec:
    """Starting points for the multi-start minimizer.

    The default set is the zero state, one plane-wave template per ring
    momentum and ``n_random`` states drawn uniformly from the disk of radius
    ``random_radius`` on every site.
    """

    rng_seed: int = 42
    n_random: int = 32
    random_radius: float = 0.8
    templates: bool = True
    template_amplitude: float = 0.3
    include_zero: bool = True
    extra: tuple = ()

    def states(self, n_sites: int) -> list[np.ndarray]:
        out = []
        if self.include_zero:
            out.append(np.zeros(2 * n_sites))
        sites = np.arange(1, n_sites + 1)
        if self.templates:
            for q in momentum_grid(n_sites):
                a = self.template_amplitude
                out.append(np.concatenate([a * np.cos(q * sites), a * np.sin(q * sites)]))
        if self.n_random:
            rng = np.random.default_rng(self.rng_seed)
            r = self.random_radius * np.sqrt(rng.uniform(size=(self.n_random, n_sites)))
            phi = rng.uniform(0.0, 2.0 * np.pi, size=(self.n_random, n_sites))
            out.extend(np.concatenate([r * np.cos(phi), r * np.sin(phi)], axis=1))
        for s in self.extra:
            if isinstance(s, MeanFieldState):
                s = s.as_vector()
            out.append(np.asarray(s, dtype=float))
        return out


DEFAULT_SEEDS = SeedSpec()
TEMPLATE_SEEDS = SeedSpec(n_random=0)


def warm_seeds(*states) -> SeedSpec:
    """Seed set consisting only of the given states."""
    return SeedSpec(n_random=0, templates=False, include_zero=False, extra=tuple(states))


@dataclass(frozen=True)
class LocalMinimum:
    state: MeanFieldState
    excess: float
    phase: PhaseLabel | None


@dataclass(frozen=True)
class MeanFieldSolution:
    params: ModelParams
    state: MeanFieldState
    energy: float
    excess_energy: float
    gradient_norm: float
    residual_norm: float
    phase: PhaseLabel
    degeneracy: int
    degenerate_states: tuple = field(repr=False)
    local_minima: tuple = field(repr=False)

    @property
    def site_lengths(self) -> np.ndarray:
        return self.state.site_lengths


def _is_local_minimum(state: MeanFieldState, params: ModelParams) -> bool:
    h = hessian(state, params)
    scale = max(1.0, float(np.max(np.abs(np.diag(h)))))
    return float(np.linalg.eigvalsh(h)[0]) >= HESSIAN_FLOOR * scale


def _safe_classify(state, params):
    try:
        return classify_phase(state, params)
    except UnclassifiedPhaseError:
        return None


def _snap(v: np.ndarray) -> np.ndarray:
    # components at roundoff level carry no information; zero them (and -0.0)
    scale = max(float(np.max(np.abs(v))), 1.0)
    v = np.where(np.abs(v) < SNAP_TOL * scale, 0.0, v)
    return v + 0.0


def minimize(params: ModelParams, seeds: SeedSpec | None = None, *,
             gtol: float = 1e-12, max_iter: int = 100_000) -> MeanFieldSolution:
    """Global minimum of the selected functional over the seed set.

    Every seed is relaxed by damped Newton descent.  Distinct converged
    local minima (positive semidefinite Hessian) are collected; those within
    the relative energy window of the lowest form the degenerate set,
    completed by ring symmetry.
    """
    seeds = DEFAULT_SEEDS if seeds is None else seeds
    n = params.n_sites
    args = _kernel_args(params, params.functional)
    runs = []
    for v0 in seeds.states(n):
        v0 = np.ascontiguousarray(v0, dtype=float)
        if params.functional is Functional.LMGR and np.any(v0[:n] ** 2 + v0[n:] ** 2 >= 1.0):
            continue
        v, f, gn, _ = kernels.descend(v0, *args, gtol=gtol, max_iter=max_iter)
        runs.append((f, gn, v))
    if not runs:
        raise ConvergenceError("no admissible seed states")
    converged = [(f, v) for f, gn, v in runs if gn < ACCEPT_GTOL]
    if not converged:
        f, gn, v = min(runs, key=lambda r: r[0])
        raise ConvergenceError(
            f"no descent reached |grad| < {ACCEPT_GTOL:g} (best {gn:.3g})",
            best=MeanFieldState.from_vector(v), energy=f, gradient_norm=gn,
        )
    converged = [(f, _snap(v)) for f, v in converged]
    converged.sort(key=lambda r: r[0])
    distinct: list[tuple[float, MeanFieldState]] = []
    for f, v in converged:
        s = MeanFieldState.from_vector(v)
        if not any(s.close_to(t, DEDUP_TOL) for _, t in distinct):
            distinct.append((f, s))
    minima = [(f, s) for f, s in distinct if _is_local_minimum(s, params)]
    if not minima:
        # every stationary point found is a saddle; report the lowest anyway
        minima = distinct[:1]
    e0 = _zero_energy(n, params.functional)
    best_f, best_s = minima[0]
    window = DEGENERACY_WINDOW * max(abs(best_f + e0), 1.0)
    degenerate = []
    for f, s in minima:
        if f - best_f <= window:
            degenerate.extend(symmetry_orbit(s))
    degenerate = unique_states(degenerate, DEDUP_TOL)
    # drawn from the whole degenerate set, so accidental degeneracies (J = 0)
    # still resolve to the same member every time
    state = canonical_representative(degenerate)
    if float(state.site_lengths.max()) < NORMAL_THRESHOLD:
        state = MeanFieldState.zeros(n)
    best_f = excess_energy(state, params)
    phase = classify_phase(state, params)
    g = gradient(state, params)
    if params.functional is Functional.QRR_CO:
        residual = float(np.max(np.abs(saddle_residual(state, params))))
    else:
        residual = float(np.max(np.abs(g)))
    local = tuple(LocalMinimum(s, f, _safe_classify(s, params)) for f, s in minima)
    return MeanFieldSolution(
        params=params,
        state=state,
        energy=best_f + e0,
        excess_energy=best_f,
        gradient_norm=float(np.max(np.abs(g))),
        residual_norm=residual,
        phase=phase,
        degeneracy=1 if phase.kind is PhaseKind.NORMAL else len(degenerate),
        degenerate_states=tuple(degenerate),
        local_minima=local,
    )


@dataclass(frozen=True)
class ScanCell:
    theta: float
    g1: float
    status: str
    phase: PhaseLabel | None = None
    state: MeanFieldState | None = None
    energy: float = float("nan")
    degeneracy: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def x1(self) -> float:
        return float(self.state.x[0]) if self.state is not None else float("nan")


def _scan_row(params: ModelParams, theta: float, g1_values, seeds: SeedSpec) -> list[ScanCell]:
    row = []
    prev = None
    for g1 in g1_values:
        p = params.with_(theta=theta, g1=float(g1))
        spec = seeds if prev is None else replace(seeds, extra=seeds.extra + (prev,))
        try:
            sol = minimize(p, spec)
        except (ConvergenceError, UnclassifiedPhaseError) as exc:
            row.append(ScanCell(theta, float(g1), f"failed: {type(exc).__name__}"))
            continue
        prev = sol.state
        row.append(ScanCell(theta, float(g1), "ok", sol.phase, sol.state,
                            sol.energy, sol.degeneracy))
    return row


def _scan_row_star(args):
    return _scan_row(*args)


def scan_grid(params: ModelParams, theta_values, g1_values,
              seeds: SeedSpec | None = None, workers: int = 1) -> list[list[ScanCell]]:
    """Minimize on every ``(theta, g1)`` cell.

    Returns ``cells[i_theta][i_g1]``.  Each theta row is swept in increasing
    ``g1`` with the previous cell's minimum added to the seed set; rows are
    independent, so the result does not depend on ``workers``.
    """
    seeds = DEFAULT_SEEDS if seeds is None else seeds
    theta_values = [float(t) for t in theta_values]
    g1_values = [float(g) for g in g1_values]
    if len(theta_values) < 1 or len(g1_values) < 1:
        raise ValueError("empty scan range")
    jobs = [(params, t, g1_values, seeds) for t in theta_values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_scan_row_star, jobs))
    return [_scan_row(*job) for job in jobs]


def _restricted_energies(params: ModelParams, kinds, seeds: SeedSpec):
    sol = minimize(params, seeds)
    best = {k: math.inf for k in kinds}
    for m in sol.local_minima:
        if m.phase is not None and m.phase.kind in best:
            best[m.phase.kind] = min(best[m.phase.kind], m.excess)
    return sol, best


def first_order_boundary(params: ModelParams, theta_lo: float, theta_hi: float,
                         tol: float = 1e-6, seeds: SeedSpec | None = None) -> float:
    """Angle where the lowest minima of two superradiant phases cross.

    ``params.g1`` is held fixed.  The two bracket ends must lie in different
    non-normal phases; each bisection step compares the lowest local
    minimum of either phase.
    """
    seeds = DEFAULT_SEEDS if seeds is None else seeds
    lo = minimize(params.with_(theta=theta_lo), seeds)
    hi = minimize(params.with_(theta=theta_hi), seeds)
    a, b = lo.phase.kind, hi.phase.kind
    if PhaseKind.NORMAL in (a, b) or a is b:
        raise BracketError(
            f"bracket [{theta_lo}, {theta_hi}] does not straddle a first-order "
            f"boundary (phases {a.value}, {b.value})"
        )
    t_lo, t_hi = float(theta_lo), float(theta_hi)
    while abs(t_hi - t_lo) > tol:
        mid = 0.5 * (t_lo + t_hi)
        sol, e = _restricted_energies(params.with_(theta=mid), (a, b), seeds)
        if sol.phase.kind not in (a, b):
            raise BracketError(
                f"a third phase ({sol.phase.kind.value}) lies inside the bracket at theta={mid}"
            )
        if e[a] == math.inf and e[b] == math.inf:
            raise BracketError(f"neither {a.value} nor {b.value} is a minimum at theta={mid}")
        if e[a] <= e[b]:
            t_lo = mid
        else:
            t_hi = mid
    return 0.5 * (t_lo + t_hi)


def second_order_boundary_numeric(params: ModelParams, g1_lo: float, g1_hi: float,
                                  tol: float = 1e-8,
                                  seeds: SeedSpec | None = None) -> float:
    """Bisect in ``g1`` for the onset of a nonzero minimum at fixed theta."""
    seeds = TEMPLATE_SEEDS if seeds is None else seeds

    def ordered(g1):
        return minimize(params.with_(g1=g1), seeds).phase.kind is not PhaseKind.NORMAL

    if ordered(g1_lo) or not ordered(g1_hi):
        raise BracketError(
            f"g1 bracket [{g1_lo}, {g1_hi}] does not straddle the normal-phase boundary"
        )
    lo, hi = float(g1_lo), float(g1_hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ordered(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
