"""Power-law exponents of the softening excitation energies.

Near a second-order boundary the ``k``-th excitation energy behaves as
``eps_k ~ |g1 - g1c|**gamma``.  Samples are taken at log-spaced relative
offsets on one side of the analytic ``g1c`` and ``log eps`` is regressed on
``log |g1 - g1c|``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analytic, spectrum
from .errors import FitQualityError, RabiRingError
from .meanfield import SeedSpec, minimize, warm_seeds
from .model import MeanFieldState, ModelParams, PhaseKind

DEFAULT_WINDOW = (1e-6, 1e-3)
DEFAULT_SAMPLES = 20
MIN_R_SQUARED = 0.999


@dataclass(frozen=True)
class ScalingFit:
    theta: float
    mode_index: int
    side: str
    gamma: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    g1c: float
    offsets: np.ndarray = field(repr=False)
    energies: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class FitFailure:
    theta: float
    mode_index: int
    side: str
    reason: str


@dataclass(frozen=True)
class TriplePointExponents:
    theta: float
    below: tuple[ScalingFit, ScalingFit]
    above: tuple[ScalingFit, ScalingFit]

    def gammas(self, side: str) -> tuple[float, float]:
        fits = self.below if side == "below" else self.above
        return fits[0].gamma, fits[1].gamma


def _offsets(window, n_samples):
    lo, hi = window
    if not 0 < lo < hi < 1:
        raise ValueError(f"invalid relative window {window}")
    return np.logspace(math.log10(lo), math.log10(hi), n_samples)


def sample_energies(params: ModelParams, theta: float, side: str,
                    window=DEFAULT_WINDOW, n_samples: int = DEFAULT_SAMPLES,
                    route: str = "momentum", seeds: SeedSpec | None = None):
    """Excitation spectra at the sampled couplings.

    Returns ``(g1c, offsets, spectra)`` with ``spectra[i]`` the sorted
    energies at relative offset ``offsets[i]``.  Below the boundary the
    normal-phase spectrum is used (``route`` selects the closed-form
    dispersion or the real-space matrix); above it the mean-field minimum
    is followed inward from the outermost sample by warm starts.
    """
    if side not in ("below", "above"):
        raise ValueError("side must be 'below' or 'above'")
    p = params.with_(theta=theta)
    g1c, _ = analytic.second_order_boundary(p.physical_theta, p)
    offsets = _offsets(window, n_samples)
    spectra = np.empty((n_samples, params.n_sites))
    if side == "below":
        for i, d in enumerate(offsets):
            pi = p.with_(g1=g1c * (1.0 - d), theta=theta)
            if route == "momentum":
                spectra[i] = spectrum.normal_spectrum(pi)
            else:
                spectra[i] = spectrum.excitation_energies(
                    MeanFieldState.zeros(p.n_sites), pi).energies
        return g1c, offsets, spectra
    prev = None
    for i in range(n_samples - 1, -1, -1):
        pi = p.with_(g1=g1c * (1.0 + offsets[i]), theta=theta)
        sol = minimize(pi, seeds if prev is None else warm_seeds(prev))
        if sol.phase.kind is PhaseKind.NORMAL:
            raise FitQualityError(
                f"no ordered minimum at g1/g1c - 1 = {offsets[i]:.3g}", offsets, None)
        prev = sol.state
        spectra[i] = spectrum.excitation_energies(sol.state, pi).energies
    return g1c, offsets, spectra


def _fit(offsets, energies, g1c):
    if np.any(energies <= 0.0):
        raise FitQualityError("nonpositive excitation energy in the fit window",
                              offsets, energies)
    lx = np.log(g1c * offsets)
    ly = np.log(energies)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    return float(slope), float(intercept), r2


def _make_fit(theta, mode_index, side, window, g1c, offsets, spectra, check=True):
    e = spectra[:, mode_index - 1]
    gamma, intercept, r2 = _fit(offsets, e, g1c)
    if check and (r2 < MIN_R_SQUARED or gamma <= 0.0):
        raise FitQualityError(
            f"power-law fit rejected (gamma={gamma:.4g}, r^2={r2:.6f})", offsets, e, r2)
    return ScalingFit(theta, mode_index, side, gamma, intercept, r2, tuple(window),
                      g1c, offsets, e)


def fit_exponent(params: ModelParams, theta: float, mode_index: int = 1,
                 side: str = "below", window=DEFAULT_WINDOW,
                 n_samples: int = DEFAULT_SAMPLES, route: str = "momentum",
                 seeds: SeedSpec | None = None) -> ScalingFit:
    """Fit ``gamma`` of the ``mode_index``-th lowest energy on one side of ``g1c``."""
    if not 1 <= mode_index <= params.n_sites:
        raise ValueError("mode_index out of range")
    g1c, offsets, spectra = sample_energies(params, theta, side, window, n_samples,
                                            route, seeds)
    return _make_fit(theta, mode_index, side, window, g1c, offsets, spectra)


def _scan_point(args):
    params, theta, modes, sides, window, n_samples = args
    out = []
    for side in sides:
        try:
            g1c, offsets, spectra = sample_energies(params, theta, side, window, n_samples)
        except RabiRingError as exc:
            out.extend(FitFailure(theta, m, side, str(exc)) for m in modes)
            continue
        for m in modes:
            try:
                out.append(_make_fit(theta, m, side, window, g1c, offsets, spectra))
            except RabiRingError as exc:
                out.append(FitFailure(theta, m, side, str(exc)))
    return out


def scan_exponents(params: ModelParams, thetas, modes=(1,), sides=("below", "above"),
                   window=DEFAULT_WINDOW, n_samples: int = DEFAULT_SAMPLES,
                   workers: int = 1) -> list:
    """``gamma(theta)`` curves; failed points are returned as :class:`FitFailure`."""
    jobs = [(params, float(t), tuple(modes), tuple(sides), window, n_samples) for t in thetas]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_scan_point, jobs))
    else:
        chunks = [_scan_point(j) for j in jobs]
    return [f for chunk in chunks for f in chunk]


def triple_point_exponents(params: ModelParams, which: int = -1,
                           window=DEFAULT_WINDOW,
                           n_samples: int = DEFAULT_SAMPLES) -> TriplePointExponents:
    """Exponents of the two modes that soften together at a triple point.

    ``which`` indexes :func:`rabiring.analytic.triple_points`.
    """
    theta = analytic.triple_points(params)[which]
    sides = {}
    for side in ("below", "above"):
        g1c, offsets, spectra = sample_energies(params, theta, side, window, n_samples)
        e2 = spectra[:, 1]
        if not e2[0] < 0.5 * e2[-1]:
            raise RabiRingError(
                f"only one mode softens at theta={theta:.6g} ({side}); not a triple point")
        sides[side] = tuple(
            _make_fit(theta, m, side, window, g1c, offsets, spectra) for m in (1, 2))
    return TriplePointExponents(theta, sides["below"], sides["above"])
