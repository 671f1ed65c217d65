"""Excitation spectra of the effective quadratic Hamiltonian.

Two independent routes:

* momentum space -- closed-form dispersions after a two-mode squeezing
  transformation; valid whenever the anomalous coefficient is the same on
  every site;
* real space -- eigenvalues of ``Lambda M`` where ``M`` is the
  ``2N x 2N`` Hermitian Bogoliubov matrix; valid for any mean-field state.

All energies are in units of ``omega`` times ``params.omega``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PairingError
from .model import MeanFieldState, ModelParams, momentum_grid

UNIFORM_TOL = 1e-10
PAIR_TOL = 1e-10
STABLE_TOL = 1e-10


@dataclass(frozen=True)
class EffectiveCoefficients:
    """Per-site anomalous coefficient ``kappa_n`` and renormalized splitting."""

    kappa: np.ndarray
    delta_n_ratio: np.ndarray

    @property
    def uniform(self) -> bool:
        k = self.kappa
        return bool(np.max(k) - np.min(k) <= UNIFORM_TOL * max(1.0, float(np.max(np.abs(k)))))


@dataclass(frozen=True)
class BogoliubovSpectrum:
    energies: np.ndarray
    stable: bool
    max_imag: float
    normalization: float


def effective_coefficients(state: MeanFieldState, params: ModelParams) -> EffectiveCoefficients:
    ratio = np.sqrt(1.0 + 16.0 * params.g1**2 * state.x**2)
    kappa = params.g1**2 / ratio**3
    return EffectiveCoefficients(kappa=kappa, delta_n_ratio=ratio)


def _omega_q(q: float, kappa: float, params: ModelParams) -> float:
    return 1.0 - 2.0 * kappa + 2.0 * params.j_ratio * math.cos(params.physical_theta - q)


def _pair_dispersion(q: float, kappa: float, params: ModelParams) -> float:
    wq = _omega_q(q, kappa, params)
    wmq = _omega_q(-q, kappa, params)
    rad = (wq + wmq) ** 2 - 16.0 * kappa**2
    if rad < -1e-12 * (wq + wmq) ** 2:
        raise DomainError(f"mode q={q:.6g} is dynamically unstable (complex energy)")
    eps = 0.5 * (wq - wmq + math.sqrt(max(rad, 0.0)))
    if eps < -1e-12:
        raise DomainError(f"mode q={q:.6g} has negative energy {eps:.3g}")
    return params.omega * eps


def dispersion_normal(q: float, params: ModelParams) -> float:
    """Normal-phase excitation energy of ring momentum ``q``."""
    return _pair_dispersion(q, params.g1**2, params)


def dispersion_superradiant(q: float, coeffs: EffectiveCoefficients, params: ModelParams) -> float:
    """Excitation energy in a phase with site-uniform ``kappa``."""
    if not coeffs.uniform:
        raise DomainError(
            "kappa varies between sites; use excitation_energies (real-space route)"
        )
    return _pair_dispersion(q, float(np.mean(coeffs.kappa)), params)


def squeeze_parameter(q: float, params: ModelParams) -> float:
    """Two-mode squeezing amplitude removing the ``a_q a_-q`` terms.

    ``tanh(2 r_q) = 4 g1^2 / (omega_q + omega_-q)``, with zero squeezing
    phase.
    """
    wq = _omega_q(q, params.g1**2, params)
    wmq = _omega_q(-q, params.g1**2, params)
    num = wq + wmq + 4.0 * params.g1**2
    den = wq + wmq - 4.0 * params.g1**2
    if num <= 0.0 or den <= 0.0:
        raise DomainError(f"no real squeezing transformation for q={q:.6g}")
    return 0.25 * math.log(num / den)


def normal_spectrum(params: ModelParams) -> np.ndarray:
    """Sorted normal-phase energies over the ring momenta."""
    return np.sort([dispersion_normal(float(q), params) for q in momentum_grid(params.n_sites)])


def superradiant_spectrum(state: MeanFieldState, params: ModelParams) -> np.ndarray:
    coeffs = effective_coefficients(state, params)
    return np.sort([dispersion_superradiant(float(q), coeffs, params)
                    for q in momentum_grid(params.n_sites)])


def build_bogoliubov_matrix(state: MeanFieldState, params: ModelParams):
    """Return ``(M, Lambda)`` with ``H = alpha M alpha^dagger``.

    ``alpha = (a_1..a_N, a_1^dagger..a_N^dagger)``.
    """
    n = params.n_sites
    w = params.omega
    hop = params.j_ratio * w
    th = params.physical_theta
    kappa = effective_coefficients(state, params).kappa * w
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    for i in range(n):
        ip, im = (i + 1) % n, (i - 1) % n
        m[i, i] = w / 2 - kappa[i]
        m[n + i, n + i] = w / 2 - kappa[i]
        m[i, n + i] = -kappa[i]
        m[n + i, i] = -kappa[i]
        m[i, ip] += hop * np.exp(-1j * th) / 2
        m[i, im] += hop * np.exp(1j * th) / 2
        m[n + i, n + ip] += hop * np.exp(1j * th) / 2
        m[n + i, n + im] += hop * np.exp(-1j * th) / 2
    lam = np.diag(np.concatenate([np.ones(n), -np.ones(n)]))
    return m, lam


def calibrate_normalization(g1: float = 0.4) -> float:
    """Ratio of the physical gap to the positive eigenvalue of ``Lambda M``.

    Fixed on a single decoupled cavity in the normal phase, where the gap is
    ``sqrt(1 - 4 g1^2)``.
    """
    p = ModelParams(3, g1, 0.0, 0.0)
    m, lam = build_bogoliubov_matrix(MeanFieldState.zeros(3), p)
    ev = np.linalg.eigvals(lam @ m)
    return math.sqrt(1.0 - 4.0 * g1 * g1) / float(np.max(ev.real))


NORMALIZATION = calibrate_normalization()


def _pair(ev: np.ndarray, scale: float) -> tuple[np.ndarray, np.ndarray]:
    n = ev.size // 2
    order = np.argsort(ev.real, kind="stable")
    neg, pos = ev[order[:n]], ev[order[n:]]
    mismatch = np.abs(np.sort(pos.real) + np.sort(neg.real)[::-1])
    if np.max(mismatch) > PAIR_TOL * max(1.0, scale):
        raise PairingError(
            f"eigenvalues of Lambda M do not pair as +-eps (mismatch {np.max(mismatch):.3g})"
        )
    return pos, neg


def excitation_energies(state: MeanFieldState, params: ModelParams) -> BogoliubovSpectrum:
    """Real-space Bogoliubov energies, sorted ascending."""
    m, lam = build_bogoliubov_matrix(state, params)
    dyn = lam @ m
    ev, vecs = np.linalg.eig(dyn)
    pos, _ = _pair(ev, float(np.max(np.abs(ev))))
    max_imag = float(np.max(np.abs(ev.imag)))
    energies = np.sort(np.clip(pos.real, 0.0, None)) * NORMALIZATION
    # physical quasiparticles have positive symplectic norm v^+ Lambda v
    norms = np.real(np.einsum("ij,i,ij->j", vecs.conj(), np.diag(lam), vecs))
    real = np.abs(ev.imag) < STABLE_TOL
    wrong_sign = np.any((norms > 1e-12) & real & (ev.real < -PAIR_TOL))
    stable = bool(max_imag < STABLE_TOL and not wrong_sign)
    return BogoliubovSpectrum(energies, stable, max_imag, NORMALIZATION)
