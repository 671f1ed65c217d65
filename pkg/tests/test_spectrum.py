import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rabiring import analytic, spectrum
from rabiring.errors import DomainError, PairingError
from rabiring.meanfield import minimize
from rabiring.model import MeanFieldState, ModelParams, PhaseKind, momentum_grid

from conftest import J, random_state


def omega_q(q, p):
    return 1.0 - 2.0 * p.g1**2 + 2.0 * p.j_ratio * math.cos(p.theta - q)


def test_normal_dispersion_examples():
    assert spectrum.dispersion_normal(0.3, ModelParams(4, 0.4, 0.0)) == pytest.approx(0.6, abs=1e-15)
    assert spectrum.dispersion_normal(1.0, ModelParams(4, 0.5, 0.0)) == pytest.approx(0.0, abs=1e-15)
    p = ModelParams(4, 0.0, J, 1.1)
    for q in momentum_grid(4):
        assert spectrum.dispersion_normal(q, p) == pytest.approx(1 + 2 * J * math.cos(1.1 - q))


def test_normal_dispersion_beyond_boundary():
    with pytest.raises(DomainError, match="q="):
        spectrum.dispersion_normal(0.0, ModelParams(4, 0.6, J, math.pi))


def test_energies_scale_with_omega():
    a = spectrum.normal_spectrum(ModelParams(4, 0.45, J, 1.0))
    b = spectrum.normal_spectrum(ModelParams(4, 0.45, J, 1.0, omega=2.0))
    assert np.allclose(b, 2 * a, atol=1e-15)


@given(st.floats(-math.pi, math.pi), st.floats(0.0, 0.45), st.floats(0.0, math.pi))
def test_squeeze_parameter_diagonalizes_pair(q, g1, theta):
    # pair Hamiltonian A a^+a + B b^+b + C (ab + a^+b^+): after the squeeze the
    # anomalous coefficient must vanish and the quasiparticle energy must equal eps_q
    p = ModelParams(4, g1, J, theta)
    a, b, c = omega_q(q, p), omega_q(-q, p), 2 * g1**2
    r = spectrum.squeeze_parameter(q, p)
    assert c * math.cosh(2 * r) - 0.5 * (a + b) * math.sinh(2 * r) == pytest.approx(0.0, abs=1e-12)
    eps = a * math.cosh(r) ** 2 + b * math.sinh(r) ** 2 - c * math.sinh(2 * r)
    assert eps == pytest.approx(spectrum.dispersion_normal(q, p), abs=1e-12)
    assert r == pytest.approx(spectrum.squeeze_parameter(-q, p), abs=1e-14)


def test_squeeze_parameter_limits():
    assert spectrum.squeeze_parameter(0.7, ModelParams(4, 0.0, J, 1.0)) == 0.0
    p = ModelParams(4, 0.4, J, 0.0)
    w = omega_q(0.0, p)
    assert spectrum.squeeze_parameter(0.0, p) == pytest.approx(
        0.5 * math.atanh(4 * 0.4**2 / (2 * w)), abs=1e-15)
    with pytest.raises(DomainError):
        spectrum.squeeze_parameter(math.pi, ModelParams(4, 0.6, J, 0.0))


def test_effective_coefficients():
    c = spectrum.effective_coefficients(MeanFieldState.zeros(4), ModelParams(4, 0.45))
    assert np.all(c.kappa == 0.45**2) and c.uniform
    assert np.all(c.delta_n_ratio == 1.0)
    s = MeanFieldState([0.1, 0.2, 0.3])
    k = spectrum.effective_coefficients(s, ModelParams(3, 0.6)).kappa
    assert np.all(k > 0) and k[0] > k[1] > k[2]


def test_square_chiral_coefficients_uniform():
    sol = minimize(ModelParams(4, 0.55, J, math.pi / 2))
    assert spectrum.effective_coefficients(sol.state, sol.params).uniform


def test_triangle_chiral_has_one_distinct_site():
    sol = minimize(ModelParams(3, 0.55, J, math.pi / 2))
    c = spectrum.effective_coefficients(sol.state, sol.params)
    assert not c.uniform
    k = np.sort(c.kappa)
    assert k[1] - k[0] > 1e-6 and k[2] - k[1] < 1e-10
    with pytest.raises(DomainError, match="real-space"):
        spectrum.dispersion_superradiant(0.0, c, sol.params)


def test_superradiant_dispersion():
    p = ModelParams(4, 0.45, J, 0.7)
    c = spectrum.effective_coefficients(MeanFieldState.zeros(4), p)
    for q in momentum_grid(4):
        assert spectrum.dispersion_superradiant(q, c, p) == pytest.approx(
            spectrum.dispersion_normal(q, p), abs=1e-12)
    sol = minimize(ModelParams(4, 0.6, J, math.pi))
    e = spectrum.superradiant_spectrum(sol.state, sol.params)
    assert np.all(e > 0)


def test_matrix_decoupled_blocks():
    p = ModelParams(4, 0.4, 0.0)
    m, lam = spectrum.build_bogoliubov_matrix(MeanFieldState.zeros(4), p)
    g2 = 0.16
    for i in range(4):
        block = m[np.ix_([i, 4 + i], [i, 4 + i])]
        assert np.allclose(block, [[0.5 - g2, -g2], [-g2, 0.5 - g2]])
    m[np.ix_([0, 4], [0, 4])] = 0
    assert np.count_nonzero(np.abs(m) > 0) == 3 * 4
    assert np.array_equal(np.diag(lam), [1, 1, 1, 1, -1, -1, -1, -1])


@given(st.integers(3, 7), st.integers(0, 2**32 - 1), st.floats(-4, 4), st.floats(0, 0.8))
def test_matrix_structure(n, seed, theta, g1):
    p = ModelParams(n, g1, J, theta)
    s = random_state(np.random.default_rng(seed), n)
    m, _ = spectrum.build_bogoliubov_matrix(s, p)
    assert np.allclose(m, m.conj().T, atol=0)
    assert np.allclose(m[n:, n:], m[:n, :n].conj(), atol=0)
    flipped, _ = spectrum.build_bogoliubov_matrix(s, p.with_(theta=-p.physical_theta))
    assert np.allclose(m[n:, n:], flipped[:n, :n], atol=1e-15)


def test_normalization_is_calibrated():
    assert spectrum.NORMALIZATION == pytest.approx(2.0, abs=1e-12)
    for g1 in (0.1, 0.3, 0.45):
        assert spectrum.calibrate_normalization(g1) == pytest.approx(spectrum.NORMALIZATION, abs=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_route_equivalence_normal(n, rng):
    for _ in range(10):
        theta = rng.uniform(-math.pi, math.pi)
        p = ModelParams(n, 0.0, J, theta)
        g1c, _ = analytic.second_order_boundary(p.physical_theta, p)
        p = p.with_(g1=rng.uniform(0.0, 0.999) * g1c, theta=theta)
        res = spectrum.excitation_energies(MeanFieldState.zeros(n), p)
        assert res.stable
        assert np.max(np.abs(res.energies - spectrum.normal_spectrum(p))) < 1e-8


@pytest.mark.parametrize("theta, g1", [(0.0, 0.6), (1.0, 0.55), (math.pi / 2, 0.55),
                                       (1.6, 0.52), (2.5, 0.6), (math.pi, 0.7)])
def test_route_equivalence_square_superradiant(theta, g1):
    sol = minimize(ModelParams(4, g1, J, theta))
    assert sol.phase.kind is not PhaseKind.NORMAL
    res = spectrum.excitation_energies(sol.state, sol.params)
    ref = spectrum.superradiant_spectrum(sol.state, sol.params)
    assert res.stable
    assert np.max(np.abs(res.energies - ref)) < 1e-8


@pytest.mark.parametrize("n", [3, 4])
def test_pairing_and_stability_at_minima(n):
    for theta in np.linspace(0.0, math.pi, 6):
        for g1 in (0.45, 0.52, 0.6, 0.7):
            sol = minimize(ModelParams(n, g1, J, theta))
            m, lam = spectrum.build_bogoliubov_matrix(sol.state, sol.params)
            ev = np.linalg.eigvals(lam @ m)
            assert np.allclose(np.sort(ev.real), -np.sort(ev.real)[::-1], atol=1e-10)
            res = spectrum.excitation_energies(sol.state, sol.params)
            assert res.stable and np.all(res.energies >= -1e-10)


def test_pairing_error():
    with pytest.raises(PairingError):
        spectrum._pair(np.array([1.0, 2.0, -1.0, -3.0]), 3.0)


def test_saddle_is_unstable():
    p = ModelParams(4, 0.55, J, math.pi / 2)
    res = spectrum.excitation_energies(MeanFieldState.zeros(4), p)
    assert not res.stable
    assert res.max_imag > 1e-3


def test_metastable_collinear_state_inside_chiral_region():
    # the staggered collinear pattern survives as a local minimum above the
    # chiral ground state; its spectrum is real
    p = ModelParams(4, 0.53, J, math.pi / 2)
    sol = minimize(p)
    assert sol.phase.kind is PhaseKind.CHIRAL
    afm = [m for m in sol.local_minima if m.phase and m.phase.kind is PhaseKind.ANTIFERRO]
    assert afm and afm[0].excess > sol.excess_energy
    assert spectrum.excitation_energies(afm[0].state, p).stable


@pytest.mark.parametrize("n, which", [(4, 0), (4, 1), (3, 1)])
def test_two_modes_soften_at_triple_point(n, which):
    base = ModelParams(n, 0.0, J)
    theta = analytic.triple_points(base)[which]
    g1c, _ = analytic.second_order_boundary(theta, base)
    e = spectrum.normal_spectrum(base.with_(g1=g1c, theta=theta))
    assert e[0] < 1e-6 and e[1] < 1e-6
    assert e[2] > 1e-2


@pytest.mark.parametrize("n, theta", [(4, 0.3), (4, 1.57), (4, 2.9), (3, 1.0), (3, 2.5)])
def test_lowest_energy_closes_at_boundary(n, theta):
    base = ModelParams(n, 0.0, J, theta)
    g1c, _ = analytic.second_order_boundary(theta, base)
    below = [spectrum.normal_spectrum(base.with_(g1=g1c * (1 - d), theta=theta))[0]
             for d in (1e-2, 1e-4, 1e-6)]
    above = []
    for d in (1e-2, 1e-4, 1e-6):
        p = base.with_(g1=g1c * (1 + d), theta=theta)
        above.append(spectrum.excitation_energies(minimize(p).state, p).energies[0])
    assert below[0] > below[1] > below[2] > 0
    assert above[0] > above[1] > above[2] > 0
    assert below[2] < 1e-2 and above[2] < 1e-2
