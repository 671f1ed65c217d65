import os
import subprocess
import sys

import numpy as np
import pytest

from rabiring import kernels

python = kernels.get_backend("python")
try:
    compiled = kernels.get_backend("compiled")
except ImportError:
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled backend not built")

CASES = [(n, f) for n in (3, 4, 6) for f in (kernels.QRR, kernels.LMGR)]


def _args(n, functional, rng):
    g1 = rng.uniform(0.3, 0.8)
    hop_c, hop_s = rng.uniform(-0.1, 0.1, 2)
    return n, g1, hop_c, hop_s, functional


@needs_compiled
@pytest.mark.parametrize("n, functional", CASES)
def test_kernels_agree(n, functional):
    rng = np.random.default_rng(n + 10 * functional)
    for _ in range(20):
        args = _args(n, functional, rng)
        v = rng.uniform(-0.5, 0.5, 2 * n)
        assert compiled.excess_energy(v, *args) == pytest.approx(
            python.excess_energy(v, *args), abs=1e-14)
        assert np.allclose(compiled.gradient(v, *args), python.gradient(v, *args),
                           atol=1e-14, rtol=0)
        assert np.allclose(compiled.hessian(v, *args), python.hessian(v, *args),
                           atol=1e-14, rtol=0)


@needs_compiled
@pytest.mark.parametrize("n, functional", CASES)
def test_descend_agrees(n, functional):
    rng = np.random.default_rng(7 * n + functional)
    for _ in range(10):
        args = _args(n, functional, rng)
        v0 = rng.uniform(-0.5, 0.5, 2 * n)
        vc, fc, gc, _ = compiled.descend(v0, *args)
        vp, fp, gp, _ = python.descend(v0, *args)
        assert gc < 1e-10 and gp < 1e-10
        assert fc == pytest.approx(fp, abs=1e-12)
        assert np.allclose(vc, vp, atol=1e-8)


def test_lmgr_energy_infinite_outside_sphere():
    v = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    assert python.excess_energy(v, 3, 0.5, 0.0, 0.0, kernels.LMGR) == np.inf
    if compiled is not None:
        assert compiled.excess_energy(v, 3, 0.5, 0.0, 0.0, kernels.LMGR) == np.inf


def test_descend_does_not_modify_input():
    v0 = np.full(8, 0.2)
    python.descend(v0, 4, 0.6, 0.1, 0.0, kernels.QRR)
    assert np.all(v0 == 0.2)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def _backend_in_subprocess(name):
    env = dict(os.environ, RABI_RING_BACKEND=name)
    res = subprocess.run([sys.executable, "-c", "import rabiring; print(rabiring.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    return res.stdout.strip()


def test_backend_selection_by_environment():
    assert _backend_in_subprocess("python") == "python"
    expected = "compiled" if compiled is not None else "python"
    assert _backend_in_subprocess("auto") == expected
