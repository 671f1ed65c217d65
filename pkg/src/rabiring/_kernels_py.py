"""Pure-Python (numpy) implementation of the hot kernels.

Mirrors ``_kernels.pyx`` function for function; selected automatically when
the compiled extension is unavailable.

Energies are returned relative to the all-zero state, which keeps the small
energy differences near a second-order boundary representable.  The
nearest-neighbour bond is ``hop_c (x x' + y y') + hop_s (x y' - x' y)``.
"""
import numpy as np

QRR = 0
LMGR = 1

_ARMIJO = 1e-4
_LMGR_EDGE = 1.0 - 1e-12
_LMGR_CLAMP = 1.0 - 1e-9


def excess_energy(v, n, g1, hop_c, hop_s, functional):
    x = v[:n]
    y = v[n:]
    xp = np.roll(x, -1)
    yp = np.roll(y, -1)
    g2 = g1 * g1
    if functional == QRR:
        u = 16.0 * g2 * x * x
        onsite = x * x + y * y - 0.5 * u / (np.sqrt(1.0 + u) + 1.0)
    else:
        r2 = x * x + y * y
        if np.any(r2 >= 1.0):
            return np.inf
        onsite = r2 / (1.0 + np.sqrt(1.0 - r2)) - 2.0 * g2 * x * x
    bond = hop_c * (x * xp + y * yp) + hop_s * (x * yp - xp * y)
    return float(np.sum(onsite + bond))


def gradient(v, n, g1, hop_c, hop_s, functional):
    x = v[:n]
    y = v[n:]
    xp, yp = np.roll(x, -1), np.roll(y, -1)
    xm, ym = np.roll(x, 1), np.roll(y, 1)
    g2 = g1 * g1
    if functional == QRR:
        gx = 2.0 * x - 8.0 * g2 * x / np.sqrt(1.0 + 16.0 * g2 * x * x)
        gy = 2.0 * y
    else:
        s = np.sqrt(1.0 - x * x - y * y)
        gx = x / s - 4.0 * g2 * x
        gy = y / s
    gx = gx + hop_c * (xp + xm) + hop_s * (yp - ym)
    gy = gy + hop_c * (yp + ym) + hop_s * (xm - xp)
    return np.concatenate([gx, gy])


def hessian(v, n, g1, hop_c, hop_s, functional):
    x = v[:n]
    y = v[n:]
    g2 = g1 * g1
    h = np.zeros((2 * n, 2 * n))
    idx = np.arange(n)
    if functional == QRR:
        h[idx, idx] = 2.0 - 8.0 * g2 / (1.0 + 16.0 * g2 * x * x) ** 1.5
        h[n + idx, n + idx] = 2.0
    else:
        r = 1.0 - x * x - y * y
        s = np.sqrt(r)
        s3 = r * s
        h[idx, idx] = 1.0 / s + x * x / s3 - 4.0 * g2
        h[n + idx, n + idx] = 1.0 / s + y * y / s3
        h[idx, n + idx] = x * y / s3
        h[n + idx, idx] = x * y / s3
    ip = (idx + 1) % n
    # np.add.at accumulates correctly even for tiny rings
    np.add.at(h, (idx, ip), hop_c)
    np.add.at(h, (ip, idx), hop_c)
    np.add.at(h, (n + idx, n + ip), hop_c)
    np.add.at(h, (n + ip, n + idx), hop_c)
    np.add.at(h, (idx, n + ip), hop_s)
    np.add.at(h, (n + ip, idx), hop_s)
    np.add.at(h, (ip, n + idx), -hop_s)
    np.add.at(h, (n + idx, ip), -hop_s)
    return h


def _clamp_sphere(v, n):
    x = v[:n]
    y = v[n:]
    r2 = x * x + y * y
    over = r2 >= _LMGR_EDGE
    if np.any(over):
        scale = _LMGR_CLAMP / np.sqrt(r2[over])
        x[over] *= scale
        y[over] *= scale


def _newton_direction(h, g):
    """Solve (H + tau I) p = -g with the smallest tau that admits Cholesky."""
    m = g.size
    tau = 0.0
    scale = max(np.max(np.abs(np.diag(h))), 1e-8)
    while tau < 1e10:
        try:
            low = np.linalg.cholesky(h + tau * np.eye(m))
        except np.linalg.LinAlgError:
            tau = max(2.0 * tau, 1e-3 * scale)
            continue
        z = np.linalg.solve(low, -g)
        return np.linalg.solve(low.T, z), tau
    return -g, tau


def descend(v0, n, g1, hop_c, hop_s, functional, gtol=1e-12, max_iter=100000):
    """Damped-Newton descent from ``v0``.

    Returns ``(v, excess_energy, gradient_inf_norm, iterations)``.
    """
    v = np.array(v0, dtype=float)
    args = (n, g1, hop_c, hop_s, functional)
    if functional == LMGR:
        _clamp_sphere(v, n)
    f = excess_energy(v, *args)
    g = gradient(v, *args)
    gn = float(np.max(np.abs(g)))
    it = 0
    while it < max_iter and gn >= gtol:
        it += 1
        p, tau = _newton_direction(hessian(v, *args), g)
        gp = float(g @ p)
        if not gp < 0.0:
            p = -g
            gp = -float(g @ g)
            tau = 1.0
        t = 1.0
        accepted = False
        while t > 1e-16:
            vt = v + t * p
            ft = excess_energy(vt, *args)
            if ft <= f + _ARMIJO * t * gp:
                accepted = True
            elif tau == 0.0 and t == 1.0 and ft <= f + 1e-14 * (1.0 + abs(f)):
                # Newton step limited by roundoff in f: judge it by the gradient
                gt = gradient(vt, *args)
                accepted = float(np.max(np.abs(gt))) < gn
            if accepted:
                break
            t *= 0.5
        if not accepted:
            break
        v = vt
        if functional == LMGR:
            _clamp_sphere(v, n)
        f = excess_energy(v, *args)
        g = gradient(v, *args)
        gn = float(np.max(np.abs(g)))
    return v, f, gn, it
