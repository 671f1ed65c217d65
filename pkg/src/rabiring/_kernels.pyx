# Compiled twin of _kernels_py.py; keep the two in lockstep.
from libc.math cimport sqrt, fabs, INFINITY
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

import numpy as np

cdef enum:
    QRR = 0
    LMGR = 1

cdef double ARMIJO = 1e-4
cdef double LMGR_EDGE = 1.0 - 1e-12
cdef double LMGR_CLAMP = 1.0 - 1e-9


cdef double _excess(const double* v, int n, double g1, double hop_c, double hop_s,
                    int functional) noexcept nogil:
    cdef int i, ip
    cdef double x, y, u, r2, e = 0.0, g2 = g1 * g1
    for i in range(n):
        ip = i + 1 if i + 1 < n else 0
        x = v[i]
        y = v[n + i]
        if functional == QRR:
            u = 16.0 * g2 * x * x
            e += x * x + y * y - 0.5 * u / (sqrt(1.0 + u) + 1.0)
        else:
            r2 = x * x + y * y
            if r2 >= 1.0:
                return INFINITY
            e += r2 / (1.0 + sqrt(1.0 - r2)) - 2.0 * g2 * x * x
        e += hop_c * (x * v[ip] + y * v[n + ip]) + hop_s * (x * v[n + ip] - v[ip] * y)
    return e


cdef void _gradient(const double* v, int n, double g1, double hop_c, double hop_s,
                    int functional, double* g) noexcept nogil:
    cdef int i, ip, im
    cdef double x, y, s, g2 = g1 * g1
    for i in range(n):
        ip = i + 1 if i + 1 < n else 0
        im = i - 1 if i > 0 else n - 1
        x = v[i]
        y = v[n + i]
        if functional == QRR:
            g[i] = 2.0 * x - 8.0 * g2 * x / sqrt(1.0 + 16.0 * g2 * x * x)
            g[n + i] = 2.0 * y
        else:
            s = sqrt(1.0 - x * x - y * y)
            g[i] = x / s - 4.0 * g2 * x
            g[n + i] = y / s
        g[i] += hop_c * (v[ip] + v[im]) + hop_s * (v[n + ip] - v[n + im])
        g[n + i] += hop_c * (v[n + ip] + v[n + im]) + hop_s * (v[im] - v[ip])


cdef void _hessian(const double* v, int n, double g1, double hop_c, double hop_s,
                   int functional, double* h) noexcept nogil:
    cdef int i, ip, m = 2 * n
    cdef double x, y, r, s, s3, g2 = g1 * g1
    for i in range(m * m):
        h[i] = 0.0
    for i in range(n):
        ip = i + 1 if i + 1 < n else 0
        x = v[i]
        y = v[n + i]
        if functional == QRR:
            r = 1.0 + 16.0 * g2 * x * x
            h[i * m + i] = 2.0 - 8.0 * g2 / (r * sqrt(r))
            h[(n + i) * m + n + i] = 2.0
        else:
            r = 1.0 - x * x - y * y
            s = sqrt(r)
            s3 = r * s
            h[i * m + i] = 1.0 / s + x * x / s3 - 4.0 * g2
            h[(n + i) * m + n + i] = 1.0 / s + y * y / s3
            h[i * m + n + i] = x * y / s3
            h[(n + i) * m + i] = x * y / s3
        h[i * m + ip] += hop_c
        h[ip * m + i] += hop_c
        h[(n + i) * m + n + ip] += hop_c
        h[(n + ip) * m + n + i] += hop_c
        h[i * m + n + ip] += hop_s
        h[(n + ip) * m + i] += hop_s
        h[ip * m + n + i] -= hop_s
        h[(n + i) * m + ip] -= hop_s


cdef int _cholesky(double* a, int m) noexcept nogil:
    """In-place lower Cholesky factor; returns 0 when not positive definite."""
    cdef int i, j, k
    cdef double s
    for j in range(m):
        s = a[j * m + j]
        for k in range(j):
            s -= a[j * m + k] * a[j * m + k]
        if not s > 0.0:
            return 0
        s = sqrt(s)
        a[j * m + j] = s
        for i in range(j + 1, m):
            a[i * m + j] = a[i * m + j]
            for k in range(j):
                a[i * m + j] -= a[i * m + k] * a[j * m + k]
            a[i * m + j] /= s
    return 1


cdef void _chol_solve(const double* low, int m, const double* g, double* p) noexcept nogil:
    """Solve L L^T p = -g."""
    cdef int i, k
    cdef double s
    for i in range(m):
        s = -g[i]
        for k in range(i):
            s -= low[i * m + k] * p[k]
        p[i] = s / low[i * m + i]
    for i in range(m - 1, -1, -1):
        s = p[i]
        for k in range(i + 1, m):
            s -= low[k * m + i] * p[k]
        p[i] = s / low[i * m + i]


cdef double _inf_norm(const double* g, int m) noexcept nogil:
    cdef int i
    cdef double r = 0.0
    for i in range(m):
        if fabs(g[i]) > r:
            r = fabs(g[i])
    return r


cdef void _clamp_sphere(double* v, int n) noexcept nogil:
    cdef int i
    cdef double r2, scale
    for i in range(n):
        r2 = v[i] * v[i] + v[n + i] * v[n + i]
        if r2 >= LMGR_EDGE:
            scale = LMGR_CLAMP / sqrt(r2)
            v[i] *= scale
            v[n + i] *= scale


cdef double _newton_direction(const double* h, const double* g, int m, double* work,
                              double* p) noexcept nogil:
    cdef int i
    cdef double tau = 0.0, scale = 1e-8
    for i in range(m):
        if fabs(h[i * m + i]) > scale:
            scale = fabs(h[i * m + i])
    while tau < 1e10:
        memcpy(work, h, m * m * sizeof(double))
        for i in range(m):
            work[i * m + i] += tau
        if _cholesky(work, m):
            _chol_solve(work, m, g, p)
            return tau
        tau = 2.0 * tau if 2.0 * tau > 1e-3 * scale else 1e-3 * scale
    for i in range(m):
        p[i] = -g[i]
    return tau


cdef int _descend(double* v, int n, double g1, double hop_c, double hop_s, int functional,
                  double gtol, long max_iter, double* f_out, double* gn_out,
                  double* buf) noexcept nogil:
    cdef int m = 2 * n, i, accepted
    cdef long it = 0
    cdef double f, ft, gn, gp, t, tau
    cdef double* g = buf
    cdef double* p = buf + m
    cdef double* vt = buf + 2 * m
    cdef double* gt = buf + 3 * m
    cdef double* h = buf + 4 * m
    cdef double* work = buf + 4 * m + m * m
    if functional == LMGR:
        _clamp_sphere(v, n)
    f = _excess(v, n, g1, hop_c, hop_s, functional)
    _gradient(v, n, g1, hop_c, hop_s, functional, g)
    gn = _inf_norm(g, m)
    while it < max_iter and gn >= gtol:
        it += 1
        _hessian(v, n, g1, hop_c, hop_s, functional, h)
        tau = _newton_direction(h, g, m, work, p)
        gp = 0.0
        for i in range(m):
            gp += g[i] * p[i]
        if not gp < 0.0:
            gp = 0.0
            for i in range(m):
                p[i] = -g[i]
                gp -= g[i] * g[i]
            tau = 1.0
        t = 1.0
        accepted = 0
        while t > 1e-16:
            for i in range(m):
                vt[i] = v[i] + t * p[i]
            ft = _excess(vt, n, g1, hop_c, hop_s, functional)
            if ft <= f + ARMIJO * t * gp:
                accepted = 1
            elif tau == 0.0 and t == 1.0 and ft <= f + 1e-14 * (1.0 + fabs(f)):
                _gradient(vt, n, g1, hop_c, hop_s, functional, gt)
                accepted = _inf_norm(gt, m) < gn
            if accepted:
                break
            t *= 0.5
        if not accepted:
            break
        memcpy(v, vt, m * sizeof(double))
        if functional == LMGR:
            _clamp_sphere(v, n)
        f = _excess(v, n, g1, hop_c, hop_s, functional)
        _gradient(v, n, g1, hop_c, hop_s, functional, g)
        gn = _inf_norm(g, m)
    f_out[0] = f
    gn_out[0] = gn
    return it


def excess_energy(double[::1] v, int n, double g1, double hop_c, double hop_s, int functional):
    return _excess(&v[0], n, g1, hop_c, hop_s, functional)


def gradient(double[::1] v, int n, double g1, double hop_c, double hop_s, int functional):
    out = np.empty(2 * n)
    cdef double[::1] g = out
    _gradient(&v[0], n, g1, hop_c, hop_s, functional, &g[0])
    return out


def hessian(double[::1] v, int n, double g1, double hop_c, double hop_s, int functional):
    out = np.empty((2 * n, 2 * n))
    cdef double[:, ::1] h = out
    _hessian(&v[0], n, g1, hop_c, hop_s, functional, &h[0, 0])
    return out


def descend(v0, int n, double g1, double hop_c, double hop_s, int functional,
            double gtol=1e-12, long max_iter=100000):
    """Damped-Newton descent; returns ``(v, excess_energy, gradient_inf_norm, iterations)``."""
    out = np.array(v0, dtype=np.float64, copy=True)
    cdef double[::1] v = out
    cdef int m = 2 * n
    cdef double f, gn
    cdef long it
    cdef double* buf = <double*> malloc((4 * m + 2 * m * m) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            it = _descend(&v[0], n, g1, hop_c, hop_s, functional, gtol, max_iter, &f, &gn, buf)
    finally:
        free(buf)
    return out, f, gn, it
