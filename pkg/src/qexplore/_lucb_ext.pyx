# cython: language_level=3
"""Compiled LUCB loop used by PACMaxing; twin of ``_lucb_py``.

Keep the arithmetic identical to the Python version: same expressions,
same evaluation order, no fast-math.
"""
from libc.math cimport log, sqrt, pow, INFINITY

cdef enum:
    _DONE = 0
    _NEED_UNIFORMS = 1

DONE = _DONE
NEED_UNIFORMS = _NEED_UNIFORMS

BACKEND = "compiled"


cdef inline double _reward(int kind, double param, double u) nogil:
    if kind == 0:
        return 1.0 if u < param else 0.0
    if kind == 1:
        return param
    return 0.0 if u < param else 1.0


cdef inline double _kl(double p, double q) nogil:
    cdef double d
    if q <= 0.0:
        return 0.0 if p <= 0.0 else INFINITY
    if q >= 1.0:
        return 0.0 if p >= 1.0 else INFINITY
    d = 0.0
    if p > 0.0:
        d += p * log(p / q)
    if p < 1.0:
        d += (1.0 - p) * log((1.0 - p) / (1.0 - q))
    return d


cdef double _kl_upper(double mean, long n, double delta, double tol, int max_iter) nogil:
    cdef double level, lo, hi, mid
    cdef int it
    if mean >= 1.0:
        return 1.0
    level = log(1.0 / delta)
    lo = mean
    hi = 1.0
    for it in range(max_iter):
        if hi - lo <= tol * (1.0 - hi):
            break
        mid = 0.5 * (lo + hi)
        if n * _kl(mean, mid) <= level:
            lo = mid
        else:
            hi = mid
    return lo


cdef double _kl_lower(double mean, long n, double delta, double tol, int max_iter) nogil:
    cdef double level, lo, hi, mid
    cdef int it
    if mean <= 0.0:
        return 0.0
    level = log(1.0 / delta)
    lo = 0.0
    hi = mean
    for it in range(max_iter):
        if hi - lo <= tol * lo:
            break
        mid = 0.5 * (lo + hi)
        if n * _kl(mean, mid) <= level:
            hi = mid
        else:
            lo = mid
    return hi


def kl_upper(double mean, long n, double delta, double tol=1e-12, int max_iter=64):
    return _kl_upper(mean, n, delta, tol, max_iter)


def kl_lower(double mean, long n, double delta, double tol=1e-12, int max_iter=64):
    return _kl_lower(mean, n, delta, tol, max_iter)


cdef inline void _bounds(double total, long count, double nf, double delta, double gamma,
                         double k1, int bound, double* up, double* lo) nogil:
    cdef double mean = total / count
    cdef double ds = delta / (k1 * nf * pow(<double>count, gamma))
    cdef double r, u, l
    if bound == 0:
        r = sqrt(log(1.0 / ds) / (2.0 * count))
        u = mean + r
        l = mean - r
        up[0] = 1.0 if u > 1.0 else u
        lo[0] = 0.0 if l < 0.0 else l
    else:
        up[0] = _kl_upper(mean, count, ds, 1e-12, 64)
        lo[0] = _kl_lower(mean, count, ds, 1e-12, 64)


cdef inline void _select(double[::1] s, long[::1] c, double[::1] up, Py_ssize_t n,
                         Py_ssize_t* a_out, Py_ssize_t* b_out) nogil:
    cdef Py_ssize_t i, a = 0, b = -1
    cdef double best = s[0] / c[0]
    cdef double m, top = -INFINITY
    for i in range(1, n):
        m = s[i] / c[i]
        if m > best:
            best = m
            a = i
    for i in range(n):
        if i != a and up[i] > top:
            top = up[i]
            b = i
    a_out[0] = a
    b_out[0] = b


def lucb_run(double[::1] sums, long[::1] counts, int[::1] kinds, double[::1] params,
             double[::1] upper, double[::1] lower, double[::1] uniforms,
             Py_ssize_t pos, long t, double budget, Py_ssize_t a, Py_ssize_t b,
             double gap, double eps, double delta, double gamma, double k1, int bound,
             trace=None):
    """Advance PACMaxing until it stops or needs more uniforms.

    Same contract as ``_lucb_py.lucb_run``; ``trace`` is not supported here.
    """
    if trace is not None:
        raise ValueError("the compiled kernel does not record traces")
    cdef Py_ssize_t n = sums.shape[0]
    cdef Py_ssize_t nu = uniforms.shape[0]
    cdef Py_ssize_t i
    cdef double nf = <double>n
    cdef int status = _DONE
    with nogil:
        if t == 0:
            if pos + n > nu:
                status = _NEED_UNIFORMS
            else:
                for i in range(n):
                    sums[i] += _reward(kinds[i], params[i], uniforms[pos])
                    counts[i] += 1
                    pos += 1
                t = n
                for i in range(n):
                    _bounds(sums[i], counts[i], nf, delta, gamma, k1, bound, &upper[i], &lower[i])
                _select(sums, counts, upper, n, &a, &b)
                gap = INFINITY
        if status == _DONE:
            while gap > eps and t + 2 <= budget:
                if pos + 2 > nu:
                    status = _NEED_UNIFORMS
                    break
                sums[a] += _reward(kinds[a], params[a], uniforms[pos])
                sums[b] += _reward(kinds[b], params[b], uniforms[pos + 1])
                counts[a] += 1
                counts[b] += 1
                pos += 2
                t += 2
                _bounds(sums[a], counts[a], nf, delta, gamma, k1, bound, &upper[a], &lower[a])
                _bounds(sums[b], counts[b], nf, delta, gamma, k1, bound, &upper[b], &lower[b])
                _select(sums, counts, upper, n, &a, &b)
                gap = upper[b] - lower[a]
    return status, pos, t, a, b, gap
