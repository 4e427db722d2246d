"""Pure-Python LUCB loop used by PACMaxing.

Mirrors ``_lucb_ext.pyx`` operation for operation so both backends produce
bit-identical decisions from the same uniform stream.

State is carried in caller-owned numpy arrays and mutated in place; the
loop returns ``NEED_UNIFORMS`` when the uniform block runs dry and can be
resumed with a fresh block.
"""
import math

DONE = 0
NEED_UNIFORMS = 1

BACKEND = "python"


def _reward(kind, param, u):
    if kind == 0:
        return 1.0 if u < param else 0.0
    if kind == 1:
        return param
    return 0.0 if u < param else 1.0


def _kl(p, q):
    if q <= 0.0:
        return 0.0 if p <= 0.0 else math.inf
    if q >= 1.0:
        return 0.0 if p >= 1.0 else math.inf
    d = 0.0
    if p > 0.0:
        d += p * math.log(p / q)
    if p < 1.0:
        d += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return d


def kl_upper(mean, n, delta, tol=1e-12, max_iter=64):
    if mean >= 1.0:
        return 1.0
    level = math.log(1.0 / delta)
    lo, hi = mean, 1.0
    for _ in range(max_iter):
        if hi - lo <= tol * (1.0 - hi):
            break
        mid = 0.5 * (lo + hi)
        if n * _kl(mean, mid) <= level:
            lo = mid
        else:
            hi = mid
    return lo


def kl_lower(mean, n, delta, tol=1e-12, max_iter=64):
    if mean <= 0.0:
        return 0.0
    level = math.log(1.0 / delta)
    lo, hi = 0.0, mean
    for _ in range(max_iter):
        if hi - lo <= tol * lo:
            break
        mid = 0.5 * (lo + hi)
        if n * _kl(mean, mid) <= level:
            hi = mid
        else:
            lo = mid
    return hi


def _bounds(total, count, nf, delta, gamma, k1, bound):
    mean = total / count
    ds = delta / (k1 * nf * math.pow(count, gamma))
    if bound == 0:
        r = math.sqrt(math.log(1.0 / ds) / (2.0 * count))
        return min(1.0, mean + r), max(0.0, mean - r)
    return kl_upper(mean, count, ds), kl_lower(mean, count, ds)


def _select(sums, counts, upper, n):
    a = 0
    best = sums[0] / counts[0]
    for i in range(1, n):
        m = sums[i] / counts[i]
        if m > best:
            best = m
            a = i
    b = -1
    top = -math.inf
    for i in range(n):
        if i != a and upper[i] > top:
            top = upper[i]
            b = i
    return a, b


def lucb_run(sums, counts, kinds, params, upper, lower, uniforms, pos, t, budget,
             a, b, gap, eps, delta, gamma, k1, bound, trace=None):
    """Advance PACMaxing until it stops or needs more uniforms.

    ``t == 0`` starts a fresh run (every arm sampled once).  Returns
    ``(status, pos, t, a, b, gap)``.
    """
    n = len(sums)
    nf = float(n)
    s = sums.tolist()
    c = counts.tolist()
    kd = kinds.tolist()
    pr = params.tolist()
    up = upper.tolist()
    lo = lower.tolist()
    nu = len(uniforms)
    status = DONE
    try:
        if t == 0:
            if pos + n > nu:
                status = NEED_UNIFORMS
                return status, pos, t, a, b, gap
            for i in range(n):
                s[i] += _reward(kd[i], pr[i], float(uniforms[pos]))
                c[i] += 1
                pos += 1
            t = n
            for i in range(n):
                up[i], lo[i] = _bounds(s[i], c[i], nf, delta, gamma, k1, bound)
            a, b = _select(s, c, up, n)
            gap = math.inf
        while gap > eps and t + 2 <= budget:
            if pos + 2 > nu:
                status = NEED_UNIFORMS
                break
            s[a] += _reward(kd[a], pr[a], float(uniforms[pos]))
            s[b] += _reward(kd[b], pr[b], float(uniforms[pos + 1]))
            c[a] += 1
            c[b] += 1
            pos += 2
            t += 2
            up[a], lo[a] = _bounds(s[a], c[a], nf, delta, gamma, k1, bound)
            up[b], lo[b] = _bounds(s[b], c[b], nf, delta, gamma, k1, bound)
            a, b = _select(s, c, up, n)
            gap = up[b] - lo[a]
            if trace is not None:
                trace.append((t, a, b, gap))
        return status, pos, t, a, b, gap
    finally:
        sums[:] = s
        counts[:] = c
        upper[:] = up
        lower[:] = lo
