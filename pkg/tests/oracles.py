"""Independent reference values computed with mpmath at high precision."""
from __future__ import annotations

import mpmath as mp


def riccati_j(a: int, z):
    """j_a(z) for a >= -1 from the upward recurrence started at j_-1 = cos, j_0 = sin."""
    jm, j = mp.cos(z), mp.sin(z)
    if a == -1:
        return jm
    for k in range(a):
        jm, j = j, (2 * k + 1) / z * j - jm
    return j


def free_characteristic(a: int, beta, lam, sign: int = -1):
    """j_{a-1}(lam) sin(beta) + sign * j_a(lam) cos(beta), times lam^-a."""
    lam = mp.mpf(lam)
    if lam == 0:
        lam = mp.mpf("1e-30")
    return (riccati_j(a - 1, lam) * mp.sin(beta) + sign * riccati_j(a, lam) * mp.cos(beta)) / lam**a


def free_roots(a: int, beta, lo: float, hi: float, sign: int = -1, step: float = 0.05, dps: int = 40):
    """All real roots in [lo, hi] by a sign scan followed by bisection at high precision."""
    with mp.workdps(dps):
        beta = mp.mpf(beta)
        f = lambda t: free_characteristic(a, beta, t, sign)
        n = int((hi - lo) / step) + 1
        xs = [mp.mpf(lo) + k * mp.mpf(step) for k in range(n + 1)]
        vals = [f(x) for x in xs]
        roots = []
        for k in range(n):
            if vals[k] == 0:
                roots.append(float(xs[k]))
            elif vals[k] * vals[k + 1] < 0:
                roots.append(float(_bisect(f, xs[k], xs[k + 1], vals[k])))
        return roots


def _bisect(f, lo, hi, flo, tol=mp.mpf("1e-25")):
    while hi - lo > tol:
        mid = (lo + hi) / 2
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2
