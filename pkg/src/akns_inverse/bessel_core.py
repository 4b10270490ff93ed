"""Riccati-Bessel functions of half-integer order and related kernels.

Conventions used throughout the package::

    j_a(z)   = sqrt(pi z / 2) J_{a+1/2}(z)           j_{-1} = cos,  j_0 = sin
    eta_a(z) = (-1)^a sqrt(pi z / 2) J_{-a-1/2}(z)   eta_{-1} = -sin, eta_0 = cos

Both families obey f_{a+1} = (2a+1)/z f_a - f_{a-1}.  The scaled functions

    jt_a(z)   = j_a(z) / z^(a+1)
    etat_a(z) = z^a eta_a(z)

are entire and even; they are what the solution code uses near the origin.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import sici

from .errors import InvalidParamsError

MAX_ORDER = 20
EULER_GAMMA = 0.57721566490153286061


def _check_order(a: int, lowest: int = 0) -> int:
    if isinstance(a, bool) or int(a) != a:
        raise InvalidParamsError(f"order must be an integer, got {a!r}")
    a = int(a)
    if a < lowest or a > MAX_ORDER:
        raise InvalidParamsError(f"order {a} outside supported range [{lowest}, {MAX_ORDER}]")
    return a


def _as_array(z):
    z = np.asarray(z)
    if z.dtype.kind not in "fc":
        z = z.astype(float)
    return z


def _shift(z, a: int):
    """Return (sin(z - a pi/2), cos(z - a pi/2)) without rounding a*pi/2."""
    s, c = np.sin(z), np.cos(z)
    k = a % 4
    if k == 0:
        return s, c
    if k == 1:
        return -c, s
    if k == 2:
        return -s, -c
    return c, -s


def _sinc(z):
    z = _as_array(z)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    z2 = z * z
    return np.where(small, 1.0 - z2 / 6.0 + z2 * z2 / 120.0, np.sin(zs) / zs)


# ---------------------------------------------------------------------------
# Hankel symbols and the trigonometric decomposition
# ---------------------------------------------------------------------------

def hankel_symbol(a: int, m: int) -> int:
    """(nu, m) for nu = a + 1/2, i.e. (a+m)! / (m! (a-m)!); zero when m > a."""
    if a < 0:
        a = -a - 1
    if m < 0 or m > a:
        return 0
    return factorial(a + m) // (factorial(m) * factorial(a - m))


@lru_cache(maxsize=None)
def _trig_fractions(a: int) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    b = -a - 1 if a < 0 else a
    P = [Fraction(0)] * (b + 1)
    I = [Fraction(0)] * (b + 1)
    for k in range(b + 1):
        c = Fraction((-1) ** (k // 2) * hankel_symbol(b, k), 2 ** k)
        if k % 2 == 0:
            P[k] = c
        else:
            I[k] = c
    return tuple(P), tuple(I)


@dataclass(frozen=True)
class TrigDecomposition:
    """j_a(z) = sin(z - a pi/2) P(1/z) + cos(z - a pi/2) I(1/z), eta likewise.

    ``P_coeffs[k]`` multiplies w^k with w = 1/z (only even k nonzero), and
    ``I_coeffs[k]`` likewise (only odd k nonzero).
    """

    a: int
    P_coeffs: tuple[float, ...]
    I_coeffs: tuple[float, ...]

    def P(self, w):
        return np.polynomial.polynomial.polyval(w, self.P_coeffs)

    def I(self, w):
        return np.polynomial.polynomial.polyval(w, self.I_coeffs)

    def j(self, z):
        z = _as_array(z)
        w = 1.0 / z
        s, c = _shift(z, self.a)
        return s * self.P(w) + c * self.I(w)

    def eta(self, z):
        z = _as_array(z)
        w = 1.0 / z
        s, c = _shift(z, self.a)
        return c * self.P(w) - s * self.I(w)


def trig_decomposition(a: int) -> TrigDecomposition:
    a = _check_order(a, lowest=-1)
    P, I = _trig_fractions(a)
    return TrigDecomposition(a, tuple(float(c) for c in P), tuple(float(c) for c in I))


# ---------------------------------------------------------------------------
# Riccati-Bessel functions
# ---------------------------------------------------------------------------

def _jt_series(a: int, z):
    """Ascending series of j_a(z)/z^(a+1) = sum (-z^2/2)^k / (k! (2a+2k+1)!!)."""
    z = _as_array(z)
    h = -0.5 * z * z
    dfact = 1.0
    for k in range(1, 2 * a + 2, 2):
        dfact *= k
    term = np.full(z.shape, 1.0 / dfact, dtype=z.dtype)
    total = term.copy()
    for k in range(1, 200):
        term = term * h / (k * (2 * a + 2 * k + 1))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def _switch_radius(a: int) -> float:
    return a + 5.0


def _series_ok(a: int, z):
    # terms of the ascending series decrease from the start when |z|^2 < 2(2a+3)
    return np.abs(z) ** 2 < 2.0 * (2 * a + 3)


def _j_miller(a: int, z):
    """j_a(z) by downward recurrence normalized with j_{-1} = cos, j_0 = sin."""
    z = _as_array(z)
    start = a + int(np.max(np.abs(z), initial=0.0)) + 30
    hi = np.zeros(z.shape, dtype=np.result_type(z, float))
    cur = np.full(z.shape, 1e-30, dtype=hi.dtype)
    keep = None
    for k in range(start, -1, -1):
        # cur = f_k, hi = f_{k+1}; produce f_{k-1}
        if k == a:
            keep = cur.copy()
        prev = (2 * k + 1) / z * cur - hi
        big = np.abs(prev) > 1e150
        if np.any(big):
            scale = np.where(big, 1e-150, 1.0)
            prev, cur = prev * scale, cur * scale
            if keep is not None:
                keep = keep * scale
        hi, cur = cur, prev
        if k == 0:
            f0, fm1 = hi, cur
    if a == -1:
        keep = fm1
    s, c = np.sin(z), np.cos(z)
    norm = (f0 * s + fm1 * c) / (f0 * f0 + fm1 * fm1)
    return keep * norm


def _j_regimes(a: int, z):
    """Return (j_a(z), jt_a(z)) choosing series, Miller band or trig form."""
    z = _as_array(z)
    dtype = np.result_type(z, float)
    j = np.empty(z.shape, dtype=dtype)
    jt = np.empty(z.shape, dtype=dtype)
    ser = _series_ok(a, z)
    trig = (~ser) & (np.abs(z) >= _switch_radius(a))
    mid = ~(ser | trig)
    if np.any(ser):
        jt[ser] = _jt_series(a, z[ser])
        j[ser] = z[ser] ** (a + 1) * jt[ser]
    if np.any(mid):
        j[mid] = _j_miller(a, z[mid])
        jt[mid] = j[mid] / z[mid] ** (a + 1)
    if np.any(trig):
        j[trig] = trig_decomposition(a).j(z[trig])
        jt[trig] = j[trig] / z[trig] ** (a + 1)
    return j, jt


def riccati_j_scaled(a: int, z):
    """jt_a(z) = j_a(z)/z^(a+1); entire, equal to 1/(2a+1)!! at z = 0."""
    a = _check_order(a, lowest=-1)
    out = _j_regimes(a, z)[1]
    return out[()] if out.ndim == 0 else out


def riccati_j(a: int, z):
    """j_a(z): ascending series near 0, Miller recurrence band, trig form for |z| >= a + 5."""
    a = _check_order(a, lowest=-1)
    out = _j_regimes(a, z)[0]
    return out[()] if out.ndim == 0 else out


def _etat_all(a: int, z):
    """[etat_{-1}, etat_0, ..., etat_a] by the (stable) upward recurrence."""
    z = _as_array(z)
    prev = -_sinc(z)
    cur = np.cos(z)
    out = [prev, cur]
    z2 = z * z
    for k in range(a):
        prev, cur = cur, (2 * k + 1) * cur - z2 * prev
        out.append(cur)
    return out


def riccati_eta_scaled(a: int, z):
    """etat_a(z) = z^a eta_a(z); entire, equal to (2a-1)!! at z = 0."""
    a = _check_order(a, lowest=-1)
    return _etat_all(max(a, 0), z)[a + 1]


def riccati_eta(a: int, z):
    """eta_a(z); raises ZeroDivisionError at the pole z = 0 when a >= 1."""
    a = _check_order(a, lowest=-1)
    z = _as_array(z)
    if a >= 1 and np.any(z == 0):
        raise ZeroDivisionError(f"eta_{a} has a pole at z = 0")
    if a == -1:
        out = -np.sin(z)
    else:
        out = riccati_eta_scaled(a, z) / z ** a if a else np.cos(z)
    return out[()] if np.ndim(out) == 0 else out


def scaled_pair(a: int, z):
    """(jt_{a-1}, jt_a, etat_{a-1}, etat_a) at z, for a >= 0."""
    a = _check_order(a)
    eta = _etat_all(a, z)
    return riccati_j_scaled(a - 1, z), riccati_j_scaled(a, z), eta[a], eta[a + 1]


# ---------------------------------------------------------------------------
# Free solutions and the free Green kernel
# ---------------------------------------------------------------------------

def free_solutions(a: int, x, lam):
    """Free fundamental pair R, S of the AKNS system with zero potential.

    R = lam^-a (j_{a-1}(lam x), -j_a(lam x)),  S = lam^a (-eta_{a-1}, eta_a),
    written through the scaled functions so lam -> 0 is harmless.  Returns
    arrays of shape broadcast(x, lam) + (2,).  S is infinite at x = 0 for a >= 1.
    """
    x = _as_array(x)
    lam = _as_array(lam)
    z = x * lam
    jm, ja, em, ea = scaled_pair(a, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        R = np.stack([x ** a * jm, -lam * x ** (a + 1) * ja], axis=-1)
        S = np.stack([-lam * x ** (1 - a) * em, x ** (-float(a)) * ea], axis=-1)
    return R, S


def green_kernel(params, x, t, lam):
    """G(x,t,lam) = S(x) R(t)^T - R(x) S(t)^T for the free system (2x2 array)."""
    a = params.a if hasattr(params, "a") else int(params)
    if np.any(np.asarray(x) <= 0) or np.any(np.asarray(t) <= 0):
        raise ValueError("green_kernel needs x, t > 0")
    Rx, Sx = free_solutions(a, x, lam)
    Rt, St = free_solutions(a, t, lam)
    return Sx[..., :, None] * Rt[..., None, :] - Rx[..., :, None] * St[..., None, :]


# ---------------------------------------------------------------------------
# ci, Si and the primitives F1, F2
# ---------------------------------------------------------------------------

def _ci_series(z):
    z = _as_array(z)
    z2 = z * z
    term = np.ones(z.shape, dtype=z.dtype)
    total = np.zeros(z.shape, dtype=z.dtype)
    for k in range(1, 80):
        term = -term * z2 / ((2 * k - 1) * (2 * k))
        inc = term / (2 * k)
        total = total + inc
        if np.all(np.abs(inc) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def cosine_integral(z):
    """ci(z) = int_0^z (cos t - 1)/t dt = Ci(z) - gamma - ln z (entire, even)."""
    z = _as_array(z)
    small = np.abs(z) <= 4.0
    out = np.empty(z.shape, dtype=np.result_type(z, float))
    out[small] = _ci_series(z[small])
    zb = z[~small]
    if zb.size:
        if zb.dtype.kind == "c":
            _, ci_classic = sici(zb)
            out[~small] = ci_classic - EULER_GAMMA - np.log(zb)
        else:
            _, ci_classic = sici(np.abs(zb))
            out[~small] = ci_classic - EULER_GAMMA - np.log(np.abs(zb))
    return out[()] if out.ndim == 0 else out


def sine_integral(z):
    """Si(z) = int_0^z sin t / t dt."""
    z = _as_array(z)
    si, _ = sici(z)
    return si[()] if np.ndim(si) == 0 else si


def _pmul(u, v):
    out = [Fraction(0)] * (len(u) + len(v) - 1)
    for i, ui in enumerate(u):
        if ui:
            for k, vk in enumerate(v):
                out[i + k] += ui * vk
    return out


def _padd(u, v, sign=1):
    n = max(len(u), len(v))
    u = list(u) + [Fraction(0)] * (n - len(u))
    v = list(v) + [Fraction(0)] * (n - len(v))
    return [x + sign * y for x, y in zip(u, v)]


@dataclass(frozen=True)
class PrimitivePolynomials:
    """Exact coefficient lists (in w = 1/z) of p_a, q_a, r_a and the F2 offset."""

    a: int
    p: tuple[Fraction, ...]
    q: tuple[Fraction, ...]
    r: tuple[Fraction, ...]
    f2_offset: Fraction


@lru_cache(maxsize=None)
def primitive_polynomials(a: int) -> PrimitivePolynomials:
    """Solve F1' = 2 j_{a-1} j_a for the polynomial parts of the closed form.

    With f1 = S(w) sin 2z + C(w) cos 2z + N(w), matching coefficients of
    F1 = -a ci(2z) + p cos 2z + q sin 2z + r gives a triangular recursion.
    """
    a = _check_order(a)
    Pm, Im = _trig_fractions(a - 1)
    Pa, Ia = _trig_fractions(a)
    sgn = (-1) ** a
    S = [sgn * c for c in _padd(_pmul(Pm, Pa), _pmul(Im, Ia), -1)]
    C = [sgn * c for c in _padd(_pmul(Pm, Ia), _pmul(Im, Pa))]
    Nn = _padd(_pmul(Pm, Ia), _pmul(Im, Pa), -1)
    deg = 2 * a + 4

    def coef(u, m):
        return u[m] if m < len(u) else Fraction(0)

    p = [Fraction(0)] * (deg + 1)
    q = [Fraction(0)] * (deg + 1)
    for m in range(deg + 1):
        pm1 = p[m - 1] if m else Fraction(0)
        qm1 = q[m - 1] if m else Fraction(0)
        q[m] = (coef(C, m) + (a if m == 1 else 0) + (m - 1) * pm1) / 2
        p[m] = -(coef(S, m) + (m - 1) * qm1) / 2
    if p[-1] or q[-1] or p[-2] or q[-2]:
        raise ArithmeticError(f"primitive recursion did not terminate for a={a}")
    if coef(Nn, 0) or coef(Nn, 1) != a:
        raise ArithmeticError("unexpected non-oscillatory part")
    r = [Fraction(0)] * (deg + 1)
    for m in range(2, len(Nn)):
        r[m - 1] = -coef(Nn, m) / (m - 1)
    # constant of r: the z^0 Laurent coefficient of the closed form must vanish
    const = Fraction(0)
    const2 = Fraction(0)
    for k in range(deg + 1):
        if k % 2 == 0:
            j = k // 2
            cos_c = Fraction((-1) ** j * 2 ** k, factorial(k))
            const += p[k] * cos_c
            const2 += q[k] * cos_c
        else:
            j = (k - 1) // 2
            sin_c = Fraction((-1) ** j * 2 ** k, factorial(k))
            const += q[k] * sin_c
            const2 -= p[k] * sin_c
    r[0] = -const - r[0]

    def trim(u):
        u = list(u)
        while len(u) > 1 and u[-1] == 0:
            u.pop()
        return tuple(u)

    return PrimitivePolynomials(a, trim(p), trim(q), trim(r), -const2)


def _primitive_quadrature(which: int, a: int, z):
    """F(z) = z * int_0^1 f(s z) ds with composite Gauss-Legendre panels."""
    z = _as_array(z)
    flat = z.reshape(-1)
    out = np.zeros(flat.shape, dtype=np.result_type(flat, float))
    nodes, weights = np.polynomial.legendre.leggauss(24)
    for idx, zi in enumerate(flat):
        if zi == 0:
            continue
        panels = int(np.ceil(abs(zi) / 2.0)) + 1
        edges = np.linspace(0.0, 1.0, panels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        s = (mid[:, None] + half[:, None] * nodes[None, :]).reshape(-1)
        w = (half[:, None] * weights[None, :]).reshape(-1)
        u = s * zi
        jm, ja, em, ea = scaled_pair(a, u)
        if which == 1:
            f = 2.0 * u ** (2 * a + 1) * jm * ja
        else:
            f = u * u * em * ja + ea * jm
        out[idx] = zi * np.sum(w * f)
    return out.reshape(z.shape)


def _primitive_closed(which: int, a: int, z):
    pp = primitive_polynomials(a)
    w = 1.0 / z
    pv = np.polynomial.polynomial.polyval(w, [float(c) for c in pp.p])
    qv = np.polynomial.polynomial.polyval(w, [float(c) for c in pp.q])
    if which == 1:
        rv = np.polynomial.polynomial.polyval(w, [float(c) for c in pp.r])
        return -a * cosine_integral(2 * z) + pv * np.cos(2 * z) + qv * np.sin(2 * z) + rv
    return (a * sine_integral(2 * z) - pv * np.sin(2 * z) + qv * np.cos(2 * z)
            + float(pp.f2_offset))


def _primitive(which: int, a: int, z, method: str):
    a = _check_order(a)
    z = _as_array(z)
    if method == "quadrature":
        out = _primitive_quadrature(which, a, z)
    elif method == "closed":
        out = _primitive_closed(which, a, z)
    elif method == "auto":
        big = np.abs(z) >= 2.0 * a + 6.0
        out = np.empty(z.shape, dtype=np.result_type(z, float))
        out[~big] = _primitive_quadrature(which, a, z[~big])
        if np.any(big):
            out[big] = _primitive_closed(which, a, z[big])
    else:
        raise ValueError(f"unknown method {method!r}")
    return out[()] if np.ndim(out) == 0 else out


def primitive_F1(a: int, z, method: str = "auto"):
    """Antiderivative of 2 j_{a-1} j_a vanishing at 0."""
    return _primitive(1, a, z, method)


def primitive_F2(a: int, z, method: str = "auto"):
    """Antiderivative of eta_{a-1} j_a + eta_a j_{a-1} vanishing at 0."""
    return _primitive(2, a, z, method)
