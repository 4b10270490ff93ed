import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from akns_inverse.bessel_core import (
    cosine_integral,
    free_solutions,
    green_kernel,
    primitive_F1,
    primitive_F2,
    riccati_eta,
    riccati_eta_scaled,
    riccati_j,
    riccati_j_scaled,
    sine_integral,
    trig_decomposition,
)
from akns_inverse.errors import InvalidParamsError


def mp_j(a, z):
    return mp.sqrt(mp.pi * z / 2) * mp.besselj(a + mp.mpf(1) / 2, z)


def mp_eta(a, z):
    return (-1) ** a * mp.sqrt(mp.pi * z / 2) * mp.besselj(-a - mp.mpf(1) / 2, z)


def test_low_order_closed_forms():
    assert abs(riccati_j(0, math.pi)) < 1e-15
    assert riccati_j(1, math.pi) == pytest.approx(1.0, abs=1e-15)
    assert abs(riccati_eta(0, math.pi / 2)) < 1e-15
    # eta_1(z) = cos z / z + sin z
    assert riccati_eta(1, math.pi / 2) == pytest.approx(1.0, abs=1e-15)
    z = np.linspace(-3, 3, 13)
    assert np.allclose(riccati_j(-1, z), np.cos(z), atol=1e-15)
    assert np.allclose(riccati_eta(-1, z), -np.sin(z), atol=1e-15)


def test_frozen_values():
    # mpmath (dps 40) Bessel J evaluations
    assert riccati_j(2, 0.5) == pytest.approx(0.0081855533039967063085, rel=1e-14)
    assert riccati_j(5, 7.3) == pytest.approx(1.2034886985604356539, rel=1e-13)
    assert riccati_eta(5, 7.3) == pytest.approx(-0.0052390430157827664191, rel=1e-11)
    assert riccati_j(10, 40.5) == pytest.approx(0.86945544006225922384, rel=1e-12)
    assert riccati_j(10, 3.0) == pytest.approx(0.000010578011679525769, rel=1e-12)
    assert riccati_eta(10, 3.0) == pytest.approx(14099.577566434173602, rel=1e-13)


@pytest.mark.parametrize("a", [0, 1, 2, 5, 10, 20])
def test_against_mpmath(a):
    zs = [0.05, 0.7, 2.5, a + 4.9, a + 5.1, 17.0, 63.0]
    for z in zs:
        ref_j = float(mp_j(a, mp.mpf(z)))
        assert riccati_j(a, z) == pytest.approx(ref_j, rel=1e-12, abs=1e-300)
        assert riccati_eta(a, z) == pytest.approx(float(mp_eta(a, mp.mpf(z))), rel=1e-12)


def test_complex_argument():
    z = 3.0 + 1.5j
    for a in (0, 2, 4):
        assert riccati_j(a, z) == pytest.approx(complex(mp_j(a, mp.mpc(z))), rel=1e-12)
        assert riccati_eta(a, z) == pytest.approx(complex(mp_eta(a, mp.mpc(z))), rel=1e-12)


def test_wronskian_normalization():
    z = 2.7
    w = riccati_j(2, z) * riccati_eta(3, z) - riccati_j(3, z) * riccati_eta(2, z)
    assert w == pytest.approx(1.0, abs=1e-13)


@given(a=st.integers(0, 10), z=st.floats(0.5, 100))
def test_recurrence(a, z):
    j = [riccati_j(k, z) for k in (a - 1, a, a + 1)]
    e = [riccati_eta(k, z) for k in (a - 1, a, a + 1)]
    scale = max(abs(j[2]), abs(j[1]) * (2 * a + 1) / z, abs(j[0]))
    assert abs(j[2] - ((2 * a + 1) / z * j[1] - j[0])) <= 1e-11 * scale
    scale = max(abs(e[2]), abs(e[1]) * (2 * a + 1) / z, abs(e[0]))
    assert abs(e[2] - ((2 * a + 1) / z * e[1] - e[0])) <= 1e-11 * scale


def test_scaled_functions_at_origin():
    for a in range(6):
        dfact = math.prod(range(2 * a + 1, 0, -2))
        assert riccati_j_scaled(a, 0.0) == pytest.approx(1.0 / dfact, rel=1e-15)
        assert riccati_eta_scaled(a, 0.0) == pytest.approx(max(math.prod(range(2 * a - 1, 0, -2)), 1), rel=1e-15)


def test_pole_and_order_errors():
    with pytest.raises(ZeroDivisionError):
        riccati_eta(1, 0.0)
    with pytest.raises(InvalidParamsError):
        riccati_j(21, 1.0)
    with pytest.raises(InvalidParamsError):
        riccati_j(-2, 1.0)


def test_trig_decomposition():
    t0 = trig_decomposition(0)
    assert t0.P_coeffs == (1.0,) and all(c == 0 for c in t0.I_coeffs)
    t1 = trig_decomposition(1)
    z = np.array([2.0, 5.0, 10.0])
    assert np.allclose(t1.j(z), np.sin(z) / z - np.cos(z), rtol=1e-14)
    assert np.allclose(t1.eta(z), np.cos(z) / z + np.sin(z), rtol=1e-14)
    for a in range(8):
        t = trig_decomposition(a)
        assert t.P_coeffs[0] == 1.0 and t.I_coeffs[0] == 0.0
    # the polynomial form cancels badly for |z| << a, so compare where it is used
    for a in (2, 6, 12):
        t = trig_decomposition(a)
        z = np.array([max(1.0, a + 5.0), 2 * a + 9.0, 50.0])
        ref = np.array([float(mp_j(a, mp.mpf(v))) for v in z])
        ref_e = np.array([float(mp_eta(a, mp.mpf(v))) for v in z])
        assert np.allclose(t.j(z), ref, rtol=1e-12, atol=0)
        assert np.allclose(t.eta(z), ref_e, rtol=1e-12, atol=0)


def test_ci_si():
    assert sine_integral(0.0) == 0.0
    assert cosine_integral(0.0) == 0.0
    assert sine_integral(10.0) == pytest.approx(1.6583475942188740493, abs=1e-12)
    assert cosine_integral(3.0) == pytest.approx(-1.5561981675616422244, abs=1e-12)
    z = np.array([0.5, 4.0, 4.01, 25.0])
    ref = [float(mp.quad(lambda t: (mp.cos(t) - 1) / t, [0, v])) for v in z]
    assert np.allclose(cosine_integral(z), ref, atol=1e-13)
    assert np.allclose(cosine_integral(-z), ref, atol=1e-13)


def test_primitives():
    z = np.linspace(0.0, 12.0, 25)
    assert np.allclose(primitive_F1(0, z), (1 - np.cos(2 * z)) / 2, atol=1e-13)
    assert np.allclose(primitive_F2(0, z), np.sin(2 * z) / 2, atol=1e-13)
    for a in range(6):
        assert primitive_F1(a, 0.0) == 0.0 and primitive_F2(a, 0.0) == 0.0
    # mpmath quadrature of the integrands
    assert primitive_F1(2, 3.0) == pytest.approx(1.6079258289632887623, rel=1e-12)
    assert primitive_F2(2, 3.0) == pytest.approx(3.7164068898117371345, rel=1e-12)
    assert primitive_F1(4, 20.0) == pytest.approx(9.7133643816417296499, rel=1e-12)


@pytest.mark.parametrize("a", [0, 1, 3, 6])
def test_primitive_derivatives_and_branch_agreement(a):
    h = 1e-5
    for z in (0.8, 2 * a + 5.5, 2 * a + 6.5, 30.0):
        d1 = (primitive_F1(a, z + h) - primitive_F1(a, z - h)) / (2 * h)
        d2 = (primitive_F2(a, z + h) - primitive_F2(a, z - h)) / (2 * h)
        assert d1 == pytest.approx(2 * riccati_j(a - 1, z) * riccati_j(a, z), abs=1e-7)
        f2 = riccati_eta(a - 1, z) * riccati_j(a, z) + riccati_eta(a, z) * riccati_j(a - 1, z)
        assert d2 == pytest.approx(f2, abs=1e-7)
    z = np.array([2 * a + 7.0, 40.0])
    for F in (primitive_F1, primitive_F2):
        assert np.allclose(F(a, z, method="closed"), F(a, z, method="quadrature"), atol=1e-11)


@given(a=st.integers(0, 8), x=st.floats(1e-3, 1.0), lam=st.floats(-60, 60))
def test_free_wronskian(a, x, lam):
    R, S = free_solutions(a, x, lam)
    assert R[0] * S[1] - R[1] * S[0] == pytest.approx(1.0, abs=1e-10)


def test_free_solution_values():
    R, S = free_solutions(0, 1.0, math.pi)
    assert np.allclose(R, [-1.0, 0.0], atol=1e-15)
    R, _ = free_solutions(2, 0.0, 3.0)
    assert np.all(R == 0)
    R, _ = free_solutions(0, 0.0, 3.0)
    assert np.allclose(R, [1.0, 0.0])
    R, S = free_solutions(2, 0.4, 3.1)
    assert R[0] * S[1] - R[1] * S[0] == pytest.approx(1.0, abs=1e-13)
    # lam -> 0 limit of R: (x^a / (2a-1)!!, 0)
    R, _ = free_solutions(3, 0.5, 0.0)
    assert np.allclose(R, [0.5**3 / 15, 0.0], atol=1e-16)


def test_green_kernel():
    G = green_kernel(0, 0.8, 0.3, 1.0)
    assert abs(green_kernel(2, 0.6, 0.6, 4.0)[0, 0]) < 1e-14
    # a = 0 closed form: R = (cos lx, -sin lx), S = (sin lx, cos lx)
    x, t, lam = 0.8, 0.3, 1.0
    Sx = np.array([np.sin(lam * x), np.cos(lam * x)])
    Rx = np.array([np.cos(lam * x), -np.sin(lam * x)])
    St = np.array([np.sin(lam * t), np.cos(lam * t)])
    Rt = np.array([np.cos(lam * t), -np.sin(lam * t)])
    assert np.allclose(G, np.outer(Sx, Rt) - np.outer(Rx, St), atol=1e-15)
    c, s = np.cos(lam * (x - t)), np.sin(lam * (x - t))
    assert np.allclose(G, [[s, -c], [c, s]], atol=1e-15)
    with pytest.raises(ValueError):
        green_kernel(1, 0.0, 0.3, 1.0)


@pytest.mark.parametrize("a", [0, 1, 3])
def test_green_kernel_bound(a):
    xs = np.linspace(0.05, 1.0, 10)
    lams = [0.5, 3.0 + 1.0j, 10.0, 25.0 - 2.0j, 4.0j]
    ratios = []
    for x in xs:
        for t in xs:
            if t > x:
                continue
            for lam in lams:
                G = green_kernel(a, x, t, lam)
                bound = np.exp(abs(np.imag(lam)) * (x - t)) * (x / (1 + abs(lam) * x)) ** a \
                    * ((1 + abs(lam) * t) / t) ** a
                ratios.append(np.max(np.abs(G)) / bound)
    assert max(ratios) < 50.0


def test_bessel_bounds():
    zs = np.concatenate([np.linspace(0.01, 50, 60), np.linspace(0.01, 30, 30) * (1 + 0.5j)])
    for a in (0, 2, 5):
        j = np.abs(riccati_j(a, zs))
        e = np.abs(riccati_eta(a, zs))
        w = np.abs(zs) / (1 + np.abs(zs))
        Cj = np.max(j / (np.exp(np.abs(zs.imag)) * w ** (a + 1)))
        Ce = np.max(e / (np.exp(np.abs(zs.imag)) * w ** (-a)))
        # the constants grow like the leading Taylor coefficients (2a-1)!!
        scale = math.prod(range(2 * a - 1, 0, -2))
        assert Cj < 5 and Ce < 5 * scale
