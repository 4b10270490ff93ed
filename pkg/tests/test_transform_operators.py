import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from akns_inverse.akns_solutions import OperatorParams, Potential
from akns_inverse.checks import kernel_suite, pairing_suite, transform_roundtrip_suite
from akns_inverse.errors import InvalidParamsError
from akns_inverse.mesh import Mesh, MeshConfig, default_mesh
from akns_inverse.transform_operators import (
    FunctionPair,
    b_inverse,
    monomial_U,
    monomial_V,
    pairing_identity_check,
    phi_pair,
    phi_psi,
    psi_pair,
    s_adjoint,
    s_forward,
    s_inverse,
    t_adjoint,
    t_forward,
)


@pytest.fixture(scope="module")
def mesh():
    return default_mesh()


def _pair(mesh, seed):
    rng = np.random.default_rng(seed)
    x = mesh.x
    c = rng.standard_normal((2, 5))
    return FunctionPair(np.polyval(c[0], x) + np.sin(3 * x), np.polyval(c[1], x) * np.cos(x), mesh)


def test_pair_algebra(mesh):
    u = FunctionPair(mesh.x, 2 * mesh.x, mesh)
    assert u.perp().f[5] == u.g[5] and u.perp().g[5] == -u.f[5]
    assert u.inner(u.perp()) == pytest.approx(0.0, abs=1e-16)
    assert (2 * u - u).sup_distance(u) == 0.0
    assert u.inner(u) == pytest.approx(5 / 3, rel=1e-14)
    assert u.norm() == pytest.approx(np.sqrt(5 / 3), rel=1e-14)


def test_pair_validation(mesh):
    with pytest.raises(InvalidParamsError):
        FunctionPair(np.zeros(3), np.zeros(3), mesh)
    with pytest.raises(InvalidParamsError):
        FunctionPair(np.full(mesh.size, np.inf), np.zeros(mesh.size), mesh)
    other = Mesh(MeshConfig(order=8))
    with pytest.raises(InvalidParamsError):
        FunctionPair.zeros(mesh).inner(FunctionPair.zeros(other))


def test_phi_psi_a0_closed_form():
    z = np.linspace(-4, 9, 31)
    phi, psi = phi_psi(0, z)
    assert np.allclose(phi, np.stack([-np.sin(2 * z), -np.cos(2 * z)], -1), atol=1e-15)
    assert np.allclose(psi, np.stack([-np.cos(2 * z), np.sin(2 * z)], -1), atol=1e-15)


def test_phi_psi_a1_closed_form():
    z = np.array([0.4, 1.0, 3.3, 12.0])
    j0, j1 = np.sin(z), np.sin(z) / z - np.cos(z)
    e0, e1 = np.cos(z), np.cos(z) / z + np.sin(z)
    phi, psi = phi_psi(1, z)
    assert np.allclose(phi, np.stack([-2 * j0 * j1, j1**2 - j0**2], -1), atol=1e-14)
    assert np.allclose(psi, np.stack([-e0 * j1 - e1 * j0, -e0 * j0 + e1 * j1], -1), atol=1e-14)
    # Psi_a stays finite at the origin
    assert np.all(np.isfinite(phi_psi(3, np.array([0.0]))[1]))


def test_t0_is_minus_identity(mesh):
    u = _pair(mesh, 0)
    assert t_forward(0, u).sup_distance(-u) == 0.0
    assert t_adjoint(0, u).sup_distance(-u) == 0.0


def test_s1_on_monomials(mesh):
    # U_1[t^2] = (1 - x^2)/2 and U_2[t^3] = x (1 - x^2)/2
    x = mesh.x
    out = s_forward(1, FunctionPair(x**2, x**3, mesh))
    assert np.max(np.abs(out.f - (2 * x**2 - 1))) < 1e-13
    assert np.max(np.abs(out.g - (2 * x**3 - x))) < 1e-13


def test_t1_pairing_against_mpmath(mesh):
    # T_1 (t^2, t^3) = (2t^2 - 1, 2t^3 - t), so both sides reduce to elementary integrals
    lam = 5.5
    chk = pairing_identity_check(1, lam, FunctionPair(mesh.x**2, mesh.x**3, mesh))
    with mp.workdps(30):
        s_side = mp.quad(lambda t: mp.sin(2 * lam * t) * (2 * t**2 - 1) + mp.cos(2 * lam * t) * (2 * t**3 - t), [0, 1])
        c_side = mp.quad(lambda t: mp.cos(2 * lam * t) * (2 * t**2 - 1) - mp.sin(2 * lam * t) * (2 * t**3 - t), [0, 1])

        def j(z):
            return mp.sin(z), mp.sin(z) / z - mp.cos(z)

        def phi_dot(t):
            j0, j1 = j(lam * t)
            return -2 * j0 * j1 * t**2 + (j1**2 - j0**2) * t**3

        direct = mp.quad(phi_dot, [0, 1])
    assert chk.rhs[0] == pytest.approx(float(s_side), abs=1e-13)
    assert chk.rhs[1] == pytest.approx(float(c_side), abs=1e-13)
    assert chk.lhs[0] == pytest.approx(float(direct), abs=1e-13)
    assert chk.deviation < 1e-12


def test_pairing_at_zero_lambda(mesh):
    fp = _pair(mesh, 3)
    chk = pairing_identity_check(1, 0.0, fp)
    assert chk.lhs[0] == pytest.approx(0.0, abs=1e-15)
    assert chk.deviation < 1e-10
    # the sin/cos pair degenerates to (0, 1): the second component of T_1[fp] has zero mean
    assert chk.rhs[0] == pytest.approx(mesh.integrate(t_forward(1, fp).g), abs=1e-14)
    assert abs(mesh.integrate(t_forward(1, fp).g)) < 1e-10


@pytest.mark.parametrize("a", [1, 2, 3, 5])
def test_kernel_annihilation(a):
    for row in kernel_suite(OperatorParams(a), Potential.zero()):
        assert row.passed, row


@pytest.mark.parametrize("a", [0, 1, 2, 3])
def test_roundtrips_and_pairings(a):
    V = Potential.zero()
    for row in transform_roundtrip_suite(OperatorParams(a), V) + pairing_suite(OperatorParams(a), V):
        assert row.passed, row


@pytest.mark.parametrize("a", [1, 2, 4])
def test_left_inverses(mesh, a):
    u = _pair(mesh, a)
    assert s_inverse(a, s_forward(a, u)).sup_distance(u) < 1e-9
    assert b_inverse(a, t_forward(a, u)).sup_distance(u) < 1e-9


@pytest.mark.parametrize("a", [1, 3])
def test_adjoints(mesh, a):
    u, v = _pair(mesh, 10), _pair(mesh, 11)
    assert s_forward(a, u).inner(v) == pytest.approx(u.inner(s_adjoint(a, v)), abs=1e-13)
    assert t_forward(a, u).inner(v) == pytest.approx(u.inner(t_adjoint(a, v)), abs=1e-12)


def test_factors_commute(mesh):
    # every factor is a Mellin convolution on (0, 1), so S_1 S_2 = S_2 S_1
    u = _pair(mesh, 4)
    lhs = s_forward(1, s_forward(2, u))
    assert lhs.sup_distance(s_forward(2, s_forward(1, u))) < 1e-13 * np.max(np.abs(lhs.f))


def test_range_of_adjoint_kernel(mesh):
    # <T_a u, V_{2k+1}> = <u, T_a* V_{2k+1}> = 0 for k < a
    u = _pair(mesh, 5)
    for a in (1, 2, 3):
        Tu = t_forward(a, u)
        for k in range(a):
            assert abs(Tu.inner(monomial_V(2 * k + 1, mesh))) < 1e-10
            assert abs(Tu.inner(monomial_U(2 * k, mesh))) < 1e-10


def test_phi_recursion(mesh):
    for a in (0, 1, 2):
        for lam in (1.0, 20.0):
            lhs = phi_pair(a + 1, lam, mesh)
            rhs = -s_adjoint(a + 1, phi_pair(a, lam, mesh))
            assert lhs.sup_distance(rhs) < 1e-9
            assert psi_pair(a + 1, lam, mesh).sup_distance(-s_adjoint(a + 1, psi_pair(a, lam, mesh))) < 1e-9


@given(a=st.integers(0, 3), lam=st.floats(0.1, 25.0), seed=st.integers(0, 2**32 - 1))
def test_pairing_property(a, lam, seed):
    chk = pairing_identity_check(a, lam, _pair(default_mesh(), seed))
    assert chk.deviation < 1e-8


def test_boundedness_across_refinements():
    # ||S_a u|| / ||u|| over random probes: a mesh-independent bound
    estimates = []
    for cfg in (MeshConfig(h_max=1 / 20, ratio=3.0), MeshConfig(), MeshConfig(h_max=1 / 80, ratio=1.5)):
        m = Mesh(cfg)
        ratios = []
        for seed in range(6):
            u = _pair(m, seed)
            ratios.append(max(s_forward(a, u).norm() / u.norm() for a in (1, 2, 3)))
            ratios.append(t_forward(3, u).norm() / u.norm())
        estimates.append(max(ratios))
    assert max(estimates) < 10.0
    assert max(estimates) - min(estimates) < 1e-8
