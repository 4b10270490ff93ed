import math

import numpy as np
import pytest

from akns_inverse import spectral_map_inverse as smi
from akns_inverse.akns_solutions import OperatorParams, Potential
from akns_inverse.errors import DivergenceError, InvalidParamsError, SolverError
from akns_inverse.potentials import flat_trig, trig
from akns_inverse.spectral_forward import spectrum
from akns_inverse.spectral_map_inverse import (
    NewtonConfig,
    SpectralTarget,
    forward_map,
    frechet_derivative,
    grad_kappa_tilde,
    inverse_basis,
    inverse_derivative,
    isospectral_directions,
    isospectral_flow,
    loglog_slope,
    newton_invert,
    residual_diagnostics,
    uniqueness_probe,
)
from akns_inverse.transform_operators import FunctionPair


@pytest.fixture(scope="module")
def zero():
    return Potential.zero()


@pytest.fixture(scope="module")
def V():
    return trig(3, norm=0.7)


def _pair(mesh, seed):
    rng = np.random.default_rng(seed)
    x = mesh.x
    c = rng.standard_normal((2, 4))
    return FunctionPair(np.polyval(c[0], x), np.polyval(c[1], x), mesh)


def test_target_validation():
    P = OperatorParams(0)
    with pytest.raises(InvalidParamsError):
        SpectralTarget(P, 3, np.zeros(5), np.zeros(7))
    with pytest.raises(InvalidParamsError):
        SpectralTarget(P, 3, np.full(7, np.nan), np.zeros(7))
    with pytest.raises(InvalidParamsError):
        SpectralTarget.zeros(P, 3) - SpectralTarget.zeros(P, 4)
    t = SpectralTarget(P, 1, [3.0, 0, 0], [0, 4.0, 0])
    assert t.norm() == 5.0
    assert t.indices.tolist() == [-1, 0, 1]


def test_newton_config_validation():
    for kw in ({"damping": 0.0}, {"damping": 1.5}, {"tol": 0}, {"N": 0}, {"trust_radius": -1}):
        with pytest.raises(InvalidParamsError):
            NewtonConfig(**kw)


def test_forward_map_zero_a0(zero):
    t = forward_map(OperatorParams(0), zero, 12)
    assert np.max(np.abs(t.vector())) < 1e-12


def test_forward_map_zero_a1_bessel_offsets(zero):
    t = forward_map(OperatorParams(1), zero, 8)
    # lam_{1,1} = 4.4934..., centre 3 pi / 2
    assert t.xi[9] == pytest.approx(4.493409457909064 - 1.5 * math.pi, abs=1e-11)
    assert np.all(np.isfinite(t.eta)) and t.xi.dtype.kind == "f"
    assert np.max(np.abs(t.xi + t.xi[::-1])) < 1e-11


def test_forward_map_linearization(V):
    P = OperatorParams(1, 0.2)
    v = _pair(V.mesh, 1)
    base = forward_map(P, V, 8)
    lin = frechet_derivative(P, V, 8, v)
    errs = []
    for h in (1e-2, 1e-3):
        moved = forward_map(P, V.plus(v.f, v.g, h), 8)
        errs.append(np.linalg.norm((moved - base).vector() - h * lin.vector()))
    assert loglog_slope([1e-2, 1e-3], errs) == pytest.approx(2.0, abs=0.2)


def test_frechet_closed_form_a0(zero):
    x = zero.mesh.x
    v = FunctionPair(np.zeros(x.size), np.cos(2 * np.pi * x), zero.mesh)
    d = frechet_derivative(OperatorParams(0), zero, 4, v)
    assert d.xi[4 + 1] == pytest.approx(-0.5, abs=1e-13)
    assert frechet_derivative(OperatorParams(0), zero, 4, FunctionPair.zeros(zero.mesh)).norm() == 0.0


@pytest.mark.parametrize("a", [0, 2])
def test_frechet_against_differences(V, a):
    P = OperatorParams(a, 0.1)
    v, h, N = _pair(V.mesh, 2), 1e-4, 10
    d = frechet_derivative(P, V, N, v)
    fd = (forward_map(P, V.plus(v.f, v.g, h), N) - forward_map(P, V.plus(v.f, v.g, -h), N)).vector() / (2 * h)
    assert np.max(np.abs(fd - d.vector()) / np.maximum(np.abs(d.vector()), 1e-3)) < 1e-4


@pytest.mark.parametrize("a,use_v", [(0, False), (1, True), (3, True)])
def test_inverse_round_trip(zero, V, a, use_v):
    W = V if use_v else zero
    P = OperatorParams(a, 0.0)
    N = 12
    rng = np.random.default_rng(a)
    xi, eta = np.zeros(2 * N + 1), np.zeros(2 * N + 1)
    keep = np.abs(np.arange(-N, N + 1)) <= 8
    xi[keep] = rng.standard_normal(keep.sum())
    eta[keep] = rng.standard_normal(keep.sum())
    t = SpectralTarget(P, N, xi, eta)
    sd = spectrum(P, W, N)
    back = frechet_derivative(P, W, N, inverse_derivative(P, W, t, inverse_basis(P, W, N, sd)), sd)
    assert np.max(np.abs(back.vector() - t.vector())) < 1e-4
    assert inverse_derivative(P, W, SpectralTarget.zeros(P, N)).norm() == 0.0


@pytest.mark.parametrize("a", [0, 2])
def test_duality(V, a):
    P = OperatorParams(a, 0.3)
    N = 8
    sd = spectrum(P, V, N)
    basis = inverse_basis(P, V, N, sd)
    g = smi._gradients(P, V, sd)
    gl = np.array([[gj.grad_lambda.inner(Xk) for Xk in basis.X] for gj in g])
    gk = np.array([[grad_kappa_tilde(P, gj).inner(Yk) for Yk in basis.Y] for gj in g])
    cross1 = np.array([[gj.grad_lambda.inner(Yk) for Yk in basis.Y] for gj in g])
    cross2 = np.array([[grad_kappa_tilde(P, gj).inner(Xk) for Xk in basis.X] for gj in g])
    eye = np.eye(len(g))
    assert np.max(np.abs(gl - eye)) < 1e-6
    assert np.max(np.abs(gk - eye)) < 1e-6
    assert np.max(np.abs(cross1)) < 1e-6
    assert np.max(np.abs(cross2)) < 1e-6


def test_newton_zero_iterations(V):
    P = OperatorParams(1)
    cfg = NewtonConfig(N=8)
    Vr, rep = newton_invert(P, forward_map(P, V, 8), V, cfg)
    assert rep.iterations == 0 and rep.converged
    assert Vr is V


def test_newton_mismatch(zero):
    with pytest.raises(InvalidParamsError):
        newton_invert(OperatorParams(0), SpectralTarget.zeros(OperatorParams(0), 8), zero, NewtonConfig(N=9))


def test_newton_recovers_flat_trig_a1(zero):
    P = OperatorParams(1)
    truth = flat_trig(1, seed=5)
    Vr, rep = newton_invert(P, forward_map(P, truth, 24), zero, NewtonConfig(N=24))
    assert rep.converged and rep.iterations <= 12
    err = FunctionPair(Vr.p - truth.p, Vr.q - truth.q, truth.mesh).norm()
    assert err < 1e-3
    # local quadratic contraction on the full steps
    r = rep.residuals
    ratios = [r[k + 1] / r[k] ** 2 for k in range(len(r) - 1) if rep.dampings[k] == 1.0 and r[k + 1] > 1e-12]
    assert max(ratios) < 10.0


@pytest.mark.xfail(strict=True, reason="truncation at N = 24 leaves an O(||V||^2 / n) data tail; error is about 0.018")
def test_newton_literal_example(zero):
    P = OperatorParams(0, 0.0)
    truth = Potential.from_functions(lambda x: 0.3 * np.sin(2 * np.pi * x), lambda x: 0.2 * np.cos(np.pi * x))
    Vr, rep = newton_invert(P, forward_map(P, truth, 24), zero, NewtonConfig(N=24))
    err = FunctionPair(Vr.p - truth.p, Vr.q - truth.q, truth.mesh).norm()
    assert err <= 1e-3


def test_newton_reports_failed_trials(zero, monkeypatch):
    def broken(*args, **kw):
        raise SolverError("forced failure")

    monkeypatch.setattr(smi, "_spectral", broken)
    P = OperatorParams(0)
    t = SpectralTarget(P, 4, np.full(9, 0.1), np.zeros(9))
    with pytest.raises(DivergenceError):
        newton_invert(P, t, zero, NewtonConfig(N=4, max_halvings=1))


def test_isospectral_tangency_and_normals(V):
    P = OperatorParams(1, 0.0)
    N = 8
    sd = spectrum(P, V, N)
    dirs = isospectral_directions(P, V, N, sd)
    g = smi._gradients(P, V, sd)
    tang = max(abs(gj.grad_lambda.inner(Y)) for gj in g for Y in dirs.tangent)
    assert tang < 1e-6
    dev = max(abs(Yj.inner(Nk)) for Yj, Nk in zip(dirs.tangent, dirs.normal))
    assert dev < 1e-14


@pytest.mark.parametrize("a", [0, 2])
def test_isospectral_flow_slope(V, a):
    P = OperatorParams(a, 0.0)
    rng = np.random.default_rng(11)
    coeffs = {n: float(rng.standard_normal()) for n in range(a - 6, 7)}
    eps, dev = isospectral_flow(P, V, 12, coeffs, [1e-2, 1e-3])
    assert 1.8 <= loglog_slope(eps, dev) <= 2.2


def test_residual_diagnostics(zero, V):
    rd = residual_diagnostics(OperatorParams(0), zero, 8)
    assert np.max(rd.r_norms) < 1e-12
    rv = residual_diagnostics(OperatorParams(1), V, 24)
    assert np.max(rv.s_norms) < 5.0
    n = np.abs(rv.indices)
    total = np.sum(rv.r_norms**2)
    assert np.sum(rv.r_norms[n > 12] ** 2) < 0.05 * total


def test_uniqueness_probe(V):
    P = OperatorParams(0)
    same = uniqueness_probe(P, V, V, 24)
    assert same.distance == 0.0 and same.potential_distance == 0.0
    x = V.mesh.x
    W = V.plus(0.1 * np.sin(3 * np.pi * x), np.zeros(x.size))
    rep = uniqueness_probe(P, V, W, 24)
    assert rep.distance > 1e-4
    assert rep.potential_distance == pytest.approx(0.1 / math.sqrt(2), rel=1e-10)


@pytest.mark.slow
def test_uniqueness_corpus():
    P = OperatorParams(1)
    dmin = min(uniqueness_probe(P, trig(2 * k), trig(2 * k + 1), 24).distance for k in range(10))
    assert dmin > 1e-7
