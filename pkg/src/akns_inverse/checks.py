"""Named identity suites shared by the CLI ``check`` command and the tests.

Every suite returns a list of :class:`CheckRow`, one per identity family, with
the largest deviation seen and the tolerance it is held to.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .akns_solutions import (
    OperatorParams,
    Potential,
    _det,
    regular_solution,
    rho_solution,
    singular_solution,
)
from .spectral_forward import (
    gradients,
    kappa_scale,
    orthogonality_report,
    simplicity_check,
    spectrum,
)
from .transform_operators import (
    FunctionPair,
    b_inverse,
    monomial_U,
    monomial_V,
    pairing_identity_check,
    phi_pair,
    psi_pair,
    s_adjoint,
    s_forward,
    s_inverse,
    t_adjoint,
    t_forward,
    trig_pairs,
)


@dataclass(frozen=True)
class CheckRow:
    name: str
    deviation: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.deviation) and self.deviation <= self.tol)


def _random_pair(rng, mesh, degree=6) -> FunctionPair:
    x = mesh.x
    c = rng.standard_normal((2, degree + 1))
    w = rng.uniform(1.0, 8.0, size=2)
    return FunctionPair(np.polyval(c[0], x) + np.sin(w[0] * x), np.polyval(c[1], x) + np.cos(w[1] * x), mesh)


def orthogonality_suite(params: OperatorParams, V: Potential, Jmax: int = 8, tol: float = 1e-6, **_):
    rep = orthogonality_report(params, V, Jmax)
    return [CheckRow(f.name, f.deviation, tol) for f in rep.families]


def kernel_suite(params: OperatorParams, V: Potential, tol: float = 1e-10, **_):
    """S_{k+1}* kills U_{2k}, V_{2k+1}; T_a* kills them for every k < a."""
    mesh, a = V.mesh, params.a
    dev_s = dev_t = 0.0
    for k in range(a):
        dev_s = max(dev_s, np.max(np.abs(s_adjoint(k + 1, monomial_U(2 * k, mesh)).g)),
                    np.max(np.abs(s_adjoint(k + 1, monomial_V(2 * k + 1, mesh)).f)))
        ta_u = t_adjoint(a, monomial_U(2 * k, mesh))
        ta_v = t_adjoint(a, monomial_V(2 * k + 1, mesh))
        dev_t = max(dev_t, ta_u.norm(), ta_v.norm())
    return [CheckRow("S*_{k+1} kernel monomials", float(dev_s), tol),
            CheckRow("T_a* kernel monomials", float(dev_t), tol)]


def transform_roundtrip_suite(params: OperatorParams, V: Potential, seed: int = 0, samples: int = 3,
                              tol: float = 1e-8, **_):
    rng = np.random.default_rng(seed)
    mesh, a = V.mesh, params.a
    dev_as = dev_bt = dev_adj = 0.0
    for _ in range(samples):
        fp, v = _random_pair(rng, mesh), _random_pair(rng, mesh)
        dev_as = max(dev_as, s_inverse(a, s_forward(a, fp)).sup_distance(fp))
        dev_bt = max(dev_bt, b_inverse(a, t_forward(a, fp)).sup_distance(fp))
        dev_adj = max(dev_adj, abs(t_forward(a, fp).inner(v) - fp.inner(t_adjoint(a, v))))
    return [CheckRow("A_a S_a = Id (sup)", float(dev_as), tol),
            CheckRow("B_a T_a = Id (sup)", float(dev_bt), tol),
            CheckRow("<T_a u, v> = <u, T_a* v>", float(dev_adj), tol)] + kernel_suite(params, V)


def pairing_suite(params: OperatorParams, V: Potential, lams=(1.0, 5.5, 20.0), seed: int = 0,
                  tol: float = 1e-8, **_):
    rng = np.random.default_rng(seed)
    mesh, a = V.mesh, params.a
    x = mesh.x
    probes = [FunctionPair(x**2, x**3, mesh), _random_pair(rng, mesh)]
    dev_pair = dev_adj = dev_rec = 0.0
    for lam in lams:
        for fp in probes:
            dev_pair = max(dev_pair, pairing_identity_check(a, lam, fp).deviation)
        sp, cp = trig_pairs(lam, mesh)
        dev_adj = max(dev_adj, t_adjoint(a, sp).sup_distance(phi_pair(a, lam, mesh)),
                      t_adjoint(a, cp).sup_distance(psi_pair(a, lam, mesh)))
        rec_phi = phi_pair(a + 1, lam, mesh) + s_adjoint(a + 1, phi_pair(a, lam, mesh))
        rec_psi = psi_pair(a + 1, lam, mesh) + s_adjoint(a + 1, psi_pair(a, lam, mesh))
        dev_rec = max(dev_rec, np.max(np.abs(rec_phi.f)), np.max(np.abs(rec_phi.g)),
                      np.max(np.abs(rec_psi.f)), np.max(np.abs(rec_psi.g)))
    return [CheckRow("Phi/Psi pairing identities", float(dev_pair), tol),
            CheckRow("Phi_a = T_a*[sin, cos], Psi_a = T_a*[cos, -sin]", float(dev_adj), tol),
            CheckRow("Phi_{a+1} = -S_{a+1}*[Phi_a] (and Psi)", float(dev_rec), tol)]


def wronskian_suite(params: OperatorParams, V: Potential, lams=(0.5, 3.0, 11.0), tol: float = 1e-10, **_):
    """det(R, S~) is independent of x; for V = 0 it equals 1 in addition."""
    const = free = 0.0
    zero = not (np.any(V.p) or np.any(V.q))
    for lam in lams:
        St, W, _ = singular_solution(params, V, lam, strict=False)
        R = regular_solution(params, V, lam).samples
        m = V.mesh.x >= 1e-3
        const = max(const, float(np.max(np.abs(_det(R[m], St.samples[m]) - W))))
        if zero:
            free = max(free, abs(W - 1.0))
    rows = [CheckRow("det(R, S~)(x) = W", const, tol)]
    if zero:
        rows.append(CheckRow("W = 1 for V = 0", free, 1e-12))
    return rows


def simplicity_suite(params: OperatorParams, V: Potential, Nmax: int = 8, tol: float = 1e-6, **_):
    sd = spectrum(params, V, max(Nmax, params.a + 2))
    dev = 0.0
    for n in sd.indices:
        if abs(n) <= Nmax:
            lhs, rhs = simplicity_check(params, V, sd.lam(n))
            dev = max(dev, abs(lhs - rhs) / abs(lhs))
    return [CheckRow("||R_n||^2 = -kappa_n dD/dlam (relative)", dev, tol)]


def rho_suite(params: OperatorParams, V: Potential, Nmax: int = 8, tol: float = 1e-7, **_):
    sd = spectrum(params, V, max(Nmax, params.a + 2))
    dev = 0.0
    for e in sd.entries:
        if abs(e.n) <= Nmax:
            R = regular_solution(params, V, e.lam)
            rho = rho_solution(params, V, e.lam)
            m = R.x >= 0.1
            dev = max(dev, float(np.max(np.abs(R.samples[m] - e.kappa * rho.samples[m]))))
    return [CheckRow("R_n = kappa_n rho(., lam_n) on [0.1, 1]", dev, tol)]


def asymptotics_suite(params: OperatorParams, V: Potential, N: int = 24, **_):
    sd = spectrum(params, V, N)
    n = sd.indices
    lt = sd.lambda_tildes
    scaled = sd.kappas[np.abs(n) >= 16] / np.array([kappa_scale(params, k) for k in n[np.abs(n) >= 16]])
    S = lambda m: float(np.sum(lt[np.abs(n) <= m] ** 2))
    return [CheckRow("max |lam~_n| - pi/2", float(np.max(np.abs(lt)) - math.pi / 2), 0.0),
            CheckRow("sum lam~^2 increment S_N - S_{N-1}", S(N) - S(N - 1), 1e-4),
            CheckRow("max |(-1)^n ((|n|+a/2)pi)^a kappa_n - 1|, |n| >= 16",
                     float(np.max(np.abs(scaled - 1))), 0.1)]


def gradient_suite(params: OperatorParams, V: Potential, indices=(0, 3, 10), seed: int = 0, directions: int = 5,
                   h: float = 1e-4, tol: float = 1e-4, **_):
    """<grad lam_n, v> and <grad kappa_n, v> against centered differences."""
    rng = np.random.default_rng(seed)
    N = max(max(abs(i) for i in indices), params.a + 2)
    sd = spectrum(params, V, N)
    g = gradients(params, V, sd, indices)
    dev_l = dev_k = 0.0
    for _ in range(directions):
        v = _random_pair(rng, V.mesh, degree=3)
        sp = spectrum(params, V.plus(v.f, v.g, h), N)
        sm = spectrum(params, V.plus(v.f, v.g, -h), N)
        for n in indices:
            fd_l = (sp.lam(n) - sm.lam(n)) / (2 * h)
            fd_k = (sp.entry(n).kappa - sm.entry(n).kappa) / (2 * h)
            an_l = g[n].grad_lambda.inner(v)
            an_k = g[n].grad_kappa.inner(v)
            dev_l = max(dev_l, abs(fd_l - an_l) / max(abs(an_l), 1e-300))
            dev_k = max(dev_k, abs(fd_k - an_k) / max(abs(an_k), 1e-300))
    return [CheckRow("grad lam vs centered difference (relative)", dev_l, tol),
            CheckRow("grad kappa vs centered difference (relative)", dev_k, tol)]


SUITES = {
    "orthogonality": orthogonality_suite,
    "transform-roundtrip": transform_roundtrip_suite,
    "kernel": kernel_suite,
    "pairing": pairing_suite,
    "wronskian": wronskian_suite,
    "simplicity": simplicity_suite,
    "rho": rho_suite,
    "asymptotics": asymptotics_suite,
    "gradients": gradient_suite,
}


def run_suite(name: str, params: OperatorParams, V: Potential, **kw) -> list[CheckRow]:
    return SUITES[name](params, V, **kw)
