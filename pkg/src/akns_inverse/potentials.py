"""Builtin potential families used by the CLI and the tests.

All random families draw from ``numpy.random.default_rng(seed)`` (PCG64), so
a 64-bit seed fixes the potential bit for bit.
"""
from __future__ import annotations

import numpy as np

from .akns_solutions import Potential
from .bessel_core import _check_order
from .mesh import Mesh, default_mesh

BUILTINS = ("zero", "trig", "bump", "flat-trig")


def _scaled(p, q, mesh, norm):
    V = Potential(p, q, mesh)
    return V if norm is None or V.norm() == 0 else Potential(p * (norm / V.norm()), q * (norm / V.norm()), mesh)


def trig(seed: int, norm: float | None = 0.5, modes: int = 4, mesh: Mesh | None = None) -> Potential:
    """p, q = sum_k (c_k cos 2k pi x + s_k sin 2k pi x) / k^2 with normal c_k, s_k; k = 0 carries a constant."""
    mesh = mesh or default_mesh()
    rng = np.random.default_rng(seed)
    x = mesh.x
    out = []
    for _ in range(2):
        c = rng.standard_normal(modes + 1)
        s = rng.standard_normal(modes + 1)
        f = c[0] * np.ones_like(x)
        for k in range(1, modes + 1):
            f = f + (c[k] * np.cos(2 * k * np.pi * x) + s[k] * np.sin(2 * k * np.pi * x)) / k**2
        out.append(f)
    return _scaled(out[0], out[1], mesh, norm)


def bump(center: float = 0.5, width: float = 0.25, height: float = 0.5, mesh: Mesh | None = None) -> Potential:
    """p = q = height * exp(1 - 1/(1 - r^2)) for r = (x - center)/width in (-1, 1), zero outside."""
    mesh = mesh or default_mesh()
    r = (mesh.x - center) / width
    inside = np.abs(r) < 1
    f = np.zeros_like(r)
    f[inside] = height * np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return Potential(f, f.copy(), mesh)


def _chain_moments(mesh: Mesh, a: int, j: int, f: np.ndarray) -> np.ndarray:
    """C_k = int_0^1 f_k t^-(2k+j) dt for the partial products f_k = S_{k-1,j} ... S_{0,j} f."""
    out = []
    for k in range(a):
        m = 2 * k + j
        out.append(mesh.integrate(f * mesh.x ** (-m)))
        f = f - 2 * (2 * k + 1) * mesh.weighted_operator(m, upper=True)(f)
    return np.array(out)


def flat_trig(a: int, seed: int, norm: float = 0.3, modes: int = 2, mesh: Mesh | None = None) -> Potential:
    """A trig polynomial whose image under T_a is flat at both ends of [0, 1].

    Each component is sin^6(pi x) times a random trig polynomial, corrected
    inside that family so that the a moment constants of the S-factor chain
    vanish.  Their spectral data then decay fast enough for N = 24 truncation.
    """
    a = _check_order(a)
    mesh = mesh or default_mesh()
    rng = np.random.default_rng(seed)
    x = mesh.x
    env = np.sin(np.pi * x) ** 6
    basis = [env * np.ones_like(x)]
    for k in range(1, modes + 1):
        basis += [env * np.cos(2 * k * np.pi * x), env * np.sin(2 * k * np.pi * x)]
    B = np.array(basis)
    weights = np.repeat(np.arange(1, modes + 1, dtype=float), 2) ** -2.0
    weights = np.concatenate([[1.0], weights])
    comps = []
    for j in (1, 2):
        coef = rng.standard_normal(B.shape[0]) * weights
        if a:
            M = np.array([_chain_moments(mesh, a, j, b) for b in B]).T
            coef = coef - np.linalg.pinv(M) @ (M @ coef)
        comps.append(coef @ B)
    return _scaled(comps[0], comps[1], mesh, norm)


def builtin(name: str, seed: int = 0, a: int = 0, mesh: Mesh | None = None) -> Potential:
    if name == "zero":
        return Potential.zero(mesh)
    if name == "trig":
        return trig(seed, mesh=mesh)
    if name == "bump":
        return bump(mesh=mesh)
    if name == "flat-trig":
        return flat_trig(a, seed, mesh=mesh)
    raise KeyError(name)
