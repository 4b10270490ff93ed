"""Transformation operators S_a, T_a, their adjoints and inverses, and Phi_a, Psi_a.

With U_m[f](x) = x^(m-1) int_x^1 f t^-m dt and L_m[f](x) = x^-m int_0^x t^(m-1) f dt,

    S_{k,1} = Id - 2(2k+1) U_{2k+1},      S_{k,1}* = Id - 2(2k+1) L_{2k+1},
    S_{k,2} = Id - 2(2k+1) U_{2k+2},      S_{k,2}* = Id - 2(2k+1) L_{2k+2},

and S_{k+1} acts on pairs as (S_{k,1}, S_{k,2}).  Both U_m and L_m are bounded
although their factors are not; see :meth:`Mesh.weighted_operator`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bessel_core import _check_order, scaled_pair
from .errors import InvalidParamsError
from .mesh import Mesh, default_mesh


@dataclass(frozen=True, eq=False)
class FunctionPair:
    """An element (f, g) of L^2 x L^2 sampled on the nodes of a mesh."""

    f: np.ndarray
    g: np.ndarray
    mesh: Mesh = field(default_factory=default_mesh)

    def __post_init__(self):
        for name in ("f", "g"):
            v = np.array(getattr(self, name))
            if v.dtype.kind not in "fc":
                v = v.astype(float)
            if v.shape != (self.mesh.size,):
                raise InvalidParamsError(f"{name} has shape {v.shape}, mesh needs ({self.mesh.size},)")
            if not np.all(np.isfinite(v)):
                raise InvalidParamsError(f"{name} has non-finite samples")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def from_functions(cls, f, g, mesh: Mesh | None = None) -> "FunctionPair":
        mesh = mesh or default_mesh()
        x = mesh.x
        return cls(np.broadcast_to(f(x), x.shape), np.broadcast_to(g(x), x.shape), mesh)

    @classmethod
    def zeros(cls, mesh: Mesh | None = None) -> "FunctionPair":
        mesh = mesh or default_mesh()
        return cls(np.zeros(mesh.size), np.zeros(mesh.size), mesh)

    @property
    def grid(self) -> np.ndarray:
        return self.mesh.x

    def _same(self, other: "FunctionPair"):
        if other.mesh != self.mesh:
            raise InvalidParamsError("function pairs live on different grids")

    def inner(self, other: "FunctionPair"):
        """Bilinear L^2 pairing int (f f' + g g')."""
        self._same(other)
        return self.mesh.integrate(self.f * other.f + self.g * other.g)

    def norm(self) -> float:
        return float(np.sqrt(np.real(self.mesh.integrate(np.abs(self.f) ** 2 + np.abs(self.g) ** 2))))

    def perp(self) -> "FunctionPair":
        """(f, g)^perp = (g, -f)."""
        return FunctionPair(self.g, -self.f, self.mesh)

    def swap(self) -> "FunctionPair":
        return FunctionPair(self.g, self.f, self.mesh)

    def __add__(self, other: "FunctionPair") -> "FunctionPair":
        self._same(other)
        return FunctionPair(self.f + other.f, self.g + other.g, self.mesh)

    def __sub__(self, other: "FunctionPair") -> "FunctionPair":
        self._same(other)
        return FunctionPair(self.f - other.f, self.g - other.g, self.mesh)

    def __mul__(self, c) -> "FunctionPair":
        return FunctionPair(c * self.f, c * self.g, self.mesh)

    __rmul__ = __mul__

    def __neg__(self) -> "FunctionPair":
        return FunctionPair(-self.f, -self.g, self.mesh)

    def sup_distance(self, other: "FunctionPair") -> float:
        self._same(other)
        return float(max(np.max(np.abs(self.f - other.f)), np.max(np.abs(self.g - other.g))))


def monomial_U(n: int, mesh: Mesh | None = None) -> FunctionPair:
    """U_n = (0, x^n)."""
    mesh = mesh or default_mesh()
    return FunctionPair(np.zeros(mesh.size), mesh.x**n, mesh)


def monomial_V(n: int, mesh: Mesh | None = None) -> FunctionPair:
    """V_n = (x^n, 0)."""
    mesh = mesh or default_mesh()
    return FunctionPair(mesh.x**n, np.zeros(mesh.size), mesh)


# ---------------------------------------------------------------------------
# scalar factors
# ---------------------------------------------------------------------------

def _factor(mesh: Mesh, k: int, j: int, adjoint: bool, u):
    m = 2 * k + j
    return u - 2 * (2 * k + 1) * mesh.weighted_operator(m, upper=not adjoint)(u)


def _apply(a: int, fp: FunctionPair, adjoint: bool) -> FunctionPair:
    if a == 0:
        return fp
    k = a - 1
    return FunctionPair(_factor(fp.mesh, k, 1, adjoint, fp.f), _factor(fp.mesh, k, 2, adjoint, fp.g), fp.mesh)


def s_forward(a: int, fp: FunctionPair) -> FunctionPair:
    """S_a[p, q] = (S_{a-1,1}[p], S_{a-1,2}[q]); S_0 = Id."""
    return _apply(_check_order(a), fp, adjoint=False)


def s_adjoint(a: int, fp: FunctionPair) -> FunctionPair:
    return _apply(_check_order(a), fp, adjoint=True)


def s_inverse(a: int, fp: FunctionPair) -> FunctionPair:
    """A_a[f, g] = (S_{a-1,2}*[f], S_{a-1,1}*[g]), the left inverse of S_a."""
    a = _check_order(a)
    if a == 0:
        return fp
    k = a - 1
    return FunctionPair(_factor(fp.mesh, k, 2, True, fp.f), _factor(fp.mesh, k, 1, True, fp.g), fp.mesh)


def t_forward(a: int, fp: FunctionPair) -> FunctionPair:
    """T_a = (-1)^(a+1) S_a ... S_1, T_0 = -Id."""
    a = _check_order(a)
    out = fp
    for k in range(1, a + 1):
        out = s_forward(k, out)
    return out if a % 2 else -out


def t_adjoint(a: int, fp: FunctionPair) -> FunctionPair:
    """T_a* = (-1)^(a+1) S_1* ... S_a*."""
    a = _check_order(a)
    out = fp
    for k in range(a, 0, -1):
        out = s_adjoint(k, out)
    return out if a % 2 else -out


def b_inverse(a: int, fp: FunctionPair) -> FunctionPair:
    """B_a[f, g] = (T_a^2*[f], T_a^1*[g]), the left inverse of T_a."""
    return t_adjoint(a, fp.swap()).swap()


# ---------------------------------------------------------------------------
# Phi_a, Psi_a
# ---------------------------------------------------------------------------

def phi_psi(a: int, z):
    """Phi_a(z), Psi_a(z) as arrays of shape z.shape + (2,).

    Phi_a = (-2 j_{a-1} j_a, j_a^2 - j_{a-1}^2),
    Psi_a = (-eta_{a-1} j_a - eta_a j_{a-1}, -eta_{a-1} j_{a-1} + eta_a j_a),
    assembled from the scaled functions so Psi_a stays finite at z = 0.
    """
    a = _check_order(a)
    z = np.asarray(z)
    if z.dtype.kind not in "fc":
        z = z.astype(float)
    jm, ja, em, ea = scaled_pair(a, z)
    za = z**a
    Jm, Ja = za * jm, za * z * ja
    phi = np.stack([-2 * Jm * Ja, Ja**2 - Jm**2], axis=-1)
    psi = np.stack(
        [-(z * z * em * ja) - ea * jm, -(z * em * jm) + z * ea * ja],
        axis=-1,
    )
    return phi, psi


def phi_pair(a: int, lam, mesh: Mesh | None = None) -> FunctionPair:
    """x -> Phi_a(lam x) on the mesh."""
    mesh = mesh or default_mesh()
    phi = phi_psi(a, lam * mesh.x)[0]
    return FunctionPair(phi[:, 0], phi[:, 1], mesh)


def psi_pair(a: int, lam, mesh: Mesh | None = None) -> FunctionPair:
    mesh = mesh or default_mesh()
    psi = phi_psi(a, lam * mesh.x)[1]
    return FunctionPair(psi[:, 0], psi[:, 1], mesh)


def trig_pairs(lam, mesh: Mesh | None = None):
    """(sin 2 lam x, cos 2 lam x) and (cos 2 lam x, -sin 2 lam x)."""
    mesh = mesh or default_mesh()
    s, c = np.sin(2 * lam * mesh.x), np.cos(2 * lam * mesh.x)
    return FunctionPair(s, c, mesh), FunctionPair(c, -s, mesh)


@dataclass(frozen=True)
class PairingCheck:
    """Both sides of the Phi and Psi pairing identities for one (a, lam, fp)."""

    lhs: tuple[float, float]
    rhs: tuple[float, float]
    deviation: float


def pairing_identity_check(a: int, lam, fp: FunctionPair) -> PairingCheck:
    """int Phi_a(lam t).fp = int (sin, cos)(2 lam t).T_a[fp], and the Psi analog."""
    mesh = fp.mesh
    Tfp = t_forward(a, fp)
    s_pair, c_pair = trig_pairs(lam, mesh)
    lhs = (phi_pair(a, lam, mesh).inner(fp), psi_pair(a, lam, mesh).inner(fp))
    rhs = (s_pair.inner(Tfp), c_pair.inner(Tfp))
    dev = float(max(abs(lhs[0] - rhs[0]), abs(lhs[1] - rhs[1])))
    return PairingCheck(lhs, rhs, dev)
