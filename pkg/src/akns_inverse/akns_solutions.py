"""Solutions of the singular AKNS system on (0, 1].

The system is written as

    Y' = (M0(x) + lam E) Y,   M0 = [[a/x - p, -q], [-q, p - a/x]],   E = [[0, 1], [-1, 0]],

which is H_a(V) Y = lam Y for V = [[-q, p], [p, q]].  Each mesh panel away from
the origin is propagated by right-Radau collocation, which turns the panel into
one dense linear system per lam; many lam values are solved as a batch.  On the
first panel [0, x_min] the free solutions are used directly (the potential
correction there is of relative size x_min * |V|).

Solutions integrated toward 0 (the singular ones and rho) are propagated
backward, the direction in which they dominate; the regular solution goes
forward for the same reason.
"""
from __future__ import annotations

import hashlib
import math
import weakref
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as L
from scipy.interpolate import CubicSpline

from .bessel_core import MAX_ORDER, free_solutions
from .errors import DegenerateNormalizationError, InvalidParamsError, SolverError
from .mesh import Mesh, default_mesh

E = np.array([[0.0, 1.0], [-1.0, 0.0]])
DET_TOL = 1e-8
DEGENERACY_TOL = 1e-8
_CHUNK_BYTES = 24 * 2**20


@dataclass(frozen=True)
class OperatorParams:
    """Singularity index a and boundary angle beta, canonicalized to (-pi/2, pi/2]."""

    a: int = 0
    beta: float = 0.0

    def __post_init__(self):
        a = self.a
        if isinstance(a, bool) or not isinstance(a, (int, np.integer)) or not 0 <= a <= MAX_ORDER:
            raise InvalidParamsError(f"a must be an integer in [0, {MAX_ORDER}], got {a!r}")
        b = float(self.beta)
        if not math.isfinite(b):
            raise InvalidParamsError(f"beta must be finite, got {self.beta!r}")
        b -= math.pi * math.ceil((b - math.pi / 2) / math.pi)
        object.__setattr__(self, "a", int(a))
        object.__setattr__(self, "beta", b)

    @property
    def u_beta(self) -> np.ndarray:
        return np.array([math.sin(self.beta), math.cos(self.beta)])

    @property
    def u_perp(self) -> np.ndarray:
        return np.array([math.cos(self.beta), -math.sin(self.beta)])


@dataclass(frozen=True, eq=False)
class Potential:
    """The pair (p, q) sampled at the nodes of a graded mesh."""

    p: np.ndarray
    q: np.ndarray
    mesh: Mesh = field(default_factory=default_mesh)

    def __post_init__(self):
        vals = []
        for name in ("p", "q"):
            v = np.array(getattr(self, name))
            if v.dtype.kind not in "fc":
                v = v.astype(float)
            if v.shape != (self.mesh.size,):
                raise InvalidParamsError(
                    f"{name} has shape {v.shape}, mesh needs ({self.mesh.size},)"
                )
            if not np.all(np.isfinite(v)):
                raise InvalidParamsError(f"{name} has non-finite samples")
            v.setflags(write=False)
            vals.append(v)
        if self.mesh.size < 32:
            raise InvalidParamsError("a potential needs at least 32 grid points")
        object.__setattr__(self, "p", vals[0])
        object.__setattr__(self, "q", vals[1])

    @classmethod
    def zero(cls, mesh: Mesh | None = None) -> "Potential":
        mesh = mesh or default_mesh()
        return cls(np.zeros(mesh.size), np.zeros(mesh.size), mesh)

    @classmethod
    def from_functions(cls, p, q, mesh: Mesh | None = None) -> "Potential":
        mesh = mesh or default_mesh()
        x = mesh.x
        return cls(np.broadcast_to(p(x), x.shape), np.broadcast_to(q(x), x.shape), mesh)

    @classmethod
    def from_samples(cls, x, p, q, mesh: Mesh | None = None) -> "Potential":
        """Resample arbitrary grid data onto the mesh by cubic splines (lossy)."""
        mesh = mesh or default_mesh()
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size < 4 or np.any(np.diff(x) <= 0):
            raise InvalidParamsError("sample grid must be strictly increasing with >= 4 points")
        if x[0] > 0 or x[-1] < 1:
            raise InvalidParamsError("sample grid must cover [0, 1]")
        sp, sq = CubicSpline(x, p), CubicSpline(x, q)
        return cls(sp(mesh.x), sq(mesh.x), mesh)

    @property
    def grid(self) -> np.ndarray:
        return self.mesh.x

    @property
    def weights(self) -> np.ndarray:
        return self.mesh.weights

    @property
    def is_real(self) -> bool:
        return self.p.dtype.kind == "f" and self.q.dtype.kind == "f"

    def norm(self) -> float:
        return float(np.sqrt(np.real(self.mesh.integrate(np.abs(self.p) ** 2 + np.abs(self.q) ** 2))))

    def plus(self, dp, dq, h: float = 1.0) -> "Potential":
        return Potential(self.p + h * np.asarray(dp), self.q + h * np.asarray(dq), self.mesh)

    def digest(self) -> str:
        sha = hashlib.sha256()
        sha.update(repr(self.mesh.config).encode())
        sha.update(np.ascontiguousarray(self.p).tobytes())
        sha.update(np.ascontiguousarray(self.q).tobytes())
        return sha.hexdigest()[:16]


TRAJECTORY_KINDS = ("regular", "singular-raw", "singular-normalized", "boundary", "derivative")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A two-component solution sampled at the mesh nodes; samples has shape (M, 2)."""

    params: OperatorParams
    lam: complex
    kind: str
    samples: np.ndarray
    mesh: Mesh

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        s = np.array(self.samples)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def x(self) -> np.ndarray:
        return self.mesh.x

    @property
    def end(self) -> np.ndarray:
        """Value at x = 1 (the last mesh node)."""
        return self.samples[-1]

    def at(self, x) -> np.ndarray:
        return np.moveaxis(self.mesh.interpolate(self.samples.T, x), 0, -1)


# ---------------------------------------------------------------------------
# free solutions
# ---------------------------------------------------------------------------

def free_regular(params: OperatorParams, x, lam):
    return free_solutions(params.a, x, lam)[0]


def free_singular(params: OperatorParams, x, lam):
    if params.a >= 1 and np.any(np.asarray(x) == 0):
        raise ZeroDivisionError("the free singular solution has a pole at x = 0")
    return free_solutions(params.a, x, lam)[1]


def _det(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


# ---------------------------------------------------------------------------
# collocation engine
# ---------------------------------------------------------------------------

class _Collocation:
    """Panel propagators for fixed (a, V); panels 1.. of the mesh only."""

    def __init__(self, a: int, V: Potential):
        mesh = V.mesh
        n = mesh.order
        self.a, self.mesh, self.n = a, mesh, n
        x = mesh.panel_x[1:]
        h = mesh.h[1:]
        p = V.p.reshape(mesh.n_panels, n)[1:]
        q = V.q.reshape(mesh.n_panels, n)[1:]
        self.dtype = np.result_type(p, q, float)
        M0 = np.empty(x.shape + (2, 2), dtype=self.dtype)
        M0[..., 0, 0] = a / x - p
        M0[..., 0, 1] = -q
        M0[..., 1, 0] = -q
        M0[..., 1, 1] = p - a / x
        Qk = h[:, None, None] * mesh.ref_Q[None]
        K = Qk.shape[0]
        self.K = K
        self._base = np.eye(2 * n) - np.einsum("kij,kjab->kiajb", Qk, M0).reshape(K, 2 * n, 2 * n)
        self._eterm = np.einsum("kij,ab->kiajb", Qk, E).reshape(K, 2 * n, 2 * n)
        self._rhs = np.tile(np.eye(2), (n, 1))

    def _spectral_form(self):
        """Diagonalize C^{-1} B per panel, where the panel matrix is B - lam C.

        The eigenvector matrices are far from orthogonal (condition ~1e8
        for order 16), so transfers built this way carry errors near 1e-7.
        They are used only where that is harmless: sign scans, bisection and
        Newton derivatives.
        """
        if not hasattr(self, "_eig"):
            B, C = self._base, self._eterm
            w, U = np.linalg.eig(np.linalg.solve(C, B))
            rhs = np.broadcast_to(self._rhs, (self.K,) + self._rhs.shape)
            Y = np.linalg.solve(U, np.linalg.solve(C, rhs))
            self._eig = (w, U[:, -2:, :], Y)
        return self._eig

    def fast_endpoint(self, lam, y1):
        """Approximate (y(1), dy/dlam(1)) from initial values y1 at the first break."""
        w, Ul, Y = self._spectral_form()
        out_y, out_d = [], []
        step = max(1, _CHUNK_BYTES // (self.K * 2 * self.n * 16 * 4))
        for s in range(0, lam.size, step):
            lc = lam[s : s + step]
            r = 1.0 / (w[None] - lc[:, None, None])
            T = np.einsum("kan,lkn,knb->lkab", Ul, r, Y)
            dT = np.einsum("kan,lkn,knb->lkab", Ul, r * r, Y)
            if not np.iscomplexobj(lc) and self.dtype.kind != "c":
                T, dT = T.real, dT.real
            y = y1[s : s + lc.size]
            dy = np.zeros_like(y)
            for k in range(self.K):
                dy = np.einsum("lab,lb->la", dT[:, k], y) + np.einsum("lab,lb->la", T[:, k], dy)
                y = np.einsum("lab,lb->la", T[:, k], y)
            out_y.append(y)
            out_d.append(dy)
        return np.concatenate(out_y), np.concatenate(out_d)

    def _chunk(self, lam):
        per = self.K * (2 * self.n) ** 2 * (16 if np.iscomplexobj(lam) else 8) * 3
        step = max(1, _CHUNK_BYTES // per)
        for s in range(0, lam.size, step):
            yield s, lam[s : s + step]

    def node_maps(self, lam: np.ndarray) -> np.ndarray:
        """Phi[l, k, i] maps Y(left end of panel k+1) to Y(node i), shape (L, K, n, 2, 2)."""
        dtype = np.result_type(self.dtype, lam)
        out = np.empty((lam.size, self.K, self.n, 2, 2), dtype=dtype)
        for s, lc in self._chunk(lam):
            A = self._base[None] - lc[:, None, None, None] * self._eterm[None]
            rhs = np.broadcast_to(self._rhs, A.shape[:-1] + (2,))
            out[s : s + lc.size] = np.linalg.solve(A, rhs).reshape(lc.size, self.K, self.n, 2, 2)
        return out

    def transfers(self, lam: np.ndarray) -> np.ndarray:
        T = self.node_maps(lam)[:, :, -1]
        self._check(T)
        return T

    @staticmethod
    def _check(T):
        drift = float(np.max(np.abs(T[..., 0, 0] * T[..., 1, 1] - T[..., 0, 1] * T[..., 1, 0] - 1.0)))
        if not drift <= DET_TOL:
            raise SolverError(
                f"panel propagators lost unimodularity (max |det - 1| = {drift:.3g})",
                residual=drift,
            )

    def endpoint(self, lam: np.ndarray, y1: np.ndarray) -> np.ndarray:
        """Forward propagate y1 (at the first break) to x = 1; only transfers kept."""
        out = []
        for s, lc in self._chunk(lam):
            T = self.transfers(lc)
            y = y1[s : s + lc.size]
            for k in range(self.K):
                y = np.einsum("lab,lb->la", T[:, k], y)
            out.append(y)
        return np.concatenate(out, axis=0)

    def forward(self, lam, y1):
        """Samples on panels 1.. for initial values y1 (L, 2) at the first break."""
        maps = self.node_maps(lam)
        T = maps[:, :, -1]
        self._check(T)
        left = np.empty((lam.size, self.K, 2), dtype=np.result_type(maps, y1))
        y = y1
        for k in range(self.K):
            left[:, k] = y
            y = np.einsum("lab,lb->la", T[:, k], y)
        return np.einsum("lkiab,lkb->lkia", maps, left).reshape(lam.size, -1, 2)

    def backward(self, lam, y_end):
        """Samples on panels 1.. for end values y_end (L, 2) at x = 1, plus the value at the first break."""
        maps = self.node_maps(lam)
        T = maps[:, :, -1]
        self._check(T)
        left = np.empty((lam.size, self.K, 2), dtype=np.result_type(maps, y_end))
        y = y_end
        for k in range(self.K - 1, -1, -1):
            t = T[:, k]
            det = t[:, 0, 0] * t[:, 1, 1] - t[:, 0, 1] * t[:, 1, 0]
            y = np.stack(
                [t[:, 1, 1] * y[:, 0] - t[:, 0, 1] * y[:, 1], t[:, 0, 0] * y[:, 1] - t[:, 1, 0] * y[:, 0]],
                axis=-1,
            ) / det[:, None]
            left[:, k] = y
        vals = np.einsum("lkiab,lkb->lkia", maps, left).reshape(lam.size, -1, 2)
        return vals, left[:, 0]


_ENGINES: "weakref.WeakKeyDictionary[Potential, dict]" = weakref.WeakKeyDictionary()


def _engine(params: OperatorParams, V: Potential) -> _Collocation:
    per = _ENGINES.setdefault(V, {})
    if params.a not in per:
        per[params.a] = _Collocation(params.a, V)
    return per[params.a]


def _lam_array(lam):
    lam = np.atleast_1d(np.asarray(lam))
    if lam.dtype.kind not in "fc":
        lam = lam.astype(float)
    return lam.reshape(-1)


def _first_panel(params, V, lam):
    x0 = V.mesh.panel_x[0]
    R, S = free_solutions(params.a, x0[None, :], lam[:, None])
    Rb, Sb = free_solutions(params.a, V.mesh.breaks[1], lam)
    return R, S, Rb, Sb


def regular_batch(params: OperatorParams, V: Potential, lam) -> np.ndarray:
    """Regular solution samples, shape (L, M, 2)."""
    lam = _lam_array(lam)
    R0, _, Rb, _ = _first_panel(params, V, lam)
    rest = _engine(params, V).forward(lam, Rb)
    return np.concatenate([R0, rest], axis=1)


def backward_batch(params: OperatorParams, V: Potential, lam, y_end) -> np.ndarray:
    """Solution samples with prescribed values y_end (L, 2) at x = 1."""
    lam = _lam_array(lam)
    y_end = np.broadcast_to(np.asarray(y_end), (lam.size, 2))
    R0, S0, Rb, Sb = _first_panel(params, V, lam)
    rest, yb = _engine(params, V).backward(lam, y_end)
    alpha = _det(yb, Sb)
    beta = _det(Rb, yb)
    first = alpha[:, None, None] * R0 + beta[:, None, None] * S0
    return np.concatenate([first, rest], axis=1)


def regular_endpoint(params: OperatorParams, V: Potential, lam) -> np.ndarray:
    """R(1, lam) for a batch of lam, shape (L, 2)."""
    lam = _lam_array(lam)
    Rb = free_solutions(params.a, V.mesh.breaks[1], lam)[0]
    return _engine(params, V).endpoint(lam, Rb)


def fast_characteristic(params: OperatorParams, V: Potential, lam):
    """Approximate (D, dD/dlam) for a batch of lam, accurate to roughly 1e-6 relative.

    Intended for bracketing roots; exact values come from ``characteristic``.
    The lam dependence of the seed R(x_min, lam) is of size x_min and ignored.
    """
    lam = _lam_array(lam)
    R = free_solutions(params.a, V.mesh.breaks[1], lam)[0]
    y, dy = _engine(params, V).fast_endpoint(lam, R)
    u = params.u_beta
    return y @ u, dy @ u


def _unit_partner(y):
    """A vector v with det(y, v) = 1, taken from the larger component of y."""
    v = np.zeros_like(y)
    big = np.abs(y[:, 0]) >= np.abs(y[:, 1])
    v[big, 1] = 1.0 / y[big, 0]
    v[~big, 0] = -1.0 / y[~big, 1]
    return v


def fundamental_batch(params: OperatorParams, V: Potential, lam):
    """Regular solution and a second solution s with det(R, s) = 1, both (L, M, 2).

    s differs from the normalized singular solution by a multiple of R.  Every
    quantity built by this package from the pair (the kernel G~, d lam R, the
    gradients) is unchanged by that shift, so s serves even where the Wronskian
    W(lam, V) of the raw singular solution vanishes.
    """
    lam = _lam_array(lam)
    R = regular_batch(params, V, lam)
    s = backward_batch(params, V, lam, _unit_partner(R[:, -1]))
    return R, s


def _traj(params, lam, kind, samples, V):
    lam = complex(lam) if np.iscomplexobj(lam) else float(lam)
    return Trajectory(params, lam, kind, samples, V.mesh)


def _scalar(lam):
    lam = np.asarray(lam)
    if lam.ndim != 0:
        raise ValueError("expected a scalar spectral parameter")
    return lam.reshape(1)


def regular_solution(params: OperatorParams, V: Potential, lam) -> Trajectory:
    lam1 = _scalar(lam)
    return _traj(params, lam1[0], "regular", regular_batch(params, V, lam1)[0], V)


def singular_solution(params: OperatorParams, V: Potential, lam, strict: bool = True):
    """Return (S~, W, s): S~ seeded by the free S(1, lam), W = det(R, S~), s = S~ / W.

    With strict=False a degenerate W yields s = None instead of raising.
    """
    lam1 = _scalar(lam)
    R1 = regular_endpoint(params, V, lam1)
    S1 = free_solutions(params.a, 1.0, lam1)[1]
    St = backward_batch(params, V, lam1, S1)[0]
    W = _det(R1, S1)[0]
    W = complex(W) if np.iscomplexobj(W) else float(W)
    raw = _traj(params, lam1[0], "singular-raw", St, V)
    if abs(W) < DEGENERACY_TOL:
        if strict:
            raise DegenerateNormalizationError(
                f"|W| = {abs(W):.3g} below {DEGENERACY_TOL:g} at lam = {lam1[0]}", wronskian=W
            )
        return raw, W, None
    return raw, W, _traj(params, lam1[0], "singular-normalized", St / W, V)


def rho_solution(params: OperatorParams, V: Potential, lam) -> Trajectory:
    """Solution with rho(1) = u_beta^perp, integrated toward 0."""
    lam1 = _scalar(lam)
    rho = backward_batch(params, V, lam1, params.u_perp[None, :])[0]
    return _traj(params, lam1[0], "boundary", rho, V)


def characteristic(params: OperatorParams, V: Potential, lam):
    """D(lam, V) = R(1, lam, V) . u_beta; vectorized over lam."""
    lam_arr = np.asarray(lam)
    D = regular_endpoint(params, V, lam_arr) @ params.u_beta
    return D.reshape(lam_arr.shape) if lam_arr.ndim else D[0]


def _lambda_derivative_parts(mesh, R, s):
    """Return (C1, C2) with d_lam R(x) = R(x) C1(x) - s(x) C2(x)."""
    C1 = mesh.cumulative(np.sum(R * s, axis=-1))
    C2 = mesh.cumulative(np.sum(R * R, axis=-1))
    return C1, C2


def characteristic_with_derivative(params: OperatorParams, V: Potential, lam):
    """(D, dD/dlam) for a batch of lam, using d_lam R = R int R.s - s int R.R."""
    lam_arr = np.asarray(lam)
    R, s = fundamental_batch(params, V, lam_arr)
    mesh = V.mesh
    u = params.u_beta
    D = R[:, -1] @ u
    dD = D * mesh.integrate(np.sum(R * s, axis=-1)) - (s[:, -1] @ u) * mesh.integrate(np.sum(R * R, axis=-1))
    if lam_arr.ndim == 0:
        return D[0], dD[0]
    return D.reshape(lam_arr.shape), dD.reshape(lam_arr.shape)


def regular_lambda_derivative(params: OperatorParams, V: Potential, lam) -> Trajectory:
    """d R / d lam sampled on the mesh, equal to -[d_V R](Id)."""
    lam1 = _scalar(lam)
    R, s = fundamental_batch(params, V, lam1)
    C1, C2 = _lambda_derivative_parts(V.mesh, R[0], s[0])
    out = R[0] * C1[:, None] - s[0] * C2[:, None]
    return _traj(params, lam1[0], "derivative", out, V)


def ab_quantities(R, s):
    """Return (a, b) = (-(Y1 Z2 + Z1 Y2), Y1 Y2 - Z1 Z2) for R = (Y1, Z1), s = (Y2, Z2)."""
    Y1, Z1 = R[..., 0], R[..., 1]
    Y2, Z2 = s[..., 0], s[..., 1]
    return -(Y1 * Z2 + Z1 * Y2), Y1 * Y2 - Z1 * Z2


def regular_derivative(params: OperatorParams, V: Potential, lam, dp, dq) -> Trajectory:
    """Directional derivative [d_V R](v) for v = (dp, dq) given as mesh samples."""
    lam1 = _scalar(lam)
    R, s = fundamental_batch(params, V, lam1)
    R, s = R[0], s[0]
    dp = np.broadcast_to(np.asarray(dp), (V.mesh.size,))
    dq = np.broadcast_to(np.asarray(dq), (V.mesh.size,))
    a_, b_ = ab_quantities(R, s)
    c_R = V.mesh.cumulative(a_ * dp + b_ * dq)
    c_s = V.mesh.cumulative(2 * R[:, 0] * R[:, 1] * dp + (R[:, 1] ** 2 - R[:, 0] ** 2) * dq)
    return _traj(params, lam1[0], "derivative", R * c_R[:, None] + s * c_s[:, None], V)


def solution_derivative_kernel(params: OperatorParams, V: Potential, lam, x: float):
    """G~(x, t) = s(x) R(t)^T - R(x) s(t)^T for mesh nodes t <= x; returns (t, kernel)."""
    lam1 = _scalar(lam)
    R, s = fundamental_batch(params, V, lam1)
    R, s = R[0], s[0]
    Rx = V.mesh.interpolate(R.T, x)[:, 0]
    sx = V.mesh.interpolate(s.T, x)[:, 0]
    keep = V.mesh.x <= x
    t = V.mesh.x[keep]
    G = sx[None, :, None] * R[keep][:, None, :] - Rx[None, :, None] * s[keep][:, None, :]
    return t, G


def volterra_residual(params: OperatorParams, V: Potential, lam, samples) -> float:
    """max |R - R_free - int_0^x G V R dt| over the mesh for given regular samples."""
    mesh = V.mesh
    x = mesh.x
    R0, S0 = free_solutions(params.a, x, lam)
    VR = np.stack([-V.q * samples[:, 0] + V.p * samples[:, 1], V.p * samples[:, 0] + V.q * samples[:, 1]], -1)
    A1 = mesh.cumulative(np.sum(R0 * VR, axis=-1))
    A2 = mesh.cumulative(np.sum(S0 * VR, axis=-1))
    integral = S0 * A1[:, None] - R0 * A2[:, None]
    return float(np.max(np.abs(samples - R0 - integral)))


# ---------------------------------------------------------------------------
# Picard oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PicardMesh:
    """Composite Gauss-Legendre mesh used only by the Picard oracle."""

    order: int = 20
    x_min: float = 1e-12
    ratio: float = 1.5
    x_grade: float = 0.125
    h_max: float = 1.0 / 64.0

    def build(self):
        n_geo = int(np.ceil(np.log(self.x_grade / self.x_min) / np.log(self.ratio)))
        geo = self.x_min * (self.x_grade / self.x_min) ** (np.arange(n_geo + 1) / n_geo)
        uni = np.linspace(self.x_grade, 1.0, int(np.ceil((1 - self.x_grade) / self.h_max)) + 1)
        breaks = np.concatenate([[0.0], geo, uni[1:]])
        s, w = L.leggauss(self.order)
        Vinv = np.linalg.inv(L.legvander(s, self.order - 1))
        Q = np.empty((self.order, self.order))
        for j in range(self.order):
            Q[:, j] = L.legval(s, L.legint(Vinv[:, j], lbnd=-1.0))
        h = np.diff(breaks)
        x = (breaks[:-1, None] + 0.5 * h[:, None] * (s[None, :] + 1)).reshape(-1)
        return breaks, h, x, 0.5 * w, 0.5 * Q


def picard_regular(params: OperatorParams, p_fn, q_fn, lam, tol: float = 1e-15, max_terms: int = 400,
                   grid: PicardMesh = PicardMesh()):
    """Regular solution by summing the Picard series R = sum_k R_k.

    R_0 is the free solution and R_{k+1}(x) = int_0^x G(x,t) V(t) R_k(t) dt.
    Terms are added until the newest one is below tol relative to the sum.
    Returns (x, values, terms) where x are the Gauss nodes followed by 1.0.
    """
    breaks, h, x, w, Q = grid.build()
    n = grid.order
    P = len(h)
    xe = np.concatenate([x, [1.0]])
    R0, S0 = free_solutions(params.a, xe, lam)
    p = np.asarray(p_fn(x)) * np.ones_like(x)
    q = np.asarray(q_fn(x)) * np.ones_like(x)

    def cum(f):
        fp = f.reshape(P, n)
        part = (fp @ Q.T) * h[:, None]
        tot = (fp @ w) * h
        offs = np.cumsum(tot) - tot
        return np.concatenate([(part + offs[:, None]).reshape(-1), [tot.sum()]])

    term = R0
    total = R0.copy()
    for k in range(1, max_terms + 1):
        Y = term[:-1]
        VY = np.stack([-q * Y[:, 0] + p * Y[:, 1], p * Y[:, 0] + q * Y[:, 1]], axis=-1)
        A1 = cum(np.sum(R0[:-1] * VY, axis=-1))
        A2 = cum(np.sum(S0[:-1] * VY, axis=-1))
        term = S0 * A1[:, None] - R0 * A2[:, None]
        total = total + term
        if np.max(np.abs(term)) <= tol * max(np.max(np.abs(total)), 1e-300):
            return xe, total, k
    raise SolverError(f"Picard series did not converge in {max_terms} terms", residual=float(np.max(np.abs(term))))
