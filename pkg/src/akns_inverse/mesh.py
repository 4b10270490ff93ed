"""Graded panel mesh on [0, 1] with right-Radau nodes.

Panels are geometrically refined toward 0 and uniform away from it.  Every
panel carries the ``order`` right-Radau points, so x = 1 is a node and x = 0
is not (the singular solutions blow up there).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as L


@dataclass(frozen=True)
class MeshConfig:
    order: int = 16
    x_min: float = 1e-13
    ratio: float = 2.0
    x_grade: float = 1.0 / 16.0
    h_max: float = 1.0 / 40.0

    def __post_init__(self):
        if self.order < 4:
            raise ValueError("order must be >= 4")
        if not (0 < self.x_min < self.x_grade < 1):
            raise ValueError("need 0 < x_min < x_grade < 1")
        if self.ratio <= 1 or self.h_max <= 0:
            raise ValueError("ratio must exceed 1 and h_max must be positive")


@lru_cache(maxsize=None)
def _radau_reference(n: int):
    """Right-Radau nodes c, weights w on [0,1], integration matrix Q and V^{-1}."""
    coef = np.zeros(n + 1)
    coef[n] = 1.0
    coef[n - 1] = -1.0
    s = np.sort(np.real(L.legroots(coef)))
    s[-1] = 1.0
    V = L.legvander(s, n - 1)
    Vinv = np.linalg.inv(V)
    # integrals on [-1, s_i] of each Lagrange basis function
    Q = np.empty((n, n))
    for j in range(n):
        anti = L.legint(Vinv[:, j], lbnd=-1.0)
        Q[:, j] = L.legval(s, anti)
    c = 0.5 * (s + 1.0)
    Q = 0.5 * Q
    w = Q[-1].copy()
    return c, w, Q, Vinv, s


class Mesh:
    """Flattened node set of all panels, with quadrature and cumulative integrals."""

    def __init__(self, config: MeshConfig = MeshConfig()):
        self.config = config
        n = config.order
        n_geo = int(np.ceil(np.log(config.x_grade / config.x_min) / np.log(config.ratio)))
        geo = config.x_grade * (config.x_min / config.x_grade) ** (np.arange(n_geo, -1, -1) / n_geo)
        n_uni = int(np.ceil((1.0 - config.x_grade) / config.h_max))
        uni = np.linspace(config.x_grade, 1.0, n_uni + 1)
        self.breaks = np.concatenate([[0.0], geo, uni[1:]])
        self.breaks[-1] = 1.0
        self.n_panels = len(self.breaks) - 1
        self.order = n
        c, w, Q, Vinv, s = _radau_reference(n)
        self.ref_nodes = c
        self.ref_weights = w
        self.ref_Q = Q
        self._Vinv = Vinv
        self.h = np.diff(self.breaks)
        self.panel_x = self.breaks[:-1, None] + self.h[:, None] * c[None, :]
        self.panel_x[:, -1] = self.breaks[1:]
        self.x = self.panel_x.reshape(-1)
        self.weights = (self.h[:, None] * w[None, :]).reshape(-1)
        self.size = self.x.size
        self.n_geo = n_geo
        self.geo_ratio = (config.x_grade / config.x_min) ** (1.0 / n_geo)
        self._moment_cache = {}

    # identity -----------------------------------------------------------------
    @property
    def key(self):
        return self.config

    def __eq__(self, other):
        return isinstance(other, Mesh) and other.config == self.config

    def __hash__(self):
        return hash(self.config)

    def __repr__(self):
        return f"Mesh(panels={self.n_panels}, order={self.order}, nodes={self.size})"

    # quadrature -----------------------------------------------------------------
    def integrate(self, f):
        """Integral over [0,1] of grid samples (last axis)."""
        return np.asarray(f) @ self.weights

    def inner(self, f, g):
        return self.integrate(np.asarray(f) * np.asarray(g))

    def _panels(self, f):
        f = np.asarray(f)
        return f.reshape(f.shape[:-1] + (self.n_panels, self.order))

    def _partial(self, f):
        fp = self._panels(f)
        part = np.einsum("...pj,ij->...pi", fp, self.ref_Q) * self.h[:, None]
        return part

    def cumulative(self, f):
        """F(x_i) = int_0^{x_i} f, panel-wise spectral integration."""
        part = self._partial(f)
        tot = part[..., -1]
        offs = np.cumsum(tot, axis=-1) - tot
        out = part + offs[..., None]
        return out.reshape(out.shape[:-2] + (self.size,))

    def cumulative_upper(self, f):
        """F(x_i) = int_{x_i}^1 f, accumulated from the right end inward."""
        part = self._partial(f)
        tot = part[..., -1]
        rest = np.cumsum(tot[..., ::-1], axis=-1)[..., ::-1] - tot
        out = (tot[..., None] - part) + rest[..., None]
        return out.reshape(out.shape[:-2] + (self.size,))

    def _lagrange(self, s):
        return L.legvander(s, self.order - 1) @ self._Vinv

    def _moments(self, lo, hi, power, upper=False):
        """W[i, j] = int l_j(t) t^power dt over [lo, x_i] (or [x_i, hi] when upper)."""
        g, gw = L.leggauss(64)
        ends = lo + (hi - lo) * self.ref_nodes
        W = np.empty((self.order, self.order))
        for i, e in enumerate(ends):
            a, b = (e, hi) if upper else (lo, e)
            t = a + 0.5 * (b - a) * (g + 1.0)
            W[i] = 0.5 * (b - a) * (gw * t**power) @ self._lagrange(2.0 * (t - lo) / (hi - lo) - 1.0)
        return W

    # u^k (ln u)^r terms fitted on the first panel, u = x / b_1
    FIRST_PANEL_BASIS = ((0, 0), (1, 0), (2, 0), (3, 0), (0, 1), (1, 1), (0, 2))

    def _first_panel_fit(self):
        """C with c = C f: least-squares coefficients of f on FIRST_PANEL_BASIS.

        The first panel has width x_min, so smooth data is resolved by a few
        powers; the log terms capture what U_1 produces from a nonzero f(0).
        """
        u = self.ref_nodes
        B = np.stack([u**k * np.log(u) ** r for k, r in self.FIRST_PANEL_BASIS], axis=1)
        return np.linalg.pinv(B)

    def weighted_operator(self, m: int, upper: bool) -> "WeightedOperator":
        """f -> x^(m-1) int_x^1 f t^-m dt (upper) or x^-m int_0^x t^(m-1) f dt (lower).

        The weights t^-m, t^(m-1) are integrated exactly against the panel
        interpolants (product integration); the first panel uses a low-degree
        monomial fit.  Scale factors only ever appear as ratios of abscissas
        no larger than one across panels, so nothing overflows near x = 0.
        """
        key = (int(m), bool(upper))
        if key not in self._moment_cache:
            if m < 1:
                raise ValueError("weight index m must be >= 1")
            self._moment_cache[key] = WeightedOperator(self, int(m), bool(upper))
        return self._moment_cache[key]

    # interpolation ----------------------------------------------------------------
    def locate(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.breaks, x, side="left") - 1
        return np.clip(k, 0, self.n_panels - 1)

    def interpolate(self, f, x):
        """Evaluate the panel interpolants of samples f (last axis) at points x."""
        f = np.asarray(f)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = self.locate(x)
        s = 2.0 * (x - self.breaks[k]) / self.h[k] - 1.0
        coeffs = np.einsum("ij,...pj->...pi", self._Vinv, self._panels(f))
        basis = L.legvander(s, self.order - 1)
        return np.einsum("...ki,ki->...k", coeffs[..., k, :], basis)


def _log_power_integral(s: int, r: int, v, scale=1.0):
    """scale * F(v) for the antiderivative F of v^s (ln v)^r with F(0) = 0 when s > -1.

    For s != -1 the factor v^(s+1) is combined with scale before multiplying, so
    scale = v^-m style prefactors never meet an overflowing power.
    """
    v = np.asarray(v, dtype=float)
    lv = np.log(v)
    if s == -1:
        return scale * lv ** (r + 1) / (r + 1)
    e = s + 1
    if r == 0:
        g = 1.0 / e
    elif r == 1:
        g = lv / e - 1.0 / e**2
    else:
        g = lv**2 / e - 2 * lv / e**2 + 2.0 / e**3
    return (scale * v**e) * g


class WeightedOperator:
    """Matrix-free form of :meth:`Mesh.weighted_operator`."""

    def __init__(self, mesh: Mesh, m: int, upper: bool):
        self.mesh, self.m, self.upper = mesh, m, upper
        n, P = mesh.order, mesh.n_panels
        br = mesh.breaks
        power = -m if upper else m - 1
        own = np.empty((P, n, n))
        tot = np.empty((P, n))
        u = 1.0 + (mesh.geo_ratio - 1.0) * mesh.ref_nodes
        ref = mesh._moments(1.0, mesh.geo_ratio, power, upper)
        ref_tot = mesh._moments(1.0, mesh.geo_ratio, power)[-1]
        for p in range(1, P):
            if p <= mesh.n_geo:
                if upper:
                    own[p] = (u ** (m - 1))[:, None] * ref
                    tot[p] = ref_tot
                else:
                    own[p] = (u ** (-m))[:, None] * ref
                    tot[p] = mesh.geo_ratio ** (-m) * ref_tot
            else:
                xp = mesh.panel_x[p]
                W = mesh._moments(br[p], br[p + 1], power, upper)
                t = mesh._moments(br[p], br[p + 1], power)[-1]
                if upper:
                    own[p] = (xp ** (m - 1))[:, None] * W
                    tot[p] = br[p] ** (m - 1) * t
                else:
                    own[p] = (xp ** (-m))[:, None] * W
                    tot[p] = br[p + 1] ** (-m) * t
        C = mesh._first_panel_fit()
        c = mesh.ref_nodes
        basis = mesh.FIRST_PANEL_BASIS
        if upper:
            # u^(m-1) int_u^1 v^(k-m) (ln v)^r dv
            cols = [c ** (m - 1) * _log_power_integral(k - m, r, 1.0) - _log_power_integral(k - m, r, c, c ** (m - 1))
                    for k, r in basis]
            own[0] = np.stack(cols, axis=1) @ C
            tot[0] = np.nan
            # ratio (b_p / b_{p+1})^(m-1) carrying G_{p+1} down to panel p
            self._carry = (br[1:-1] / br[2:]) ** (m - 1)
            self._row = (mesh.panel_x / br[1:, None]) ** (m - 1)
        else:
            # u^-m int_0^u v^(m-1+k) (ln v)^r dv
            own[0] = np.stack([_log_power_integral(m - 1 + k, r, c, c ** (-float(m))) for k, r in basis], axis=1) @ C
            tot[0] = np.array([_log_power_integral(m - 1 + k, r, 1.0) for k, r in basis]) @ C
            self._carry = (br[1:-1] / br[2:]) ** m
            with np.errstate(divide="ignore"):
                self._row = (br[:-1, None] / mesh.panel_x) ** m
        self._own, self._tot = own, tot

    def __call__(self, f):
        mesh = self.mesh
        fp = mesh._panels(np.asarray(f))
        out = np.einsum("pij,...pj->...pi", self._own, fp)
        c = np.einsum("pj,...pj->...p", self._tot[1:] if self.upper else self._tot, fp[..., 1:, :] if self.upper else fp)
        P = mesh.n_panels
        acc = np.zeros(c.shape[:-1] + (P + 1,), dtype=c.dtype)
        if self.upper:
            # acc[p] = G_p = sum_{p' >= p} (b_p / b_p')^(m-1) c_p' for p >= 1
            acc[..., P - 1] = c[..., -1]
            for p in range(P - 2, 0, -1):
                acc[..., p] = c[..., p - 1] + self._carry[p - 1] * acc[..., p + 1]
            tail = self._row * acc[..., 1:P + 1, None]
        else:
            # acc[p + 1] = H_p = sum_{p' <= p} (b_{p'+1} / b_{p+1})^m c_p'
            acc[..., 1] = c[..., 0]
            for p in range(1, P):
                acc[..., p + 1] = c[..., p] + self._carry[p - 1] * acc[..., p]
            tail = self._row * acc[..., 0:P, None]
        out = out + tail
        return out.reshape(out.shape[:-2] + (mesh.size,))

    def dense(self) -> np.ndarray:
        return self(np.eye(self.mesh.size)).T


@lru_cache(maxsize=None)
def mesh_for(config: MeshConfig) -> Mesh:
    return Mesh(config)


def default_mesh() -> Mesh:
    return mesh_for(MeshConfig())
