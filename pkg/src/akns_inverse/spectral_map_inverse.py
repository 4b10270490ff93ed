"""The spectral map V -> (lam~, kappa~), its derivative and a Newton inverse.

Everything is truncated to the indices |n| <= N.  The inverse of the
derivative is assembled from

    X_n = -(grad kappa_n)^perp / kappa_n,
    Y_n = (-1)^n (grad lam_n)^perp / (((|n| + a/2) pi)^a kappa_n),

which are dual to (grad lam_n, grad kappa~_n) by the orthogonality relations.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .akns_solutions import OperatorParams, Potential
from .errors import DegenerateNormalizationError, DivergenceError, InvalidParamsError, SolverError
from .spectral_forward import (
    GradientPair,
    SpectralData,
    gradients,
    kappa_scale,
    spectrum,
    update_eigenvalues,
    norming_constants,
)
from .transform_operators import FunctionPair, phi_pair, psi_pair

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SpectralTarget:
    """Residue sequences (xi, eta) = (lam~_n, kappa~_n) for n = -N..N."""

    params: OperatorParams
    N: int
    xi: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        for name in ("xi", "eta"):
            v = np.array(getattr(self, name), dtype=float)
            if v.shape != (2 * self.N + 1,):
                raise InvalidParamsError(f"{name} needs {2 * self.N + 1} entries, got {v.shape}")
            if not np.all(np.isfinite(v)):
                raise InvalidParamsError(f"{name} has non-finite entries")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @classmethod
    def zeros(cls, params: OperatorParams, N: int) -> "SpectralTarget":
        return cls(params, N, np.zeros(2 * N + 1), np.zeros(2 * N + 1))

    @classmethod
    def from_spectral(cls, spectral: SpectralData) -> "SpectralTarget":
        if spectral.indices.tolist() != list(range(-spectral.N, spectral.N + 1)):
            raise InvalidParamsError("spectral data does not cover the full index range")
        return cls(spectral.params, spectral.N, spectral.lambda_tildes, spectral.kappa_tildes)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.xi, self.eta])

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector()))

    def __sub__(self, other: "SpectralTarget") -> "SpectralTarget":
        self._compatible(other)
        return SpectralTarget(self.params, self.N, self.xi - other.xi, self.eta - other.eta)

    def _compatible(self, other: "SpectralTarget"):
        if (other.N, other.params) != (self.N, self.params):
            raise InvalidParamsError("targets have different truncation or operator parameters")


@dataclass(frozen=True, eq=False)
class InverseBasis:
    """X_n and Y_n for n = -N..N, at one potential."""

    indices: np.ndarray
    X: tuple[FunctionPair, ...]
    Y: tuple[FunctionPair, ...]

    def combine(self, xi, eta) -> FunctionPair:
        mesh = self.X[0].mesh
        f = np.zeros(mesh.size)
        g = np.zeros(mesh.size)
        for c, d, Xn, Yn in zip(xi, eta, self.X, self.Y):
            f += c * Xn.f + d * Yn.f
            g += c * Xn.g + d * Yn.g
        return FunctionPair(f, g, mesh)


@dataclass(frozen=True)
class NewtonConfig:
    N: int = 24
    max_iters: int = 12
    damping: float = 1.0
    tol: float = 1e-10
    trust_radius: float = 1.0
    max_halvings: int = 6
    max_increases: int = 3

    def __post_init__(self):
        if self.N < 1 or self.max_iters < 0 or self.max_halvings < 0 or self.max_increases < 1:
            raise InvalidParamsError("N, max_iters, max_halvings and max_increases must be positive")
        if not 0 < self.damping <= 1:
            raise InvalidParamsError("damping must lie in (0, 1]")
        if self.tol <= 0 or self.trust_radius <= 0:
            raise InvalidParamsError("tol and trust_radius must be positive")


@dataclass(frozen=True)
class NewtonReport:
    converged: bool
    iterations: int
    residuals: tuple[float, ...]
    dampings: tuple[float, ...]
    step_norms: tuple[float, ...]


def _as_pair(V: Potential) -> FunctionPair:
    return FunctionPair(V.p, V.q, V.mesh)


def _check_N(params: OperatorParams, N: int):
    if N < params.a + 2:
        raise InvalidParamsError(f"N must be at least a + 2 = {params.a + 2}")


def _spectral(params, V, N, previous: SpectralData | None = None) -> SpectralData:
    if previous is not None:
        return norming_constants(params, V, update_eigenvalues(params, V, previous))
    return spectrum(params, V, N)


def forward_map(params: OperatorParams, V: Potential, N: int) -> SpectralTarget:
    """(lam~_n, kappa~_n)_{|n| <= N} of V."""
    _check_N(params, N)
    return SpectralTarget.from_spectral(_spectral(params, V, N))


def _gradients(params, V, spectral) -> list[GradientPair]:
    g = gradients(params, V, spectral)
    return [g[n] for n in spectral.indices.tolist()]


def grad_kappa_tilde(params: OperatorParams, gp: GradientPair) -> FunctionPair:
    """grad kappa~_n = (-1)^n ((|n| + a/2) pi)^a grad kappa_n."""
    return gp.grad_kappa * (1.0 / kappa_scale(params, gp.n))


def frechet_derivative(params: OperatorParams, V: Potential, N: int, v: FunctionPair,
                       spectral: SpectralData | None = None) -> SpectralTarget:
    """(<grad lam_n, v>, <grad kappa~_n, v>)_{|n| <= N}."""
    _check_N(params, N)
    spectral = spectral or spectrum(params, V, N)
    gs = _gradients(params, V, spectral)
    xi = [gp.grad_lambda.inner(v) for gp in gs]
    eta = [grad_kappa_tilde(params, gp).inner(v) for gp in gs]
    return SpectralTarget(params, N, np.real(xi), np.real(eta))


def inverse_basis(params: OperatorParams, V: Potential, N: int,
                  spectral: SpectralData | None = None) -> InverseBasis:
    _check_N(params, N)
    spectral = spectral or spectrum(params, V, N)
    X, Y = [], []
    for gp in _gradients(params, V, spectral):
        if abs(gp.kappa) < 1e-12:
            raise DegenerateNormalizationError(f"kappa_{gp.n} vanishes", n=gp.n)
        X.append(-gp.grad_kappa_rel.perp())
        Y.append(gp.grad_lambda.perp() * (kappa_scale(params, gp.n) / gp.kappa))
    return InverseBasis(spectral.indices, tuple(X), tuple(Y))


def inverse_derivative(params: OperatorParams, V: Potential, target: SpectralTarget,
                       basis: InverseBasis | None = None) -> FunctionPair:
    """sum_n xi_n X_n + eta_n Y_n over the retained modes."""
    basis = basis or inverse_basis(params, V, target.N)
    return basis.combine(target.xi, target.eta)


def newton_invert(params: OperatorParams, target: SpectralTarget, V0: Potential,
                  cfg: NewtonConfig = NewtonConfig()) -> tuple[Potential, NewtonReport]:
    """Damped Newton iteration V <- V + t dF(V)^-1 (target - F(V)).

    A trial step is accepted when it lowers the data residual; otherwise t is
    halved up to cfg.max_halvings times and the best trial is taken anyway.
    DivergenceError is raised after cfg.max_increases consecutive accepted
    steps that increase the residual.
    """
    if target.N != cfg.N or target.params != params:
        raise InvalidParamsError("target does not match the Newton configuration")
    _check_N(params, cfg.N)
    V = V0
    sd = spectrum(params, V, cfg.N)
    res = (target - SpectralTarget.from_spectral(sd)).norm()
    residuals, dampings, steps = [res], [], []
    t = cfg.damping
    increases = 0
    it = 0
    while res >= cfg.tol and it < cfg.max_iters:
        it += 1
        gap = target - SpectralTarget.from_spectral(sd)
        dV = inverse_derivative(params, V, gap, inverse_basis(params, V, cfg.N, sd))
        size = dV.norm()
        if size > cfg.trust_radius:
            dV = dV * (cfg.trust_radius / size)
        best = None
        for _ in range(cfg.max_halvings + 1):
            trial = V.plus(dV.f, dV.g, t)
            try:
                sd_t = _spectral(params, trial, cfg.N, sd)
                res_t = (target - SpectralTarget.from_spectral(sd_t)).norm()
            except SolverError as err:
                log.debug("trial step failed: %s", err)
                res_t, sd_t = math.inf, None
            if best is None or res_t < best[0]:
                best = (res_t, trial, sd_t, t)
            if res_t < res:
                break
            t *= 0.5
        res_t, trial, sd_t, t_used = best
        if sd_t is None:
            raise DivergenceError("every damped trial step failed in the forward solver",
                                  iteration=it, residuals=residuals)
        increases = increases + 1 if res_t >= res else 0
        V, sd, res = trial, sd_t, res_t
        residuals.append(res)
        dampings.append(t_used)
        steps.append(t_used * dV.norm())
        log.info("newton %d: residual %.3e damping %.3g", it, res, t_used)
        if increases >= cfg.max_increases:
            raise DivergenceError("data residual grew on consecutive damped steps",
                                  iteration=it, residuals=residuals)
        t = min(cfg.damping, 2 * t_used) if res_t < residuals[-2] else t_used
    report = NewtonReport(res < cfg.tol, it, tuple(residuals), tuple(dampings), tuple(steps))
    return V, report


@dataclass(frozen=True, eq=False)
class IsospectralDirections:
    indices: np.ndarray
    tangent: tuple[FunctionPair, ...]
    normal: tuple[FunctionPair, ...]


def isospectral_directions(params: OperatorParams, V: Potential, N: int,
                           spectral: SpectralData | None = None) -> IsospectralDirections:
    """Tangent family Y_n and normal family Y_n^perp of the isospectral set at V."""
    basis = inverse_basis(params, V, N, spectral)
    return IsospectralDirections(basis.indices, basis.Y, tuple(y.perp() for y in basis.Y))


def isospectral_flow(params: OperatorParams, V: Potential, N: int, coeffs, eps,
                     directions: IsospectralDirections | None = None):
    """max_n |lam_n(V + e sum c_k Y_k) - lam_n(V)| for each e in eps.

    coeffs maps index -> coefficient.  Returns (eps, deviations).
    """
    base = spectrum(params, V, N)
    directions = directions or isospectral_directions(params, V, N, base)
    pos = {n: i for i, n in enumerate(directions.indices.tolist())}
    mesh = V.mesh
    f = np.zeros(mesh.size)
    g = np.zeros(mesh.size)
    for n, c in coeffs.items():
        f += c * directions.tangent[pos[n]].f
        g += c * directions.tangent[pos[n]].g
    eps = np.asarray(eps, dtype=float)
    dev = []
    for e in eps:
        moved = update_eigenvalues(params, V.plus(f, g, e), base)
        dev.append(float(np.max(np.abs(moved.lambdas - base.lambdas))))
    return eps, np.array(dev)


def loglog_slope(eps, dev) -> float:
    return float(np.polyfit(np.log(eps), np.log(dev), 1)[0])


@dataclass(frozen=True, eq=False)
class ResidualDiagnostics:
    indices: np.ndarray
    r: tuple[FunctionPair, ...]
    s: tuple[FunctionPair, ...]
    r_norms: np.ndarray
    s_norms: np.ndarray


def residual_diagnostics(params: OperatorParams, V: Potential, N: int,
                         spectral: SpectralData | None = None) -> ResidualDiagnostics:
    """r_n = grad lam_n - Phi_a(lam_n x) and s_n = grad kappa~_n - Psi_a(lam_n x)."""
    _check_N(params, N)
    spectral = spectral or spectrum(params, V, N)
    r, s = [], []
    for gp in _gradients(params, V, spectral):
        r.append(gp.grad_lambda - phi_pair(params.a, gp.lam, V.mesh))
        s.append(grad_kappa_tilde(params, gp) - psi_pair(params.a, gp.lam, V.mesh))
    return ResidualDiagnostics(
        spectral.indices, tuple(r), tuple(s),
        np.array([x.norm() for x in r]), np.array([x.norm() for x in s]),
    )


@dataclass(frozen=True)
class UniquenessReport:
    distance: float
    potential_distance: float
    xi_distance: float
    eta_distance: float


def uniqueness_probe(params: OperatorParams, V: Potential, W: Potential, N: int) -> UniquenessReport:
    """Distance between the truncated data of V and W, next to ||V - W||_2."""
    d = forward_map(params, V, N) - forward_map(params, W, N)
    pv = _as_pair(V) - _as_pair(W)
    return UniquenessReport(d.norm(), pv.norm(), float(np.linalg.norm(d.xi)), float(np.linalg.norm(d.eta)))
