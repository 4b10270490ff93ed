"""Eigenvalues, norming constants and their gradients.

Numbering.  With c0 = a pi/2 + beta, the 2 N0 + 1 - a roots inside
|lam - c0| < (N0 + 1/2) pi carry the indices a - N0, ..., N0 in increasing
order.  Beyond that, lam_n (n > N0) is the root within pi/2 of n pi + c0, and
lam_m (m < a - N0) the root within pi/2 of (m - a) pi + c0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .akns_solutions import (
    DEGENERACY_TOL,
    OperatorParams,
    Potential,
    _det,
    ab_quantities,
    characteristic,
    characteristic_with_derivative,
    fast_characteristic,
    free_solutions,
    fundamental_batch,
    regular_endpoint,
)
from .errors import InvalidParamsError, RootCountError, SolverError
from .transform_operators import FunctionPair


def sgn(n: int) -> int:
    """Sign with sgn(0) = 0, so that the zero potential has lam~_0 = 0 when beta = 0."""
    return (n > 0) - (n < 0)


def lambda_center(params: OperatorParams, n: int) -> float:
    """(n + sgn(n) a/2) pi + beta."""
    return (n + sgn(n) * params.a / 2) * math.pi + params.beta


def kappa_scale(params: OperatorParams, n: int) -> float:
    """(-1)^n / ((|n| + a/2) pi)^a."""
    return (-1) ** (n % 2) / ((abs(n) + params.a / 2) * math.pi) ** params.a


@dataclass(frozen=True)
class EigenEntry:
    n: int
    lam: float
    kappa: float = math.nan
    lambda_tilde: float = math.nan
    kappa_tilde: float = math.nan


@dataclass(frozen=True)
class RootConfig:
    scan_step: float = math.pi / 24
    bisect_width: float = 1e-6
    newton_tol: float = 1e-13
    max_newton: int = 8
    max_doublings: int = 3

    def __post_init__(self):
        if not (0 < self.scan_step < 1.0 and 0 < self.bisect_width < self.scan_step):
            raise InvalidParamsError("need 0 < bisect_width < scan_step < 1")


@dataclass(frozen=True)
class SpectralData:
    params: OperatorParams
    N: int
    entries: tuple[EigenEntry, ...]
    meta: dict = field(default_factory=dict)

    @property
    def indices(self) -> np.ndarray:
        return np.array([e.n for e in self.entries])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries])

    @property
    def kappas(self) -> np.ndarray:
        return np.array([e.kappa for e in self.entries])

    @property
    def lambda_tildes(self) -> np.ndarray:
        return np.array([e.lambda_tilde for e in self.entries])

    @property
    def kappa_tildes(self) -> np.ndarray:
        return np.array([e.kappa_tilde for e in self.entries])

    def entry(self, n: int) -> EigenEntry:
        for e in self.entries:
            if e.n == n:
                return e
        raise KeyError(n)

    def lam(self, n: int) -> float:
        return self.entry(n).lam


# ---------------------------------------------------------------------------
# root finding
# ---------------------------------------------------------------------------

def _scan(params, V, lo, hi, cfg: RootConfig):
    """Sign-change brackets of D on [lo, hi] from the approximate evaluator."""
    count = int(math.ceil((hi - lo) / cfg.scan_step)) + 1
    grid = np.linspace(lo, hi, count)
    D, _ = fast_characteristic(params, V, grid)
    s = np.sign(D)
    left = np.flatnonzero(s[:-1] * s[1:] < 0)
    zeros = np.flatnonzero(s == 0)
    lo_b = np.concatenate([grid[left], grid[zeros]])
    hi_b = np.concatenate([grid[left + 1], grid[zeros]])
    return lo_b, hi_b


def _bisect(params, V, lo_b, hi_b, cfg: RootConfig):
    lo_b, hi_b = lo_b.copy(), hi_b.copy()
    f_lo, _ = fast_characteristic(params, V, lo_b)
    while np.any(hi_b - lo_b > cfg.bisect_width):
        mid = 0.5 * (lo_b + hi_b)
        f_mid, _ = fast_characteristic(params, V, mid)
        go_right = np.sign(f_mid) == np.sign(f_lo)
        lo_b = np.where(go_right, mid, lo_b)
        f_lo = np.where(go_right, f_mid, f_lo)
        hi_b = np.where(go_right, hi_b, mid)
    return lo_b, hi_b


def polish_roots(params: OperatorParams, V: Potential, guesses, cfg: RootConfig = RootConfig(), window=None):
    """Newton on the exact D with the approximate derivative; returns (roots, dD).

    window, if given, is a pair (lo, hi) of arrays the iterates must stay in.
    """
    x = np.array(guesses, dtype=float)
    if x.size == 0:
        return x, x.copy()
    active = np.ones(x.size, dtype=bool)
    dD = np.zeros_like(x)
    for it in range(cfg.max_newton):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        D = characteristic(params, V, x[idx])
        _, d = fast_characteristic(params, V, x[idx])
        dD[idx] = d
        if np.any(d == 0):
            raise SolverError("vanishing derivative of D at a root candidate (root not simple)")
        step = D / d
        x[idx] -= step
        done = np.abs(step) <= cfg.newton_tol * (1.0 + np.abs(x[idx]))
        if it >= 1:
            active[idx[done]] = False
    if np.any(active):
        raise SolverError("Newton polishing of eigenvalues did not converge",
                          residual=float(np.max(np.abs(characteristic(params, V, x[active])))))
    if window is not None:
        lo, hi = window
        bad = (x < lo - 1e-6) | (x > hi + 1e-6)
        if np.any(bad):
            raise SolverError("Newton iterate left its bracket", residual=float(np.max(np.abs(x[bad]))))
    return x, dD


def _number(params, roots, N, N0):
    """Assign indices; raises RootCountError when a disk holds the wrong number of roots."""
    a, c0 = params.a, params.a * math.pi / 2 + params.beta
    out = {}
    inner = roots[np.abs(roots - c0) < (N0 + 0.5) * math.pi]
    if inner.size != 2 * N0 + 1 - a:
        raise RootCountError(
            f"central disk holds {inner.size} roots, expected {2 * N0 + 1 - a}", N0=N0, found=int(inner.size)
        )
    for i, r in enumerate(np.sort(inner)):
        out[a - N0 + i] = r
    for k in range(N0 + 1, N + 1):
        c = k * math.pi + c0
        sel = roots[(roots >= c - math.pi / 2) & (roots < c + math.pi / 2)]
        if sel.size != 1:
            raise RootCountError(f"disk around {c:.6g} holds {sel.size} roots", N0=N0, index=k)
        out[k] = sel[0]
    for k in range(-N0 - 1, -N - a - 1, -1):
        m = k + a
        if m < -N:
            break
        c = k * math.pi + c0
        sel = roots[(roots > c - math.pi / 2) & (roots <= c + math.pi / 2)]
        if sel.size != 1:
            raise RootCountError(f"disk around {c:.6g} holds {sel.size} roots", N0=N0, index=m)
        out[m] = sel[0]
    return {n: lam for n, lam in out.items() if abs(n) <= N}


def _entries(params, numbered):
    return tuple(
        EigenEntry(n=n, lam=float(lam), lambda_tilde=float(lam - lambda_center(params, n)))
        for n, lam in sorted(numbered.items())
    )


def locate_eigenvalues(params: OperatorParams, V: Potential, N: int, N0: int | None = None,
                       cfg: RootConfig = RootConfig()) -> SpectralData:
    """Eigenvalues lam_{a,n} for |n| <= N (lam only)."""
    if not V.is_real:
        raise InvalidParamsError("eigenvalue location needs a real potential")
    if N < params.a + 2:
        raise InvalidParamsError(f"N must be at least a + 2 = {params.a + 2}")
    a, c0 = params.a, params.a * math.pi / 2 + params.beta
    N0 = max(a + 2, 8) if N0 is None else N0
    last = None
    for _ in range(cfg.max_doublings + 1):
        lo = c0 - (max(N + a, N0) + 0.5) * math.pi - 0.05
        hi = c0 + (max(N, N0) + 0.5) * math.pi + 0.05
        lo_b, hi_b = _scan(params, V, lo, hi, cfg)
        lo_b, hi_b = _bisect(params, V, lo_b, hi_b, cfg)
        roots, dD = polish_roots(params, V, 0.5 * (lo_b + hi_b), cfg, window=(lo_b, hi_b))
        order = np.argsort(roots)
        roots = roots[order]
        if np.any(np.diff(roots) <= 1e-9):
            raise SolverError("two brackets converged to the same root")
        try:
            numbered = _number(params, roots, N, N0)
        except RootCountError as err:
            last = err
            N0 *= 2
            continue
        meta = {"potential": V.digest(), "N0": N0, "scan_step": cfg.scan_step, "newton_tol": cfg.newton_tol}
        return SpectralData(params, N, _entries(params, numbered), meta)
    raise last


def update_eigenvalues(params: OperatorParams, V: Potential, previous: SpectralData,
                       cfg: RootConfig = RootConfig()) -> SpectralData:
    """Re-locate eigenvalues for a nearby potential by Newton from previous ones.

    The result is accepted only if the roots keep their order and each stays
    within pi/4 of its previous value; otherwise a full scan is run.
    """
    old = previous.lambdas
    try:
        roots, _ = polish_roots(params, V, old, cfg)
    except SolverError:
        return locate_eigenvalues(params, V, previous.N, previous.meta.get("N0"), cfg)
    spacing_ok = np.all(np.diff(roots) > 0) and np.all(np.abs(roots - old) < math.pi / 4)
    if not spacing_ok:
        return locate_eigenvalues(params, V, previous.N, previous.meta.get("N0"), cfg)
    numbered = dict(zip(previous.indices.tolist(), roots))
    meta = dict(previous.meta, potential=V.digest())
    return SpectralData(params, previous.N, _entries(params, numbered), meta)


def count_roots(params: OperatorParams, V: Potential, center: complex, radius: float, samples: int = 256) -> int:
    """Number of zeros of D inside a circle, by the argument principle.

    The sampling is doubled until every phase increment is below 1 radian.
    """
    for _ in range(6):
        t = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
        lam = center + radius * np.exp(1j * t)
        D = characteristic(params, V, lam)
        if np.any(D == 0):
            raise SolverError("a zero of D lies on the counting circle")
        dphi = np.angle(np.roll(D, -1) / D)
        if np.max(np.abs(dphi)) < 1.0:
            return int(round(np.sum(dphi) / (2 * np.pi)))
        samples *= 2
    raise SolverError("argument principle sampling did not resolve the phase")


# ---------------------------------------------------------------------------
# norming constants
# ---------------------------------------------------------------------------

def norming_constants(params: OperatorParams, V: Potential, spectral: SpectralData) -> SpectralData:
    """Fill kappa_{a,n} = R(1, lam_n) . u_beta^perp and kappa~."""
    R1 = regular_endpoint(params, V, spectral.lambdas)
    kappa = R1 @ params.u_perp
    if np.any(np.abs(kappa) < 1e-12 * np.max(np.abs(R1), axis=1)):
        raise SolverError("a norming constant vanished, which contradicts simple spectrum")
    entries = tuple(
        replace(e, kappa=float(k), kappa_tilde=float(k / kappa_scale(params, e.n) - 1.0))
        for e, k in zip(spectral.entries, kappa)
    )
    return SpectralData(params, spectral.N, entries, spectral.meta)


def spectrum(params: OperatorParams, V: Potential, N: int, **kw) -> SpectralData:
    """Eigenvalues and norming constants for |n| <= N."""
    return norming_constants(params, V, locate_eigenvalues(params, V, N, **kw))


# ---------------------------------------------------------------------------
# gradients
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GradientPair:
    n: int
    lam: float
    kappa: float
    grad_lambda: FunctionPair
    grad_kappa_rel: FunctionPair
    A_n: FunctionPair
    G_n: FunctionPair
    norm_sq: float
    rs_inner: float
    wronskian: float
    normalization: str

    @property
    def grad_kappa(self) -> FunctionPair:
        return self.kappa * self.grad_kappa_rel


def normalize_singular(params: OperatorParams, R, s, lam):
    """Shift s by a multiple of R to the normalized singular solution S~/W where possible.

    Returns (s_out, W, ok) with ok False where |W| < DEGENERACY_TOL (s kept).
    """
    lam = np.atleast_1d(np.asarray(lam))
    S1 = free_solutions(params.a, 1.0, lam)[1]
    R1, s1 = R[:, -1], s[:, -1]
    W = _det(R1, S1)
    ok = np.abs(W) >= DEGENERACY_TOL
    target = S1 / np.where(ok, W, 1.0)[:, None]
    c = np.sum((target - s1) * R1, axis=-1) / np.sum(R1 * R1, axis=-1)
    c = np.where(ok, c, 0.0)
    return s + c[:, None, None] * R, W, ok


def gradients(params: OperatorParams, V: Potential, spectral: SpectralData, indices=None) -> dict[int, GradientPair]:
    """GradientPair for each requested index (all by default), computed as one batch."""
    ns = spectral.indices.tolist() if indices is None else list(indices)
    lams = np.array([spectral.lam(n) for n in ns])
    R, s = fundamental_batch(params, V, lams)
    s, W, ok = normalize_singular(params, R, s, lams)
    mesh = V.mesh
    out = {}
    for i, n in enumerate(ns):
        Ri, si = R[i], s[i]
        norm_sq = float(mesh.integrate(np.sum(Ri * Ri, axis=-1)))
        G = Ri / math.sqrt(norm_sq)
        gl = FunctionPair(2 * G[:, 0] * G[:, 1], G[:, 1] ** 2 - G[:, 0] ** 2, mesh)
        a_, b_ = ab_quantities(Ri, si)
        A = FunctionPair(a_, b_, mesh)
        rs = float(mesh.integrate(np.sum(Ri * si, axis=-1)))
        out[n] = GradientPair(
            n=n,
            lam=float(lams[i]),
            kappa=float(Ri[-1] @ params.u_perp),
            grad_lambda=gl,
            grad_kappa_rel=A + rs * gl,
            A_n=A,
            G_n=FunctionPair(G[:, 0], G[:, 1], mesh),
            norm_sq=norm_sq,
            rs_inner=rs,
            wronskian=float(W[i]),
            normalization="wronskian" if ok[i] else "unit-partner",
        )
    return out


def eigen_gradients(params: OperatorParams, V: Potential, n: int, spectral: SpectralData | None = None) -> GradientPair:
    if spectral is None:
        spectral = locate_eigenvalues(params, V, max(abs(n), params.a + 2))
    return gradients(params, V, spectral, [n])[n]


def simplicity_check(params: OperatorParams, V: Potential, lam: float):
    """Return (||R||^2, -(R(1).u_perp) dD/dlam) at an eigenvalue lam."""
    R, _ = fundamental_batch(params, V, np.array([lam]))
    _, dD = characteristic_with_derivative(params, V, lam)
    lhs = float(V.mesh.integrate(np.sum(R[0] * R[0], axis=-1)))
    return lhs, float(-(R[0, -1] @ params.u_perp) * dD)


# ---------------------------------------------------------------------------
# orthogonality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BracketFamily:
    name: str
    values: np.ndarray
    expected: np.ndarray

    @property
    def deviation(self) -> float:
        return float(np.max(np.abs(self.values - self.expected)))


@dataclass(frozen=True)
class OrthogonalityReport:
    indices: tuple[int, ...]
    families: tuple[BracketFamily, ...]

    @property
    def max_deviation(self) -> float:
        return max(f.deviation for f in self.families)

    def family(self, name: str) -> BracketFamily:
        for f in self.families:
            if f.name == name:
                return f
        raise KeyError(name)


def _bracket(us, vs):
    return np.array([[u.inner(v.perp()) for v in vs] for u in us])


def orthogonality_report(params: OperatorParams, V: Potential, Jmax: int,
                         spectral: SpectralData | None = None) -> OrthogonalityReport:
    """The five bracket families <u_j, v_k^perp> for |j|, |k| <= Jmax with their exact values."""
    if spectral is None:
        spectral = spectrum(params, V, max(Jmax, params.a + 2))
    idx = [n for n in spectral.indices.tolist() if abs(n) <= Jmax]
    g = gradients(params, V, spectral, idx)
    gl = [g[n].grad_lambda for n in idx]
    A = [g[n].A_n for n in idx]
    gk = [g[n].grad_kappa for n in idx]
    eye = np.eye(len(idx))
    zero = np.zeros_like(eye)
    kap = np.diag([g[n].kappa for n in idx])
    fams = (
        BracketFamily("grad_lambda|grad_lambda_perp", _bracket(gl, gl), zero),
        BracketFamily("A|grad_lambda_perp", _bracket(A, gl), eye),
        BracketFamily("A|A_perp", _bracket(A, A), zero),
        BracketFamily("grad_kappa|grad_kappa_perp", _bracket(gk, gk), zero),
        BracketFamily("grad_kappa|grad_lambda_perp", _bracket(gk, gl), kap),
    )
    return OrthogonalityReport(tuple(idx), fams)
