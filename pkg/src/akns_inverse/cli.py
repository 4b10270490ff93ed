"""Command-line front end: ``python -m akns_inverse <command> ...``.

Commands write canonical JSON (schema version :data:`SCHEMA_VERSION`) either
to ``--out`` (atomically, with a CSV mirror next to it) or to stdout.  Errors
are reported as ``{"error": {"kind": ..., "message": ...}}`` with exit code 2
for usage and schema problems and 1 for solver, identity or inversion
failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import potentials
from .akns_solutions import OperatorParams, Potential
from .checks import SUITES, run_suite
from .errors import AKNSError, InvalidParamsError, SchemaError
from .spectral_forward import SpectralData, spectrum
from .spectral_map_inverse import (
    NewtonConfig,
    SpectralTarget,
    isospectral_flow,
    loglog_slope,
    newton_invert,
    residual_diagnostics,
)
from .transform_operators import FunctionPair

SCHEMA_VERSION = 1
COMMANDS = ("spectrum", "forward", "invert", "check", "isoflow", "diagnose")


@dataclass(frozen=True)
class JobSpec:
    command: str
    a: int = 0
    beta: float = 0.0
    potential: str = "zero"
    seed: int = 0
    N: int = 8
    out: Path | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InvalidParamsError(f"unknown command {self.command!r}")
        if not 0 <= self.a <= 20:
            raise InvalidParamsError(f"a must be an integer in [0, 20], got {self.a}")
        if not math.isfinite(self.beta):
            raise InvalidParamsError("beta must be finite")
        if self.N < self.a + 2:
            raise InvalidParamsError(f"N must be at least a + 2 = {self.a + 2}")
        if not 0 <= self.seed < 2**64:
            raise InvalidParamsError("seed must be a 64-bit unsigned integer")
        if self.potential not in potentials.BUILTINS and not Path(self.potential).is_file():
            raise InvalidParamsError(f"potential {self.potential!r} is neither a builtin nor a file")

    @property
    def params(self) -> OperatorParams:
        return OperatorParams(self.a, self.beta)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _finite(x) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise AKNSError("refusing to serialize a non-finite number")
    return x


def dumps(obj) -> str:
    """Canonical JSON: insertion-ordered keys, shortest round-trip floats, trailing newline."""
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


def atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def spectral_json(sd: SpectralData, source: dict) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "kind": "spectrum",
        "a": sd.params.a,
        "beta": _finite(sd.params.beta),
        "N": sd.N,
        "potential": source,
        "entries": [
            {"n": e.n, "lambda": _finite(e.lam), "lambda_tilde": _finite(e.lambda_tilde),
             "kappa": _finite(e.kappa), "kappa_tilde": _finite(e.kappa_tilde)}
            for e in sd.entries
        ],
    }


def spectral_csv(sd: SpectralData) -> str:
    return csv_text(["n", "lambda", "lambda_tilde", "kappa", "kappa_tilde"],
                    [(e.n, e.lam, e.lambda_tilde, e.kappa, e.kappa_tilde) for e in sd.entries])


def potential_json(V: Potential) -> dict:
    return {"version": SCHEMA_VERSION, "kind": "potential", "grid": [_finite(v) for v in V.grid],
            "p": [_finite(v) for v in V.p], "q": [_finite(v) for v in V.q]}


def potential_csv(V: Potential) -> str:
    return csv_text(["x", "p", "q"], zip(V.grid, V.p, V.q))


def _load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as err:
        raise SchemaError(f"cannot read JSON from {path}: {err}") from None
    if not isinstance(doc, dict):
        raise SchemaError("top-level JSON value must be an object")
    if doc.get("version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported or missing schema version {doc.get('version')!r}")
    return doc


def _number_list(doc, key, length=None) -> np.ndarray:
    v = doc.get(key)
    if not isinstance(v, list) or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in v):
        raise SchemaError(f"field {key!r} must be a list of numbers")
    arr = np.array(v, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise SchemaError(f"field {key!r} has non-finite entries")
    if length is not None and arr.size != length:
        raise SchemaError(f"field {key!r} has {arr.size} entries, expected {length}")
    return arr


def load_potential(path) -> Potential:
    """Read {version, grid, p, q} and resample onto the default mesh."""
    doc = _load_json(path)
    x = _number_list(doc, "grid")
    p = _number_list(doc, "p", x.size)
    q = _number_list(doc, "q", x.size)
    try:
        return Potential.from_samples(x, p, q)
    except InvalidParamsError as err:
        raise SchemaError(str(err)) from None


def load_target(path, params: OperatorParams) -> SpectralTarget:
    """Read a spectrum document, or a target document {version, N, xi, eta}."""
    doc = _load_json(path)
    if "a" in doc or "beta" in doc:
        try:
            stored = OperatorParams(doc.get("a", params.a), doc.get("beta", params.beta))
        except (InvalidParamsError, TypeError, ValueError) as err:
            raise SchemaError(f"bad operator parameters in target: {err}") from None
        if stored != params:
            raise InvalidParamsError(
                f"target was made for a={stored.a}, beta={stored.beta!r}; got a={params.a}, beta={params.beta!r}"
            )
    N = doc.get("N")
    if not isinstance(N, int) or isinstance(N, bool) or N < 1:
        raise SchemaError("field 'N' must be a positive integer")
    if "entries" in doc:
        entries = doc["entries"]
        if not isinstance(entries, list) or len(entries) != 2 * N + 1:
            raise SchemaError(f"'entries' must list {2 * N + 1} modes")
        try:
            rows = sorted(entries, key=lambda e: e["n"])
            ns = [r["n"] for r in rows]
            xi = [float(r["lambda_tilde"]) for r in rows]
            eta = [float(r["kappa_tilde"]) for r in rows]
        except (KeyError, TypeError, ValueError) as err:
            raise SchemaError(f"malformed entry: {err}") from None
        if ns != list(range(-N, N + 1)):
            raise SchemaError("entries must cover n = -N..N exactly once")
    else:
        xi = _number_list(doc, "xi", 2 * N + 1)
        eta = _number_list(doc, "eta", 2 * N + 1)
    try:
        return SpectralTarget(params, N, xi, eta)
    except InvalidParamsError as err:
        raise SchemaError(str(err)) from None


def resolve_potential(job: JobSpec) -> tuple[Potential, dict]:
    if job.potential in potentials.BUILTINS:
        V = potentials.builtin(job.potential, seed=job.seed, a=job.a)
        return V, {"source": job.potential, "seed": job.seed, "digest": V.digest()}
    V = load_potential(job.potential)
    return V, {"source": "file", "path": Path(job.potential).name, "digest": V.digest()}


def _emit(job: JobSpec, doc: dict, csv_body: str | None = None, stdout=None):
    text = dumps(doc)
    if job.out is None:
        (stdout or sys.stdout).write(text)
        return
    atomic_write(job.out, text)
    if csv_body is not None:
        atomic_write(job.out.with_suffix(".csv"), csv_body)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def run_spectrum(job: JobSpec, stdout=None) -> int:
    V, source = resolve_potential(job)
    sd = spectrum(job.params, V, job.N)
    _emit(job, spectral_json(sd, source), spectral_csv(sd), stdout)
    return 0


def run_forward(job: JobSpec, stdout=None) -> int:
    V, source = resolve_potential(job)
    target = SpectralTarget.from_spectral(spectrum(job.params, V, job.N))
    doc = {"version": SCHEMA_VERSION, "kind": "target", "a": job.a, "beta": _finite(job.beta), "N": job.N,
           "potential": source, "xi": [_finite(v) for v in target.xi], "eta": [_finite(v) for v in target.eta]}
    rows = zip(target.indices.tolist(), target.xi, target.eta)
    _emit(job, doc, csv_text(["n", "xi", "eta"], rows), stdout)
    return 0


def run_invert(job: JobSpec, stdout=None) -> int:
    opts = job.options
    if not opts.get("target"):
        raise InvalidParamsError("invert needs --target")
    target = load_target(opts["target"], job.params)
    cfg = NewtonConfig(N=target.N, max_iters=opts.get("max_iters", 12), tol=opts.get("tol", 1e-10))
    V0 = Potential.zero()
    if job.potential != "zero":
        V0, _ = resolve_potential(job)
    V, rep = newton_invert(job.params, target, V0, cfg)
    report = {"version": SCHEMA_VERSION, "kind": "newton-report", "a": job.a, "beta": _finite(job.beta),
              "N": target.N, "converged": rep.converged, "iterations": rep.iterations,
              "residuals": [_finite(r) for r in rep.residuals], "dampings": [_finite(t) for t in rep.dampings]}
    error_line = None
    if opts.get("truth"):
        Vt = load_potential(opts["truth"]) if Path(opts["truth"]).is_file() else \
            potentials.builtin(opts["truth"], seed=job.seed, a=job.a)
        err = (FunctionPair(V.p, V.q, V.mesh) - FunctionPair(Vt.p, Vt.q, Vt.mesh)).norm()
        report["reconstruction_error"] = _finite(err)
        error_line = f"reconstruction_error {err!r}\n"
    out = stdout or sys.stdout
    if job.out is None:
        out.write(dumps({"potential": potential_json(V), "report": report}))
    else:
        atomic_write(job.out, dumps(potential_json(V)))
        atomic_write(job.out.with_suffix(".csv"), potential_csv(V))
        atomic_write(job.out.with_suffix(".report.json"), dumps(report))
        if error_line:
            out.write(error_line)
    return 0 if rep.converged else 1


def run_check(job: JobSpec, stdout=None) -> int:
    suite = job.options.get("suite")
    if suite not in SUITES:
        raise InvalidParamsError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    V, source = resolve_potential(job)
    rows = run_suite(suite, job.params, V, seed=job.seed)
    doc = {"version": SCHEMA_VERSION, "kind": "check", "suite": suite, "a": job.a, "beta": _finite(job.beta),
           "potential": source, "passed": all(r.passed for r in rows),
           "rows": [{"name": r.name, "deviation": _finite(r.deviation), "tol": r.tol, "passed": r.passed}
                    for r in rows]}
    out = stdout or sys.stdout
    if job.out is not None:
        atomic_write(job.out, dumps(doc))
    width = max(len(r.name) for r in rows)
    for r in rows:
        out.write(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.deviation:.3e}  (tol {r.tol:g})\n")
    return 0 if doc["passed"] else 1


def run_isoflow(job: JobSpec, stdout=None) -> int:
    V, source = resolve_potential(job)
    modes = job.options.get("modes", 6)
    if not 0 < modes <= job.N:
        raise InvalidParamsError("--modes must lie in [1, N]")
    rng = np.random.default_rng(job.seed)
    coeffs = {n: float(rng.standard_normal()) for n in range(-modes, modes + 1)}
    eps, dev = isospectral_flow(job.params, V, job.N, coeffs, job.options.get("eps", (1e-2, 1e-3)))
    slope = loglog_slope(eps, dev)
    doc = {"version": SCHEMA_VERSION, "kind": "isoflow", "a": job.a, "beta": _finite(job.beta), "N": job.N,
           "potential": source, "eps": [_finite(e) for e in eps], "max_eigenvalue_change": [_finite(d) for d in dev],
           "slope": _finite(slope), "passed": bool(1.8 <= slope <= 2.2)}
    _emit(job, doc, csv_text(["eps", "max_eigenvalue_change"], zip(eps, dev)), stdout)
    return 0 if doc["passed"] else 1


def run_diagnose(job: JobSpec, stdout=None) -> int:
    V, source = resolve_potential(job)
    diag = residual_diagnostics(job.params, V, job.N)
    doc = {"version": SCHEMA_VERSION, "kind": "diagnostics", "a": job.a, "beta": _finite(job.beta), "N": job.N,
           "potential": source, "n": diag.indices.tolist(),
           "r_norm": [_finite(v) for v in diag.r_norms], "s_norm": [_finite(v) for v in diag.s_norms]}
    _emit(job, doc, csv_text(["n", "r_norm", "s_norm"], zip(diag.indices.tolist(), diag.r_norms, diag.s_norms)),
          stdout)
    return 0


RUNNERS = {"spectrum": run_spectrum, "forward": run_forward, "invert": run_invert,
           "check": run_check, "isoflow": run_isoflow, "diagnose": run_diagnose}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidParamsError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="akns-inverse", description="Direct and inverse spectral problems for the singular AKNS operator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--a", type=int, default=0, help="singularity index a >= 0")
        p.add_argument("--beta", type=float, default=0.0, help="boundary angle at x = 1")
        p.add_argument("--potential", default="zero",
                       help=f"builtin ({', '.join(potentials.BUILTINS)}) or a potential JSON file")
        p.add_argument("--seed", type=int, default=0, help="64-bit seed for random builtins and probes")
        p.add_argument("--N", type=int, default=None, help="truncation |n| <= N")
        p.add_argument("--out", type=Path, default=None, help="output JSON path (CSV written alongside)")
        if name == "invert":
            p.add_argument("--target", required=True, help="spectrum or target JSON to invert")
            p.add_argument("--truth", default=None, help="ground-truth potential (file or builtin) for an error line")
            p.add_argument("--max-iters", type=int, default=12)
            p.add_argument("--tol", type=float, default=1e-10)
        if name == "check":
            p.add_argument("--suite", required=True, choices=sorted(SUITES))
        if name == "isoflow":
            p.add_argument("--modes", type=int, default=6)
    return parser


def job_from_args(ns: argparse.Namespace) -> JobSpec:
    options = {k: v for k, v in vars(ns).items()
               if k in ("target", "truth", "max_iters", "tol", "suite", "modes") and v is not None}
    N = ns.N
    if N is None:
        N = 24 if ns.command == "invert" else max(8, ns.a + 2)
    return JobSpec(ns.command, ns.a, ns.beta, ns.potential, ns.seed, N, ns.out, options)


def main(argv=None, stdout=None) -> int:
    out = stdout or sys.stdout
    try:
        job = job_from_args(build_parser().parse_args(argv))
        return RUNNERS[job.command](job, out)
    except AKNSError as err:
        out.write(dumps({"error": {"kind": err.kind, "message": str(err)}}))
        return 2 if isinstance(err, (InvalidParamsError, SchemaError)) else 1


def main_exit():
    sys.exit(main())
