"""Direct and local inverse spectral problems for the singular AKNS operator on [0, 1].

The operator acts on Y = (Y1, Y2) by

    Y' = ([[a/x - p, -q], [-q, p - a/x]] + lam [[0, 1], [-1, 0]]) Y,

with Y2(0) = 0 and Y(1) . (sin beta, cos beta) = 0.
"""
import os as _os

if _os.environ.get("AKNS_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _os.environ["AKNS_THREADS"])

from .akns_solutions import OperatorParams, Potential  # noqa: E402
from .errors import AKNSError  # noqa: E402
from .spectral_forward import SpectralData, spectrum  # noqa: E402
from .spectral_map_inverse import NewtonConfig, SpectralTarget, forward_map, newton_invert  # noqa: E402
from .transform_operators import FunctionPair  # noqa: E402

__all__ = [
    "AKNSError",
    "FunctionPair",
    "NewtonConfig",
    "OperatorParams",
    "Potential",
    "SpectralData",
    "SpectralTarget",
    "forward_map",
    "newton_invert",
    "spectrum",
]
