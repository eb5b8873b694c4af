"""Numerical laboratory for linear transport equations whose velocity field
has sub-exponentially integrable divergence.

The package has two halves.  The well-posedness half (`young`, `solver`,
`stability`) computes Orlicz/Zygmund norms by bisection on the Luxemburg
modular, runs a mollification-based semi-Lagrangian transport solver, and
verifies the a-priori and triple-log Gronwall bounds quantitatively.  The
non-uniqueness half (`cantor`, `field`, `flows`) builds the explicit
Cantor-set velocity field, verifies its divergence integrability entirely in
log domain, and exhibits one initial datum with several verified distinct
weak solutions.
"""

__version__ = "0.1.0"

from .grids import SampledFunction
from .young import (
    Zygmund,
    SubExp,
    IteratedLog,
    OrliczClassError,
    young_eval,
    young_log_eval,
    luxemburg_norm,
    holder_pairing,
    zygmund_interpolation_bound,
)

__all__ = [
    "SampledFunction",
    "Zygmund",
    "SubExp",
    "IteratedLog",
    "OrliczClassError",
    "young_eval",
    "young_log_eval",
    "luxemburg_norm",
    "holder_pairing",
    "zygmund_interpolation_bound",
    "__version__",
]
