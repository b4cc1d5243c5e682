"""Simulation and analysis suite for direct aggregation.

Individuals aggregate by lowering the amplitude of their random motion in
response to the density they perceive nearby; no attraction forces are
involved.  The package provides

* first- and second-order interacting particle simulators,
* a semi-implicit solver for the nonlocal mean-field diffusion equation,
* an operator-splitting solver for the kinetic Fokker-Planck equation,
* linear stability analysis of spatially uniform states,
* a command line front end (``aggrsim``) with CSV/PGM output.

The neighbor-search kernels run on a compiled extension when it is
available and fall back to a pure numpy implementation otherwise; see
:mod:`aggrsim.neighbors`.

Set ``AGGRSIM_THREADS`` to cap internal parallelism (it seeds the usual
BLAS/OpenMP thread-count variables before numpy is first imported, so it
must be set before importing this package).
"""

import os as _os

_threads = _os.environ.get("AGGRSIM_THREADS")
if _threads:
    for _var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        _os.environ.setdefault(_var, _threads)
del _os, _threads

from .errors import (
    AggrsimError,
    CflError,
    ConfigError,
    DampingError,
    NumericalError,
    PositivityError,
    SolverError,
)
from .geometry import TorusGeometry, periodic_displacement, wrap_positions
from .kernels import KernelSpec, eval_kernel, kernel_fourier
from .responses import Response, ResponseFunctions

__all__ = [
    "AggrsimError",
    "CflError",
    "ConfigError",
    "DampingError",
    "NumericalError",
    "PositivityError",
    "SolverError",
    "TorusGeometry",
    "periodic_displacement",
    "wrap_positions",
    "KernelSpec",
    "eval_kernel",
    "kernel_fourier",
    "Response",
    "ResponseFunctions",
]

__version__ = "0.1.0"
