"""Fredholm determinant of the XXX emptiness-formation kernel on a circular arc.

Modules, bottom up: ``contour`` (arc and half-line quadrature), ``branches``
(functions cut along the arc), ``opkernels`` (operators on L^2[0, inf)),
``fredholm`` (Nyström log-determinant), ``asymptotics`` (steepest-descent
chain) and ``harness`` (sweeps, verification, I/O).
"""
from .contour import ModelParams, build_arc, build_halfline
from .errors import (
    DivergentIntegralError,
    DomainError,
    EFPError,
    KernelRangeError,
    SingularMatrixError,
    SingularPointError,
    UntrustedResultError,
)
from .fredholm import LogDet, fredholm_logdet
from .harness import SweepRecord, VerifyReport, psi_from_field, run_sweep, run_verify

__version__ = "0.1.0"
