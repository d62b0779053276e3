"""Dynamical discrete web simulator and exceptional-time analysis toolkit."""

from .errors import DiagnosticError, DyDWError, ValidationError
from .events import EventSpec, RectangleStack, dependence_region, evaluate_event, sigma_gamma, skew_stack
from .tau import TauIntervalSet, switch_times, tau_interval_set
from .web import SiteAddress, WebPair, arrow_at, arrow_stream, trace_pair_noncoalescing, trace_path

__all__ = [
    "DiagnosticError",
    "DyDWError",
    "EventSpec",
    "RectangleStack",
    "SiteAddress",
    "TauIntervalSet",
    "ValidationError",
    "WebPair",
    "arrow_at",
    "arrow_stream",
    "dependence_region",
    "evaluate_event",
    "sigma_gamma",
    "skew_stack",
    "switch_times",
    "tau_interval_set",
    "trace_pair_noncoalescing",
    "trace_path",
]

__version__ = "0.1.0"
