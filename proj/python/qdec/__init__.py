"""Decoupling bounds, Renyi entropies and protocol runs (C++ core)."""

from ._qdec import (
    ConfigError,
    __version__,
    builtin_fixtures,
    d_alpha,
    fidelity,
    fuchs_vdg,
    h_cond,
    protocol,
    renyi_entropy,
    run_config,
    theta,
    trace_norm,
    xi,
)

__all__ = [
    "ConfigError",
    "builtin_fixtures",
    "d_alpha",
    "fidelity",
    "fuchs_vdg",
    "h_cond",
    "protocol",
    "renyi_entropy",
    "run_config",
    "theta",
    "trace_norm",
    "xi",
]
