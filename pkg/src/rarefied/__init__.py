"""Rarefied elliptic hypergeometric functions: gamma functions, the beta integral,
Bailey transforms, the W(E7) transformation, lattice weights and the Yang-Baxter equation.

Top-level names are loaded lazily so that the command line can set thread
counts before numpy is imported.
"""
import importlib

__version__ = "0.1.0"

_EXPORTS = {
    "Nome": "core", "TruncationPolicy": "core", "ell_gamma": "core", "ell_gamma2": "core",
    "q_pochhammer": "core", "theta": "core", "theta1": "core",
    "BaseParams": "gamma", "gamma_periodic": "gamma", "gamma_r": "gamma", "gamma_r_norm": "gamma",
    "Residual": "residual",
    "RarefiedError": "errors", "DomainError": "errors", "TruncationError": "errors",
    "PoleProximityError": "errors", "BalancingError": "errors", "ParityError": "errors",
    "ContourPinchError": "errors", "ConvergenceError": "errors", "PeriodicityError": "errors",
    "UnsupportedNormalizationError": "errors", "ResourceLimitError": "errors",
}

__all__ = sorted(_EXPORTS)


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(importlib.import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
