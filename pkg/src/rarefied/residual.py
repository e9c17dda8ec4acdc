"""Verified-identity records shared by all verification layers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


def rel_error(lhs, rhs) -> float:
    lhs, rhs = complex(lhs), complex(rhs)
    if rhs == 0:
        return abs(lhs)
    return abs(lhs / rhs - 1)


@dataclass
class Residual:
    """LHS/RHS pair of one identity check with its quadrature provenance."""

    name: str
    lhs: Any
    rhs: Any
    residual: float
    n_nodes: int | None = None
    history: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    tolerance: float | None = None

    @property
    def passed(self) -> bool:
        return bool(self.tolerance is None or self.residual < self.tolerance)

    @classmethod
    def scalar(cls, name, lhs, rhs, **kw) -> "Residual":
        return cls(name, complex(lhs), complex(rhs), rel_error(lhs, rhs), **kw)
