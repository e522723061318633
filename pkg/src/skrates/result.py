from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any


@dataclass
class BoundResult:
    """A rate bound in bits per source symbol and where it was attained.

    ``aux`` maps parameter names to the maximizing values. ``slack`` is the
    binding constraint margin (``inf`` when the bound is unconstrained).
    ``certified`` is False for best-found values from non-convex searches.
    """

    rk: float
    aux: dict[str, Any] = field(default_factory=dict)
    feasible: bool = True
    slack: float = math.inf
    certified: bool = True
    extra: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def infeasible(cls, **extra) -> "BoundResult":
        return cls(rk=0.0, feasible=False, slack=-math.inf, extra=extra)

    def to_dict(self) -> dict[str, Any]:
        return {
            "rk": self.rk,
            "aux": dict(self.aux),
            "feasible": self.feasible,
            "slack": self.slack,
            "certified": self.certified,
            **({"extra": dict(self.extra)} if self.extra else {}),
        }
