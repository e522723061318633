"""Closed-form bounds for the wiretap channel with BEC/BSC sources.

The main channel is noiseless to Bob and BSC(zeta) to Eve; Bob's source is
a BEC(beta) view of a uniform bit A and Eve's is a BSC(epsilon) view.
Everything is evaluated at one channel use per source symbol.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .info import _h2, _star, h2
from .models import BecBscModel
from .optim import BoxSpec, maximize_box
from .result import BoundResult

__all__ = [
    "BecBscAux",
    "SweepTable",
    "outer_objective",
    "inner_separate_objective",
    "inner_separate_constraint",
    "inner_separate_1layer_objective",
    "inner_joint_objective",
    "outer_bound",
    "inner_separate",
    "inner_separate_1layer",
    "inner_joint",
    "sweep",
    "SWEEP_COLUMNS",
]

SWEEP_COLUMNS = ("beta", "outer", "i_sep", "i_sep_1l", "i_jscc")
HALF = ((0.0, 0.5),)


@dataclass(frozen=True)
class BecBscAux:
    u: float = 0.5
    v: float = 0.5
    q: float = 0.5

    def __post_init__(self):
        for name in ("u", "v", "q"):
            val = getattr(self, name)
            if not 0.0 <= val <= 0.5:
                raise ValueError(f"{name} must lie in [0, 1/2], got {val}")


def outer_objective(model: BecBscModel, v):
    b, e, z = model.beta, model.epsilon, model.zeta
    return (1.0 - b) * _h2(v) + _h2(e) - _h2(_star(v, e)) + _h2(z)


def inner_separate_objective(model: BecBscModel, u, v, q):
    b, e, z = model.beta, model.epsilon, model.zeta
    vu = _star(v, u)
    return (
        (1.0 - b) * (_h2(vu) - _h2(v))
        + _h2(_star(v, e))
        - _h2(_star(vu, e))
        + _h2(z)
        + _h2(q)
        - _h2(_star(z, q))
    )


def inner_separate_constraint(model: BecBscModel, u, v, q):
    """Margin 1 - h2(q) - beta*(1 - h2(v*u)); feasible when >= 0."""
    return 1.0 - _h2(q) - model.beta * (1.0 - _h2(_star(v, u)))


def inner_separate_1layer_objective(model: BecBscModel, v):
    b, e, z = model.beta, model.epsilon, model.zeta
    return _h2(_star(v, e)) - (1.0 - b) * _h2(v) - b + _h2(z)


def inner_joint_objective(model: BecBscModel, v):
    b, e, z = model.beta, model.epsilon, model.zeta
    ez = _star(e, z)
    return (1.0 - b) * _h2(v) + _h2(ez) - _h2(_star(v, ez))


def _clip_half(x):
    return np.clip(x, 0.0, 0.5)


def _max_1d(fn, extra=()) -> tuple[float, float]:
    res = maximize_box(lambda pts: fn(_clip_half(pts[:, 0])), BoxSpec(HALF), vectorized=True, extra_points=extra)
    return float(res.point[0]), float(res.value)


def outer_bound(model: BecBscModel) -> BoundResult:
    v, val = _max_1d(lambda v: outer_objective(model, v))
    return BoundResult(rk=max(val, 0.0), aux={"v": v}, slack=1.0 - model.beta)


def inner_separate_1layer(model: BecBscModel) -> BoundResult:
    v, val = _max_1d(lambda v: inner_separate_1layer_objective(model, v))
    return BoundResult(rk=max(val, 0.0), aux={"u": 0.5, "v": v, "q": 0.5}, slack=1.0)


def inner_separate(model: BecBscModel) -> BoundResult:
    """Two-layer separate scheme maximized over (u, v, q) in [0, 1/2]^3.

    The one-layer optimum (u = q = 1/2) is scanned as an extra candidate so
    the two-layer value never falls below it.
    """
    one = inner_separate_1layer(model)

    def obj(pts):
        p = _clip_half(pts)
        return inner_separate_objective(model, p[:, 0], p[:, 1], p[:, 2])

    def feas(pts):
        p = _clip_half(pts)
        return inner_separate_constraint(model, p[:, 0], p[:, 1], p[:, 2]) >= 0.0

    box = BoxSpec(HALF * 3)
    res = maximize_box(obj, box, feasible=feas, vectorized=True, extra_points=[(0.5, one.aux["v"], 0.5)])
    u, v, q = (float(x) for x in res.point)
    slack = float(inner_separate_constraint(model, u, v, q))
    # margin of the second decoding condition, which this input family satisfies
    slack_v = 1.0 - model.beta * (1.0 - h2(v))
    return BoundResult(
        rk=max(float(res.value), 0.0),
        aux={"u": u, "v": v, "q": q},
        slack=slack,
        extra={"slack_v": slack_v},
    )


def inner_joint(model: BecBscModel) -> BoundResult:
    v, val = _max_1d(lambda v: inner_joint_objective(model, v))
    second = h2(model.zeta)
    if val >= second:
        return BoundResult(rk=max(val, 0.0), aux={"v": v, "branch": "source"})
    return BoundResult(rk=second, aux={"v": 0.5, "branch": "channel"})


@dataclass
class SweepTable:
    rows: list[tuple[float, float, float, float, float]]

    columns = SWEEP_COLUMNS

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows])

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([f"{x:.6f}" for x in row])
        return buf.getvalue() if fh is None else ""

    def to_json(self) -> str:
        return json.dumps([dict(zip(self.columns, r)) for r in self.rows], indent=2)


def sweep(zeta: float, epsilon: float, beta_grid: Iterable[float]) -> SweepTable:
    betas: Sequence[float] = [float(b) for b in beta_grid]
    if not betas:
        raise ValueError("beta grid is empty")
    if any(b2 < b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError("beta grid must be sorted ascending")
    rows = []
    for b in betas:
        m = BecBscModel(zeta=zeta, beta=b, epsilon=epsilon)
        rows.append((b, outer_bound(m).rk, inner_separate(m).rk, inner_separate_1layer(m).rk, inner_joint(m).rk))
    return SweepTable(rows)
