"""Derivative-free maximization over small boxes.

``maximize_box`` does a dense grid scan followed by coordinate-wise
golden-section refinement of the incumbent. ``quad_roots`` gives the
interval where a downward parabola is non-negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = ["BoxSpec", "OptimResult", "maximize_box", "golden_section_max", "quad_roots"]

DEFAULT_GRID = {1: 513, 2: 129, 3: 65, 4: 33}
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BoxSpec:
    dims: tuple[tuple[float, float], ...]
    grid_points_per_dim: Optional[int] = None
    refine_rounds: int = 3

    def __post_init__(self):
        dims = tuple((float(lo), float(hi)) for lo, hi in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise ValueError("box must have at least one dimension")
        if len(dims) > 4:
            raise ValueError("at most 4 dimensions are supported")
        for lo, hi in dims:
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ValueError(f"invalid interval ({lo}, {hi})")
        if self.grid_points_per_dim is None:
            object.__setattr__(self, "grid_points_per_dim", DEFAULT_GRID[len(dims)])
        if self.grid_points_per_dim < 2:
            raise ValueError("grid_points_per_dim must be >= 2")
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be >= 0")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, self.grid_points_per_dim) for lo, hi in self.dims]


@dataclass
class OptimResult:
    point: Optional[np.ndarray]
    value: float
    feasible: bool
    grid_value: float = -math.inf
    evaluations: int = 0
    history: list = field(default_factory=list, repr=False)

    @classmethod
    def infeasible(cls) -> "OptimResult":
        return cls(point=None, value=-math.inf, feasible=False)


def _as_vectorized(fn: Callable, vectorized: bool) -> Callable[[np.ndarray], np.ndarray]:
    if vectorized:
        return lambda pts: np.asarray(fn(pts), dtype=float).reshape(len(pts))
    return lambda pts: np.array([fn(p) for p in pts], dtype=float)


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> tuple[float, float]:
    """Golden-section search for a maximum of ``f`` on [lo, hi]."""
    if hi - lo <= tol:
        x = 0.5 * (lo + hi)
        return x, f(x)
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    if fc >= fd:
        return c, fc
    return d, fd


def maximize_box(
    objective: Callable,
    box: BoxSpec,
    feasible: Optional[Callable] = None,
    vectorized: bool = False,
    extra_points: Sequence[Sequence[float]] = (),
) -> OptimResult:
    """Maximize ``objective`` over the feasible part of ``box``.

    With ``vectorized=True`` both callables receive an ``(npoints, ndim)``
    array and return one value per row; otherwise they get one point at a
    time. Grid ties resolve to the lexicographically smallest point.
    ``extra_points`` are candidate points scanned alongside the grid.
    """
    f = _as_vectorized(objective, vectorized)
    if feasible is None:
        g = lambda pts: np.ones(len(pts), dtype=bool)  # noqa: E731
    elif vectorized:
        g = lambda pts: np.asarray(feasible(pts), dtype=bool).reshape(len(pts))  # noqa: E731
    else:
        g = lambda pts: np.array([bool(feasible(p)) for p in pts], dtype=bool)  # noqa: E731

    axes = box.axes()
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    if len(extra_points):
        extra = np.atleast_2d(np.asarray(extra_points, dtype=float))
        lows = np.array([lo for lo, _ in box.dims])
        highs = np.array([hi for _, hi in box.dims])
        extra = extra[np.all((extra >= lows) & (extra <= highs), axis=1)]
        pts = np.concatenate([pts, extra])
    mask = g(pts)
    evaluations = len(pts)
    if not mask.any():
        return OptimResult.infeasible()
    vals = np.full(len(pts), -np.inf)
    vals[mask] = f(pts[mask])
    if not np.all(np.isfinite(vals[mask])):
        bad = pts[mask][~np.isfinite(vals[mask])][0]
        raise ValueError(f"objective is not finite at feasible point {bad.tolist()}")
    # argmax over the grid returns the first maximum in C order, which is the
    # lexicographically smallest point; extra points only win on strict gain
    ngrid = box.grid_points_per_dim ** box.ndim
    best = int(np.argmax(vals[:ngrid])) if mask[:ngrid].any() else ngrid + int(np.argmax(vals[ngrid:]))
    if len(pts) > ngrid and vals[ngrid:].max() > vals[best]:
        best = ngrid + int(np.argmax(vals[ngrid:]))
    x = pts[best].copy()
    fx = float(vals[best])
    grid_value = fx
    history = [fx]

    cell = np.array([(hi - lo) / (box.grid_points_per_dim - 1) for lo, hi in box.dims])

    def line(d: int, base: np.ndarray) -> Callable[[float], float]:
        def h(t: float) -> float:
            nonlocal evaluations
            p = base.copy()
            p[d] = t
            p = p[None, :]
            evaluations += 1
            if not g(p)[0]:
                return -math.inf
            v = float(f(p)[0])
            if not math.isfinite(v):
                raise ValueError(f"objective is not finite at feasible point {p[0].tolist()}")
            return v

        return h

    for _ in range(box.refine_rounds):
        for d in range(box.ndim):
            lo_d, hi_d = box.dims[d]
            if cell[d] == 0.0:
                continue
            lo = max(lo_d, x[d] - cell[d])
            hi = min(hi_d, x[d] + cell[d])
            t, ft = golden_section_max(line(d, x), lo, hi, tol=1e-12 * max(1.0, hi - lo))
            if ft > fx:
                x[d] = t
                fx = ft
        history.append(fx)

    return OptimResult(point=x, value=fx, feasible=True, grid_value=grid_value, evaluations=evaluations, history=history)


def quad_roots(a: float, b: float, c: float) -> Optional[tuple[float, float]]:
    """Interval where a*g**2 + b*g + c >= 0 for a < 0, or None if empty."""
    if not a < 0:
        raise ValueError(f"leading coefficient must be negative, got {a}")
    disc = b * b - 4.0 * a * c
    if disc < 0:
        return None
    sq = math.sqrt(disc)
    # numerically stable pair of roots
    qq = -0.5 * (b + math.copysign(sq, b)) if b != 0 else -0.5 * sq
    if qq == 0.0:
        return (0.0, 0.0)
    r1 = qq / a
    r2 = c / qq
    return (min(r1, r2), max(r1, r2))
