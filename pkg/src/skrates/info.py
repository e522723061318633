"""Scalar and finite-distribution information kernels.

All logarithms are base 2. Scalar helpers (``h2``, ``star``, ``gauss_cap``)
accept floats or numpy arrays so the bound evaluators can scan whole grids
in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import entr

__all__ = [
    "FinitePMF",
    "h2",
    "h2_inv",
    "star",
    "gauss_cap",
    "entropy",
    "cond_mutual_info",
    "mutual_info",
]

NORMALIZATION_TOL = 1e-12
LN2 = float(np.log(2.0))


def _check_unit(x, name: str) -> None:
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {x!r}")


def _h2(p):
    # unchecked kernel for hot loops; callers guarantee p in [0, 1]
    p = np.asarray(p, dtype=float)
    out = (entr(p) + entr(1.0 - p)) / LN2
    if out.ndim == 0:
        return float(out)
    return out


def _star(a, b):
    return a + b - 2.0 * a * b


def h2(p):
    """Binary entropy in bits, with 0*log(0) taken as 0."""
    _check_unit(p, "p")
    return _h2(p)


def h2_inv(y: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Inverse of ``h2`` restricted to [0, 1/2], by bisection."""
    _check_unit(y, "y")
    y = float(y)
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if h2(mid) < y:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def star(a, b):
    """Binary convolution a + b - 2ab (crossover of two cascaded BSCs)."""
    _check_unit(a, "a")
    _check_unit(b, "b")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = a + b - 2.0 * a * b
    if out.ndim == 0:
        return float(out)
    return out


def gauss_cap(snr):
    """Gaussian channel capacity 0.5*log2(1 + snr)."""
    arr = np.asarray(snr, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0):
        raise ValueError(f"snr must be non-negative, got {snr!r}")
    out = 0.5 * np.log2(1.0 + arr)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class FinitePMF:
    """Dense probability table over a product of named finite alphabets.

    ``axes`` holds the axis names in table order; the alphabet sizes are
    read off ``table.shape``. Normalization is checked, never repaired.
    """

    axes: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self):
        axes = tuple(self.axes)
        table = np.asarray(self.table, dtype=float)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "table", table)
        if len(set(axes)) != len(axes):
            raise ValueError(f"axis names must be unique, got {axes}")
        if table.ndim != len(axes):
            raise ValueError(f"table has {table.ndim} dims but {len(axes)} axis names")
        if np.any(~np.isfinite(table)) or np.any(table < 0.0):
            raise ValueError("table entries must be finite and non-negative")
        total = table.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"table sums to {total!r}, expected 1")

    @property
    def sizes(self) -> dict[str, int]:
        return dict(zip(self.axes, self.table.shape))

    def index(self, name: str) -> int:
        try:
            return self.axes.index(name)
        except ValueError:
            raise KeyError(f"unknown axis {name!r}; have {self.axes}") from None

    def marginal(self, names: Sequence[str]) -> np.ndarray:
        """Marginal table over ``names``, axes in the order given."""
        idx = [self.index(n) for n in names]
        drop = tuple(i for i in range(len(self.axes)) if i not in idx)
        m = self.table.sum(axis=drop) if drop else self.table
        # remaining axes are in table order; permute into requested order
        kept = sorted(idx)
        return np.transpose(m, [kept.index(i) for i in idx])

    def entropy(self, names: Sequence[str]) -> float:
        if not names:
            return 0.0
        return entropy(self.marginal(names))


def entropy(table) -> float:
    """Shannon entropy in bits of a (possibly multi-dimensional) table."""
    p = np.asarray(table, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def cond_mutual_info(
    pmf: FinitePMF,
    x_axes: Sequence[str],
    y_axes: Sequence[str],
    z_axes: Sequence[str] = (),
) -> float:
    """I(X;Y|Z) in bits, where each group is a list of axis names.

    Computed as H(XZ) + H(YZ) - H(Z) - H(XYZ). Empty ``x_axes`` or
    ``y_axes`` give exactly 0.
    """
    x_axes, y_axes, z_axes = list(x_axes), list(y_axes), list(z_axes)
    for name in x_axes + y_axes + z_axes:
        pmf.index(name)
    groups = [set(x_axes), set(y_axes), set(z_axes)]
    if (groups[0] & groups[1]) or (groups[0] & groups[2]) or (groups[1] & groups[2]):
        raise ValueError("axis groups must be disjoint")
    if len(x_axes) != len(groups[0]) or len(y_axes) != len(groups[1]) or len(z_axes) != len(groups[2]):
        raise ValueError("axis names repeated within a group")
    if not x_axes or not y_axes:
        return 0.0
    return (
        pmf.entropy(x_axes + z_axes)
        + pmf.entropy(y_axes + z_axes)
        - pmf.entropy(z_axes)
        - pmf.entropy(x_axes + y_axes + z_axes)
    )


def mutual_info(pmf: FinitePMF, x_axes: Sequence[str], y_axes: Sequence[str]) -> float:
    return cond_mutual_info(pmf, x_axes, y_axes, ())

