"""Concrete source/channel models and the BEC/BSC source-regime classifier."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .info import FinitePMF, h2

__all__ = [
    "BecBscModel",
    "BinaryStateModel",
    "GaussianStateModel",
    "SourceRegime",
    "classify_source_regime",
    "regime_boundaries",
    "becbsc_joint_pmf",
    "binary_state_source_pmf",
    "ERASURE",
]

# index of the erasure symbol on a ternary side-information axis: (0, e, 1)
ERASURE = 1


def _prob(name: str, value: float, hi: float = 1.0) -> float:
    value = float(value)
    if not (0.0 <= value <= hi):
        raise ValueError(f"{name} must lie in [0, {hi:g}], got {value}")
    return value


@dataclass(frozen=True)
class BecBscModel:
    """Noiseless main channel, BSC(zeta) to Eve; BEC(beta)/BSC(epsilon) sources."""

    zeta: float
    beta: float
    epsilon: float

    def __post_init__(self):
        _prob("zeta", self.zeta, 0.5)
        _prob("beta", self.beta)
        _prob("epsilon", self.epsilon, 0.5)


@dataclass(frozen=True)
class BinaryStateModel:
    """Y = X xor A, Z = Y xor W with A~B(a), W~B(zeta); BEC side information."""

    a: float
    zeta: float
    beta: float
    epsilon: float

    def __post_init__(self):
        _prob("a", self.a)
        _prob("zeta", self.zeta, 0.5)
        _prob("beta", self.beta)
        _prob("epsilon", self.epsilon)


@dataclass(frozen=True)
class GaussianStateModel:
    """Y = X + S + W1, Z = X + S + W2 with E[X^2] <= P, S~N(0,Q), Wi~N(0,Ni)."""

    P: float
    Q: float
    N1: float
    N2: float

    def __post_init__(self):
        for name in ("P", "Q"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be non-negative, got {v}")
        for name in ("N1", "N2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")


class SourceRegime(enum.IntEnum):
    DEGRADED = 0
    LESS_NOISY = 1
    MORE_CAPABLE = 2
    UNORDERED = 3


def regime_boundaries(epsilon: float) -> tuple[float, float, float]:
    """Erasure thresholds (2e, 4e(1-e), h2(e)) separating the source regimes."""
    _prob("epsilon", epsilon, 0.5)
    return 2.0 * epsilon, 4.0 * epsilon * (1.0 - epsilon), h2(epsilon)


def classify_source_regime(beta: float, epsilon: float) -> SourceRegime:
    """Order between Bob's BEC(beta) and Eve's BSC(epsilon) views of A.

    The intervals are half-open exactly as stated for this source pair, so
    beta = epsilon = 0 falls through to UNORDERED.
    """
    _prob("beta", beta)
    b_deg, b_ln, b_mc = regime_boundaries(epsilon)
    if 0.0 <= beta < b_deg:
        return SourceRegime.DEGRADED
    if b_deg <= beta < b_ln:
        return SourceRegime.LESS_NOISY
    if b_ln <= beta < b_mc:
        return SourceRegime.MORE_CAPABLE
    return SourceRegime.UNORDERED


def _bec(beta: float) -> np.ndarray:
    # rows: input bit, columns: (0, e, 1)
    return np.array([[1.0 - beta, beta, 0.0], [0.0, beta, 1.0 - beta]])


def _bsc(p: float) -> np.ndarray:
    return np.array([[1.0 - p, p], [p, 1.0 - p]])


def becbsc_joint_pmf(model: BecBscModel) -> FinitePMF:
    """p(a, b, e) = p(a) p(b|a) p(e|a) with A uniform, B ternary, E binary."""
    pa = np.array([0.5, 0.5])
    table = pa[:, None, None] * _bec(model.beta)[:, :, None] * _bsc(model.epsilon)[:, None, :]
    return FinitePMF(("A", "B", "E"), table)


def binary_state_source_pmf(model: BinaryStateModel) -> FinitePMF:
    """p(a, b, e) with A~B(a) and parallel BECs to Bob and Eve (both ternary)."""
    pa = np.array([1.0 - model.a, model.a])
    table = pa[:, None, None] * _bec(model.beta)[:, :, None] * _bec(model.epsilon)[:, None, :]
    return FinitePMF(("A", "B", "E"), table)
