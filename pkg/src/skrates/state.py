"""Bounds for wiretap channels whose state is the sources' common variable.

Two models: the binary channel Y = X xor A with BEC side information, and
the Gaussian channel Y = X + S + W1, Z = X + S + W2 under a power limit.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .info import gauss_cap, h2, star
from .models import BinaryStateModel, GaussianStateModel
from .optim import golden_section_max, quad_roots
from .result import BoundResult

__all__ = [
    "GaussianAux",
    "binary_state_outer",
    "binary_state_inner",
    "gaussian_outer",
    "gaussian_inner_closed",
    "gaussian_inner_full",
    "gaussian_quad_coeffs",
    "gaussian_deltas",
    "closed_form_rho",
]

RHO_GRID = 2049
GAMMA_GRID = 513


@dataclass
class GaussianAux:
    rho: float
    gamma: float = 1.0
    mu_bar: int = 1
    delta1: float = 0.0
    delta2: float = 0.0
    quad_a: float = math.nan
    quad_b: float = math.nan
    quad_c: float = math.nan


def binary_state_outer(model: BinaryStateModel) -> BoundResult:
    rk = model.epsilon * (1.0 - model.beta) * h2(model.a) + h2(model.zeta)
    return BoundResult(rk=rk)


def binary_state_inner(model: BinaryStateModel) -> BoundResult:
    """Joint-scheme rate with X = V = V' xor A, V' uniform, U constant."""
    raw = (
        model.epsilon * h2(star(model.a, model.zeta))
        - model.beta * h2(model.a)
        + (1.0 - model.epsilon) * h2(model.zeta)
    )
    return BoundResult(rk=max(raw, 0.0), extra={"unclipped": raw})


def _require_ordered(model: GaussianStateModel) -> None:
    if model.N1 > model.N2:
        raise ValueError(f"Bob's noise must not exceed Eve's (N1={model.N1} > N2={model.N2})")


def _pair_rate(snr_num: float, model: GaussianStateModel) -> float:
    return max(gauss_cap(snr_num / model.N1) - gauss_cap(snr_num / model.N2), 0.0)


def gaussian_outer(model: GaussianStateModel) -> BoundResult:
    _require_ordered(model)
    P, Q = model.P, model.Q
    s = P + Q + 2.0 * math.sqrt(P * Q)
    return BoundResult(rk=_pair_rate(s, model), aux={"rho": 1.0})


def closed_form_rho(model: GaussianStateModel) -> tuple[float, bool]:
    """Correlation between X and S used by the closed-form inner bound.

    Returns ``(rho, clamped)``; rho**2 is clamped into [0, 1] and P = 0
    yields rho = 0 with the flag set.
    """
    P, Q, N1 = model.P, model.Q, model.N1
    if P == 0.0:
        return 0.0, True
    s = P + Q + 2.0 * math.sqrt(P * Q)
    rho2 = 1.0 - (N1 - N1 * N1 / (s + N1)) / P
    clamped = not (0.0 <= rho2 <= 1.0)
    return math.sqrt(min(max(rho2, 0.0), 1.0)), clamped


def gaussian_inner_closed(model: GaussianStateModel) -> BoundResult:
    _require_ordered(model)
    P, Q = model.P, model.Q
    rho, clamped = closed_form_rho(model)
    s = P + Q + 2.0 * rho * math.sqrt(P * Q)
    aux = GaussianAux(rho=rho, gamma=1.0, delta1=s / model.N1, delta2=s / model.N2)
    return BoundResult(rk=_pair_rate(s, model), aux=asdict(aux), extra={"rho_clamped": clamped})


def gaussian_quad_coeffs(model: GaussianStateModel, rho: float) -> tuple[float, float, float]:
    """Coefficients (a, b, c) of the feasibility parabola in gamma."""
    P, Q, N1 = model.P, model.Q, model.N1
    r = math.sqrt(P * Q)
    one = 1.0 - rho * rho
    a = -Q * (one * P + N1)
    b = 2.0 * (one * P * Q - rho * r * N1)
    c = P * (one * (P + 2.0 * rho * r) - rho * rho * N1)
    return a, b, c


def gaussian_deltas(model: GaussianStateModel, rho, gamma):
    """Effective SNRs (Delta_1, Delta_2) at Bob and Eve; 0/0 is taken as 0."""
    P, Q = model.P, model.Q
    r = math.sqrt(P * Q)
    rho = np.asarray(rho, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    num = (P + gamma * Q + rho * (1.0 + gamma) * r) ** 2
    common = (1.0 - rho**2) * (1.0 - gamma) ** 2 * P * Q
    power = P + gamma**2 * Q + 2.0 * rho * gamma * r
    out = []
    for N in (model.N1, model.N2):
        den = common + N * power
        with np.errstate(divide="ignore", invalid="ignore"):
            out.append(np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0))
    return out[0], out[1]


def _rate_from_deltas(d1, d2):
    return np.maximum(0.5 * (np.log2(1.0 + d1) - np.log2(1.0 + d2)), 0.0)


def _gamma_interval(model: GaussianStateModel, rho: float) -> Optional[tuple[float, float]]:
    a, b, c = gaussian_quad_coeffs(model, rho)
    if model.Q == 0.0:
        # parabola degenerates to c >= 0 and gamma drops out of the rate
        return (1.0, 1.0) if c >= 0.0 else None
    return quad_roots(a, b, c)


def _gamma_grid_scan(model: GaussianStateModel, rhos: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-rho best gamma over an evenly spaced grid of its feasible interval."""
    best_g = np.full(len(rhos), np.nan)
    best_v = np.full(len(rhos), -np.inf)
    lo = np.full(len(rhos), np.nan)
    hi = np.full(len(rhos), np.nan)
    for i, r in enumerate(rhos):
        iv = _gamma_interval(model, float(r))
        if iv is not None:
            lo[i], hi[i] = iv
    ok = np.isfinite(lo)
    if not ok.any():
        return best_g, best_v
    t = np.linspace(0.0, 1.0, GAMMA_GRID)
    G = lo[ok, None] + (hi[ok, None] - lo[ok, None]) * t[None, :]
    R = np.broadcast_to(rhos[ok, None], G.shape)
    d1, d2 = gaussian_deltas(model, R, G)
    V = _rate_from_deltas(d1, d2)
    j = np.argmax(V, axis=1)
    rows = np.arange(len(j))
    best_g[ok] = G[rows, j]
    best_v[ok] = V[rows, j]
    return best_g, best_v


def gaussian_inner_full(model: GaussianStateModel) -> BoundResult:
    """Joint-scheme rate maximized numerically over (rho, gamma).

    For every rho the admissible gamma form the interval where the
    feasibility parabola is non-negative; rho values with an empty interval
    are skipped. The closed-form operating point (rho from the closed form,
    gamma = 1) is scanned as a candidate as well when it is admissible.
    """
    _require_ordered(model)
    rhos = np.linspace(0.0, 1.0, RHO_GRID)
    gammas, vals = _gamma_grid_scan(model, rhos)
    if not np.isfinite(vals).any():
        return BoundResult.infeasible()
    i = int(np.argmax(vals))
    best_rho, best_gamma, best_val = float(rhos[i]), float(gammas[i]), float(vals[i])

    rho_c, _ = closed_form_rho(model)
    iv_c = _gamma_interval(model, rho_c)
    if iv_c is not None and iv_c[0] <= 1.0 <= iv_c[1]:
        d1, d2 = gaussian_deltas(model, rho_c, 1.0)
        val_c = float(_rate_from_deltas(d1, d2))
        if val_c > best_val:
            best_rho, best_gamma, best_val = rho_c, 1.0, val_c

    def rate_at(r: float, g: float) -> float:
        iv = _gamma_interval(model, r)
        if iv is None or not (iv[0] <= g <= iv[1]):
            return -math.inf
        d1, d2 = gaussian_deltas(model, r, g)
        return float(_rate_from_deltas(d1, d2))

    rho_cell = 1.0 / (RHO_GRID - 1)
    for _ in range(3):
        iv = _gamma_interval(model, best_rho)
        g_cell = (iv[1] - iv[0]) / (GAMMA_GRID - 1)
        if g_cell > 0:
            lo, hi = max(iv[0], best_gamma - g_cell), min(iv[1], best_gamma + g_cell)
            g, v = golden_section_max(lambda x: rate_at(best_rho, x), lo, hi, tol=1e-12)
            if v > best_val:
                best_gamma, best_val = g, v
        lo, hi = max(0.0, best_rho - rho_cell), min(1.0, best_rho + rho_cell)
        r, v = golden_section_max(lambda x: rate_at(x, best_gamma), lo, hi, tol=1e-12)
        if v > best_val:
            best_rho, best_val = r, v

    a, b, c = gaussian_quad_coeffs(model, best_rho)
    d1, d2 = gaussian_deltas(model, best_rho, best_gamma)
    aux = GaussianAux(
        rho=best_rho,
        gamma=best_gamma,
        mu_bar=int(d1 >= d2),
        delta1=float(d1),
        delta2=float(d2),
        quad_a=a,
        quad_b=b,
        quad_c=c,
    )
    return BoundResult(rk=max(best_val, 0.0), aux=asdict(aux), certified=False)
