"""Generic rate expressions for arbitrary finite sources and channels.

A :class:`SystemSpec` carries the source law p(a, b, e) and the channel
p(y, z | x) (or p(y, z | x, a) when the channel state is the source A).
Auxiliary distributions are supplied as conditional tables; the evaluators
assemble the joint law and return the rate together with the constraint
margins (non-negative when the constraint holds).

Axis letters follow the usual roles: A, B, E for the sources seen by
Alice, Bob and Eve; X, Y, Z for channel input and outputs; T, Q, V, U for
the auxiliary codebook variables.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .info import FinitePMF, cond_mutual_info
from .models import BecBscModel, BinaryStateModel, becbsc_joint_pmf, binary_state_source_pmf
from .result import BoundResult

__all__ = [
    "SystemSpec",
    "AuxSpecSeparate",
    "AuxSpecJoint",
    "OuterEval",
    "InnerEval",
    "eval_outer_thm1",
    "eval_inner_sep_thm2",
    "eval_inner_joint_thm3",
    "optimize_generic",
    "becbsc_system",
    "binary_state_system",
    "bsc",
    "outer_aux",
    "prop5_aux",
    "prop6_aux",
    "prop9_aux",
]

STOCH_TOL = 1e-12
FEAS_TOL = 1e-12


def bsc(p: float) -> np.ndarray:
    return np.array([[1.0 - p, p], [p, 1.0 - p]])


def _check_stochastic(name: str, table: np.ndarray, axis=-1) -> np.ndarray:
    table = np.asarray(table, dtype=float)
    if np.any(~np.isfinite(table)) or np.any(table < 0):
        raise ValueError(f"{name} has negative or non-finite entries")
    sums = table.sum(axis=axis)
    if np.any(np.abs(sums - 1.0) > STOCH_TOL):
        raise ValueError(f"{name} is not stochastic (sums {np.unique(np.round(sums, 15))})")
    return table


@dataclass
class SystemSpec:
    """Sources p(a, b, e), channel table and bandwidth ratio eta.

    ``channel`` has shape (|X|, |Y|, |Z|), or (|X|, |A|, |Y|, |Z|) when
    ``state_coupled`` is set.
    """

    source: FinitePMF
    channel: np.ndarray
    eta: float = 1.0
    state_coupled: bool = False

    def __post_init__(self):
        if tuple(self.source.axes) != ("A", "B", "E"):
            raise ValueError(f"source axes must be ('A', 'B', 'E'), got {self.source.axes}")
        ch = np.asarray(self.channel, dtype=float)
        expected = 4 if self.state_coupled else 3
        if ch.ndim != expected:
            raise ValueError(f"channel must have {expected} dims, got {ch.ndim}")
        if self.state_coupled and ch.shape[1] != self.source.table.shape[0]:
            raise ValueError("state-coupled channel must be indexed by A on axis 1")
        self.channel = _check_stochastic("channel", ch, axis=(-2, -1))
        if not (math.isfinite(self.eta) and self.eta >= 0):
            raise ValueError(f"eta must be non-negative, got {self.eta}")

    @property
    def nA(self) -> int:
        return self.source.table.shape[0]

    @property
    def nX(self) -> int:
        return self.channel.shape[0]


@dataclass
class AuxSpecSeparate:
    """Auxiliaries of the separate scheme: p(t, x), p(q|t), p(v|a), p(u|v).

    Tables are indexed (conditioning, outcome). ``p_q_given_t=None`` means a
    constant Q.
    """

    p_tx: np.ndarray
    p_v_given_a: np.ndarray
    p_u_given_v: np.ndarray
    p_q_given_t: Optional[np.ndarray] = None

    def __post_init__(self):
        self.p_tx = np.asarray(self.p_tx, dtype=float)
        if self.p_tx.ndim != 2:
            raise ValueError("p_tx must be a 2-D table over (T, X)")
        _check_stochastic("p_tx", self.p_tx, axis=(0, 1))
        self.p_v_given_a = _check_stochastic("p_v_given_a", self.p_v_given_a)
        self.p_u_given_v = _check_stochastic("p_u_given_v", self.p_u_given_v)
        if self.p_q_given_t is None:
            self.p_q_given_t = np.ones((self.p_tx.shape[0], 1))
        self.p_q_given_t = _check_stochastic("p_q_given_t", self.p_q_given_t)
        if self.p_q_given_t.shape[0] != self.p_tx.shape[0]:
            raise ValueError("p_q_given_t rows must match |T|")
        if self.p_u_given_v.shape[0] != self.p_v_given_a.shape[1]:
            raise ValueError("p_u_given_v rows must match |V|")

    @property
    def cards(self) -> dict[str, int]:
        return {
            "T": self.p_tx.shape[0],
            "Q": self.p_q_given_t.shape[1],
            "V": self.p_v_given_a.shape[1],
            "U": self.p_u_given_v.shape[1],
        }

    def check(self, sys: SystemSpec) -> None:
        nA, nX = sys.nA, sys.nX
        if self.p_tx.shape[1] != nX or self.p_v_given_a.shape[0] != nA:
            raise ValueError("auxiliary tables do not match the system alphabets")
        c = self.cards
        caps = {"U": nA + 2, "V": (nA + 1) * (nA + 2), "Q": nX + 2, "T": (nX + 1) * (nX + 2)}
        for k, cap in caps.items():
            if c[k] > cap:
                raise ValueError(f"|{k}| = {c[k]} exceeds the cardinality cap {cap}")


@dataclass
class AuxSpecJoint:
    """Auxiliaries of the joint scheme: p(v, x | a) as (|A|, |V|, |X|) and p(u|v)."""

    p_vx_given_a: np.ndarray
    p_u_given_v: np.ndarray

    def __post_init__(self):
        self.p_vx_given_a = np.asarray(self.p_vx_given_a, dtype=float)
        if self.p_vx_given_a.ndim != 3:
            raise ValueError("p_vx_given_a must be indexed (A, V, X)")
        _check_stochastic("p_vx_given_a", self.p_vx_given_a, axis=(1, 2))
        self.p_u_given_v = _check_stochastic("p_u_given_v", self.p_u_given_v)
        if self.p_u_given_v.shape[0] != self.p_vx_given_a.shape[1]:
            raise ValueError("p_u_given_v rows must match |V|")

    @property
    def cards(self) -> dict[str, int]:
        return {"V": self.p_vx_given_a.shape[1], "U": self.p_u_given_v.shape[1]}

    def check(self, sys: SystemSpec) -> None:
        nA, nX = sys.nA, sys.nX
        if self.p_vx_given_a.shape[0] != nA or self.p_vx_given_a.shape[2] != nX:
            raise ValueError("auxiliary tables do not match the system alphabets")
        k = nX * nA
        caps = {"U": k + 4, "V": (k + 2) * (k + 4)}
        for name, cap in caps.items():
            if self.cards[name] > cap:
                raise ValueError(f"|{name}| = {self.cards[name]} exceeds the cardinality cap {cap}")


class OuterEval(NamedTuple):
    rate: float
    slack: float

    @property
    def feasible(self) -> bool:
        return self.slack >= -FEAS_TOL


class InnerEval(NamedTuple):
    rate: float
    slack_u: float
    slack_v: float

    @property
    def achievable(self) -> bool:
        return self.rate >= 0 and self.slack_u >= -FEAS_TOL and self.slack_v >= -FEAS_TOL


def _renorm(t: np.ndarray) -> np.ndarray:
    # einsum products of stochastic tables drift by a few ulps
    return t / t.sum()


def source_joint(sys: SystemSpec, p_v_given_a, p_u_given_v) -> FinitePMF:
    t = np.einsum("abe,av,vu->uvabe", sys.source.table, p_v_given_a, p_u_given_v)
    return FinitePMF(("U", "V", "A", "B", "E"), _renorm(t))


def channel_joint(sys: SystemSpec, p_tx, p_q_given_t) -> FinitePMF:
    t = np.einsum("tq,tx,xyz->qtxyz", p_q_given_t, p_tx, sys.channel)
    return FinitePMF(("Q", "T", "X", "Y", "Z"), _renorm(t))


def _reject_coupled(sys: SystemSpec, what: str) -> None:
    if sys.state_coupled:
        raise ValueError(f"{what} requires sources independent of the channel")


def eval_outer_thm1(sys: SystemSpec, aux: AuxSpecSeparate) -> OuterEval:
    """Outer-bound objective and its constraint margin at the given auxiliaries.

    Q, if present in ``aux``, is ignored.
    """
    _reject_coupled(sys, "the outer bound")
    aux.check(sys)
    ch = channel_joint(sys, aux.p_tx, np.ones((aux.p_tx.shape[0], 1)))
    src = source_joint(sys, aux.p_v_given_a, aux.p_u_given_v)
    rate = sys.eta * (cond_mutual_info(ch, ["T"], ["Y"]) - cond_mutual_info(ch, ["T"], ["Z"]))
    rate += cond_mutual_info(src, ["V"], ["B"], ["U"]) - cond_mutual_info(src, ["V"], ["E"], ["U"])
    slack = sys.eta * cond_mutual_info(ch, ["X"], ["Y"]) - cond_mutual_info(src, ["V"], ["A"], ["B"])
    return OuterEval(rate, slack)


def eval_inner_sep_thm2(sys: SystemSpec, aux: AuxSpecSeparate) -> InnerEval:
    """Separate-scheme rate and the margins of its two decoding conditions."""
    _reject_coupled(sys, "the separate scheme")
    aux.check(sys)
    ch = channel_joint(sys, aux.p_tx, aux.p_q_given_t)
    src = source_joint(sys, aux.p_v_given_a, aux.p_u_given_v)
    eta = sys.eta
    rate = eta * (cond_mutual_info(ch, ["T"], ["Y"], ["Q"]) - cond_mutual_info(ch, ["T"], ["Z"], ["Q"]))
    rate += cond_mutual_info(src, ["V"], ["B"], ["U"]) - cond_mutual_info(src, ["V"], ["E"], ["U"])
    slack_u = eta * cond_mutual_info(ch, ["Q"], ["Y"]) - cond_mutual_info(src, ["U"], ["A"], ["B"])
    slack_v = eta * cond_mutual_info(ch, ["T"], ["Y"]) - cond_mutual_info(src, ["V"], ["A"], ["B"])
    return InnerEval(rate, slack_u, slack_v)


def joint_scheme_pmf(sys: SystemSpec, aux: AuxSpecJoint) -> FinitePMF:
    """Joint law over (U, V, A, B, E, X, Y, Z) for the joint scheme."""
    if sys.state_coupled:
        subs = "vu,avx,abe,xayz->uvabexyz"
    else:
        subs = "vu,avx,abe,xyz->uvabexyz"
    t = np.einsum(subs, aux.p_u_given_v, aux.p_vx_given_a, sys.source.table, sys.channel)
    return FinitePMF(("U", "V", "A", "B", "E", "X", "Y", "Z"), _renorm(t))


def joint_information(sys: SystemSpec, aux: AuxSpecJoint) -> dict[str, float]:
    """Information quantities that set the joint scheme's rate conditions."""
    p = joint_scheme_pmf(sys, aux)
    return {
        "I(U;A)": cond_mutual_info(p, ["U"], ["A"]),
        "I(V;A|U)": cond_mutual_info(p, ["V"], ["A"], ["U"]),
        "I(U;BY)": cond_mutual_info(p, ["U"], ["B", "Y"]),
        "I(UV;BY)": cond_mutual_info(p, ["U", "V"], ["B", "Y"]),
        "I(V;BY|U)": cond_mutual_info(p, ["V"], ["B", "Y"], ["U"]),
        "I(V;EZ|U)": cond_mutual_info(p, ["V"], ["E", "Z"], ["U"]),
        "H(A)": p.entropy(["A"]),
    }


def eval_inner_joint_thm3(sys: SystemSpec, aux: AuxSpecJoint) -> InnerEval:
    """Joint-scheme rate and the margins of its covering/packing conditions."""
    if sys.eta != 1.0:
        raise ValueError(f"the joint scheme is defined for eta = 1, got {sys.eta}")
    aux.check(sys)
    q = joint_information(sys, aux)
    rate = q["I(V;BY|U)"] - q["I(V;EZ|U)"]
    return InnerEval(rate, q["I(U;BY)"] - q["I(U;A)"], q["I(V;BY|U)"] - q["I(V;A|U)"])


# ---------------------------------------------------------------------------
# concrete systems and the auxiliary families used by the closed forms


def becbsc_system(model: BecBscModel) -> SystemSpec:
    # Y = X, Z = BSC(zeta)(X)
    W = np.einsum("xy,xz->xyz", np.eye(2), bsc(model.zeta))
    return SystemSpec(becbsc_joint_pmf(model), W, eta=1.0)


def binary_state_system(model: BinaryStateModel) -> SystemSpec:
    # Y = X xor A, Z = Y xor W
    W = np.zeros((2, 2, 2, 2))
    for x, a in itertools.product(range(2), repeat=2):
        W[x, a, x ^ a, :] = bsc(model.zeta)[x ^ a]
    return SystemSpec(binary_state_source_pmf(model), W, eta=1.0, state_coupled=True)


def outer_aux(v: float) -> AuxSpecSeparate:
    """T = X ~ B(1/2), V = A, U = A xor U' with U' ~ B(v)."""
    return AuxSpecSeparate(p_tx=np.eye(2) / 2, p_v_given_a=np.eye(2), p_u_given_v=bsc(v))


def prop5_aux(u: float, v: float, q: float) -> AuxSpecSeparate:
    """T = X ~ B(1/2), Q = X xor Q', V = A xor V', U = V xor U'."""
    return AuxSpecSeparate(p_tx=np.eye(2) / 2, p_v_given_a=bsc(v), p_u_given_v=bsc(u), p_q_given_t=bsc(q))


def prop6_aux(v: float) -> AuxSpecJoint:
    """V ~ B(1/2), X = V xor A, U = V xor V' with V' ~ B(v)."""
    p = np.zeros((2, 2, 2))
    for a, vv in itertools.product(range(2), repeat=2):
        p[a, vv, vv ^ a] = 0.5
    return AuxSpecJoint(p, bsc(v))


def prop9_aux() -> AuxSpecJoint:
    """X = V = V' xor A with V' ~ B(1/2), U constant."""
    p = np.zeros((2, 2, 2))
    for a, vv in itertools.product(range(2), repeat=2):
        p[a, vv, vv] = 0.5
    return AuxSpecJoint(p, np.ones((2, 1)))


# ---------------------------------------------------------------------------
# best-found search over auxiliary simplices

PENALTY = 10.0


def _tables(which: str, sys: SystemSpec, cards: dict[str, int]) -> list[tuple[int, int]]:
    """(number of rows, row length) for each table searched over."""
    nA, nX = sys.nA, sys.nX
    if which == "inner_joint":
        return [(nA, cards["V"] * nX), (cards["V"], cards["U"])]
    shapes = [(1, cards["T"] * nX), (nA, cards["V"]), (cards["V"], cards["U"])]
    if which == "inner_sep":
        shapes.append((cards["T"], cards["Q"]))
    return shapes


def _build(which: str, sys: SystemSpec, cards: dict[str, int], rows: list[np.ndarray]):
    nX = sys.nX
    if which == "inner_joint":
        pvx = np.stack(rows[: sys.nA]).reshape(sys.nA, cards["V"], nX)
        pu = np.stack(rows[sys.nA :])
        return AuxSpecJoint(pvx, pu)
    i = 0
    p_tx = rows[i].reshape(cards["T"], nX)
    i += 1
    pv = np.stack(rows[i : i + sys.nA])
    i += sys.nA
    pu = np.stack(rows[i : i + cards["V"]])
    i += cards["V"]
    pq = np.stack(rows[i : i + cards["T"]]) if which == "inner_sep" else None
    return AuxSpecSeparate(p_tx, pv, pu, pq)


def _evaluate(which: str, sys: SystemSpec, aux) -> tuple[float, float]:
    """(rate, worst constraint margin)."""
    if which == "outer":
        r = eval_outer_thm1(sys, aux)
        return r.rate, r.slack
    if which == "inner_sep":
        r = eval_inner_sep_thm2(sys, aux)
    else:
        r = eval_inner_joint_thm3(sys, aux)
    return r.rate, min(r.slack_u, r.slack_v)


def _normalize_rows(rows: list[np.ndarray]) -> list[np.ndarray]:
    return [r / r.sum() for r in rows]


def optimize_generic(
    sys: SystemSpec,
    which: str,
    cards: dict[str, int],
    restarts: int = 16,
    seed: int = 0,
    step_start: float = 0.25,
    step_end: float = 1e-4,
) -> BoundResult:
    """Best-found rate over auxiliary distributions by multi-start pattern search.

    Each restart draws every conditional row from Dirichlet(1, ..., 1) with
    a generator seeded by ``(seed, restart)`` and then moves probability mass
    between pairs of entries of one row at a time, halving the step when no
    move helps. Infeasible points are explored through a penalty but only
    feasible points are reported. The value is not a certified optimum.
    """
    if which not in ("outer", "inner_sep", "inner_joint"):
        raise ValueError(f"unknown bound {which!r}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if which in ("outer", "inner_sep"):
        _reject_coupled(sys, f"the {which} bound")
    cards = {"T": 1, "Q": 1, "U": 1, "V": 1, **cards}
    shapes = _tables(which, sys, cards)
    # validates the caps before searching
    _build(which, sys, cards, [np.full(k, 1.0 / k) for n, k in shapes for _ in range(n)]).check(sys)

    def score(rows):
        rate, slack = _evaluate(which, sys, _build(which, sys, cards, rows))
        return rate + PENALTY * min(slack, 0.0), rate, slack

    best = None  # (rate, restart, rows, slack)
    per_restart = []
    for k in range(restarts):
        rng = np.random.default_rng([seed, k])
        rows = [rng.dirichlet(np.ones(length)) for n, length in shapes for _ in range(n)]
        rows = _normalize_rows(rows)
        cur, rate, slack = score(rows)
        best_here = (rate, slack, [r.copy() for r in rows]) if slack >= -FEAS_TOL else None
        step = step_start
        while step >= step_end:
            improved = True
            while improved:
                improved = False
                for ri, row in enumerate(rows):
                    n = len(row)
                    for i, j in itertools.permutations(range(n), 2):
                        d = min(step, row[j])
                        if d <= 0.0:
                            continue
                        trial = row.copy()
                        trial[i] += d
                        trial[j] -= d
                        trial = np.clip(trial, 0.0, None)
                        trial /= trial.sum()
                        cand = rows[:ri] + [trial] + rows[ri + 1 :]
                        s, r_, sl = score(cand)
                        if s > cur + 1e-15:
                            rows, row, cur = cand, trial, s
                            improved = True
                            if sl >= -FEAS_TOL and (best_here is None or r_ > best_here[0]):
                                best_here = (r_, sl, [x.copy() for x in rows])
            step /= 2.0
        per_restart.append(best_here[0] if best_here else -math.inf)
        if best_here is not None and (best is None or best_here[0] > best[0]):
            best = (best_here[0], k, best_here[2], best_here[1])

    if best is None:
        out = BoundResult.infeasible(per_restart=per_restart)
        out.certified = False
        return out
    rate, k, rows, slack = best
    aux = _build(which, sys, cards, rows)
    return BoundResult(
        rk=max(rate, 0.0),
        aux={"tables": aux, "restart": k, "cards": cards},
        slack=slack,
        certified=False,
        extra={"per_restart": per_restart, "raw_rate": rate},
    )
