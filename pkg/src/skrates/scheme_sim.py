"""Monte Carlo simulation of the separate and joint key-agreement schemes.

Both schemes use random codebooks drawn from strongly typical sets, encode
by typicality search and decode by unique joint typicality. Blocklengths
are tiny (n around 10), so the simulations show finite-length trends only.

Codeword counts are ``2 ** ceil(n * rate)``. All randomness comes from
``np.random.default_rng`` seeded with integer tuples, so a configuration
and a seed determine every reported number.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from .info import FinitePMF
from .models import BecBscModel, BinaryStateModel
from .region import (
    AuxSpecJoint,
    AuxSpecSeparate,
    SystemSpec,
    becbsc_system,
    binary_state_system,
    channel_joint,
    joint_information,
    joint_scheme_pmf,
    source_joint,
)

__all__ = [
    "JointSimConfig",
    "SeparateSimConfig",
    "Codebook",
    "SimReport",
    "DecodeError",
    "JointEncoding",
    "SeparateEncoding",
    "typical_mask",
    "typical_set_nonempty",
    "system_for",
    "joint_rates_inside",
    "separate_rates_inside",
    "build_joint_codebook",
    "joint_encode",
    "joint_decode",
    "exact_leakage_joint",
    "plugin_leakage",
    "run_joint_experiment",
    "build_separate_codebook",
    "separate_map",
    "separate_unmap",
    "separate_encode",
    "separate_decode",
    "run_separate_experiment",
]

Model = Union[BecBscModel, BinaryStateModel]

MAX_CODEBOOK_EXP = 20
EXACT_BUDGET = 2**22
EXACT_MAX_N = 6
SEQ_STAT_BUDGET = 4096
# tags separating the random streams of one seed
_TRIAL, _CODEBOOK, _KEYHASH = 0, 1, 2


def _exp(n: int, rate: float) -> int:
    # guard against n*rate landing a few ulps above an integer
    return max(0, math.ceil(n * rate - 1e-9))


def system_for(model: Model) -> SystemSpec:
    if isinstance(model, BinaryStateModel):
        return binary_state_system(model)
    if isinstance(model, BecBscModel):
        return becbsc_system(model)
    raise TypeError(f"unsupported model {type(model).__name__}")


# ---------------------------------------------------------------------------
# typicality


def _cell_bounds(p: np.ndarray, n: int, delta: float) -> tuple[np.ndarray, np.ndarray]:
    lo = np.maximum(np.ceil(n * (p - delta) - 1e-9), 0)
    hi = np.minimum(np.floor(n * (p + delta) + 1e-9), n)
    hi = np.where(p > 0, hi, 0)
    return lo.astype(int), hi.astype(int)


def typical_set_nonempty(p: np.ndarray, n: int, delta: float) -> bool:
    """Whether some length-n sequence has its type within delta of ``p``."""
    lo, hi = _cell_bounds(np.ravel(p), n, delta)
    return bool(np.all(lo <= hi) and lo.sum() <= n <= hi.sum())


def typical_mask(p: np.ndarray, seqs: list, delta: float) -> np.ndarray:
    """Strong joint typicality of stacked sequences against the table ``p``.

    ``seqs`` holds one integer array per axis of ``p``, each broadcastable
    to (K, n). A tuple is typical when every cell of its joint type is
    within ``delta`` of ``p`` and no zero-probability cell occurs.
    """
    arrays = np.broadcast_arrays(*[np.atleast_2d(s) for s in seqs])
    K, n = arrays[0].shape
    cells = np.ravel_multi_index(tuple(arrays), p.shape)
    C = p.size
    flat = (cells + C * np.arange(K)[:, None]).ravel()
    counts = np.bincount(flat, minlength=K * C).reshape(K, C)
    pf = p.ravel()
    ok = np.all(np.abs(counts / n - pf) <= delta + 1e-12, axis=1)
    return ok & np.all(counts[:, pf == 0] == 0, axis=1)


def _sample_rows(rng: np.random.Generator, probs: np.ndarray) -> np.ndarray:
    """One draw per row of a (..., k) probability array."""
    cdf = np.cumsum(probs, axis=-1)
    u = rng.random(probs.shape[:-1])
    idx = (cdf < (u * cdf[..., -1])[..., None]).sum(axis=-1)
    return np.minimum(idx, probs.shape[-1] - 1)


def _sample_typical(
    rng: np.random.Generator,
    p_joint: np.ndarray,
    given: Optional[np.ndarray],
    count: int,
    n: int,
    delta: float,
    max_batches: int = 2000,
) -> np.ndarray:
    """Draw ``count`` i.i.d. sequences conditioned on typicality.

    Without ``given`` the sequences come from p (1-D) and must lie in T(p).
    With ``given`` (a length-n sequence of the first axis of the 2-D table
    ``p_joint``) each symbol is drawn from p(. | given_i) and the pair must
    be jointly typical, i.e. the sequence lies in the conditional typical set.
    """
    if given is None:
        if not typical_set_nonempty(p_joint, n, delta):
            raise ValueError(f"typical set is empty at n={n}, delta={delta}")
        probs = np.broadcast_to(p_joint, (n, p_joint.size))
    else:
        counts = np.bincount(given, minlength=p_joint.shape[0])
        lo, hi = _cell_bounds(p_joint, n, delta)
        if not (np.all(lo <= hi) and np.all(lo.sum(1) <= counts) and np.all(counts <= hi.sum(1))):
            raise ValueError(f"conditional typical set is empty at n={n}, delta={delta}")
        rows = p_joint[given]
        probs = rows / rows.sum(axis=1, keepdims=True)
    out = np.empty((count, n), dtype=np.int64)
    filled = 0
    batch = max(256, 4 * count)
    for _ in range(max_batches):
        draw = _sample_rows(rng, np.broadcast_to(probs, (batch,) + probs.shape))
        if given is None:
            ok = typical_mask(p_joint, [draw], delta)
        else:
            ok = typical_mask(p_joint, [given[None, :], draw], delta)
        good = draw[ok]
        take = min(len(good), count - filled)
        out[filled : filled + take] = good[:take]
        filled += take
        if filled == count:
            return out
    raise RuntimeError("typical set too thin for rejection sampling; increase delta")


def _equal_bins(rng: np.random.Generator, total_exp: int, bin_exp: int) -> np.ndarray:
    """Random partition of 2**total_exp items into 2**bin_exp equal bins."""
    if bin_exp > total_exp:
        raise ValueError(f"cannot split 2^{total_exp} codewords into 2^{bin_exp} bins")
    perm = rng.permutation(2**total_exp)
    labels = np.empty(2**total_exp, dtype=np.int64)
    labels[perm] = np.arange(2**total_exp) % (2**bin_exp)
    return labels


def _sample_source(rng, pmf: FinitePMF, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    flat = rng.choice(pmf.table.size, size=n, p=pmf.table.ravel())
    a, b, e = np.unravel_index(flat, pmf.table.shape)
    return a, b, e


def _channel(rng, sys: SystemSpec, x: np.ndarray, a: Optional[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    W = sys.channel[x, a] if sys.state_coupled else sys.channel[x]
    nz = W.shape[-1]
    idx = _sample_rows(rng, W.reshape(len(x), -1))
    return idx // nz, idx % nz


# ---------------------------------------------------------------------------
# configurations and reports


def _check_rates(**rates: float) -> None:
    for name, r in rates.items():
        if not (math.isfinite(r) and r >= 0):
            raise ValueError(f"rate {name} must be finite and non-negative, got {r}")


@dataclass
class JointSimConfig:
    n: int
    R1: float
    R2: float
    Rf: float
    Rk: float
    model: Model
    delta: float = 0.1
    trials: int = 100
    seed: int = 0
    eps_tilde: float = 0.0
    batch_size: int = 100

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.trials < 1 or self.batch_size < 1:
            raise ValueError("trials and batch_size must be >= 1")
        if not (0 < self.delta <= 1):
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        _check_rates(R1=self.R1, R2=self.R2, Rf=self.Rf, Rk=self.Rk)

    def check_key_rate(self, aux: AuxSpecJoint) -> float:
        """Check R2 + Rf = Rk + I(V;EZ|U) - eps_tilde up to one bit per block."""
        i_vez = joint_information(system_for(self.model), aux)["I(V;EZ|U)"]
        target = self.Rk + i_vez - self.eps_tilde
        if abs(self.R2 + self.Rf - target) > 1.0 / self.n + 1e-12:
            raise ValueError(
                f"R2 + Rf = {self.R2 + self.Rf:.6f} but Rk + I(V;EZ|U) - eps_tilde = {target:.6f}"
            )
        return i_vez


@dataclass
class SeparateSimConfig:
    n: int
    m: int
    S1: float
    S2p: float
    S2pp: float
    R1: float
    R2: float
    Rc: float
    Rp: float
    Rf: float
    Rk: float
    model: BecBscModel
    delta: float = 0.1
    trials: int = 100
    seed: int = 0
    batch_size: int = 100

    def __post_init__(self):
        if self.n < 2 or self.m < 1:
            raise ValueError("need n >= 2 and m >= 1")
        if self.m % self.n:
            raise ValueError(f"m/n must be an integer, got m={self.m}, n={self.n}")
        if self.trials < 1 or self.batch_size < 1:
            raise ValueError("trials and batch_size must be >= 1")
        if not (0 < self.delta <= 1):
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        _check_rates(
            S1=self.S1, S2p=self.S2p, S2pp=self.S2pp, R1=self.R1, R2=self.R2,
            Rc=self.Rc, Rp=self.Rp, Rf=self.Rf, Rk=self.Rk,
        )
        if abs(self.R1 + self.R2 - self.Rc - self.Rp) > 1e-9:
            raise ValueError("index map needs R1 + R2 = Rc + Rp")
        if self.R1 > self.Rc + 1e-12:
            raise ValueError("index map needs R1 <= Rc")
        if self.R1 > self.S1 + 1e-12 or self.R2 > self.S2p + self.S2pp + 1e-12:
            raise ValueError("bin rates cannot exceed codebook rates")
        if self.Rk > self.S1 + self.S2p + self.S2pp + 1e-12:
            raise ValueError("key rate cannot exceed S1 + S2' + S2''")

    @property
    def eta(self) -> int:
        return self.m // self.n


@dataclass
class Codebook:
    """Layered codewords, bin labels and the typicality tables they use."""

    scheme: str
    n: int
    m: int
    delta: float
    seed: int
    exps: dict[str, int]
    words: dict[str, np.ndarray]
    bins: dict[str, np.ndarray]
    sys: SystemSpec
    aux: Union[AuxSpecJoint, AuxSpecSeparate]
    tables: dict[str, np.ndarray] = field(default_factory=dict)

    def size(self, name: str) -> int:
        return 2 ** self.exps[name]


@dataclass
class SimReport:
    agreement_rate: float
    encode_failure_rate: float
    decode_error_rate: float
    leakage_bits_per_symbol: float
    leakage_method: str
    trials_run: int
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("agreement_rate", "encode_failure_rate", "decode_error_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a fraction, got {v}")
        if self.leakage_bits_per_symbol < 0:
            raise ValueError("leakage must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


class DecodeError(Exception):
    def __init__(self, stage: str, candidates: int):
        super().__init__(f"decoding failed at stage {stage!r} with {candidates} typical candidates")
        self.stage = stage
        self.candidates = candidates


# ---------------------------------------------------------------------------
# joint scheme


@dataclass
class JointEncoding:
    r1: int
    r2: int
    rf: int
    key: int
    x: np.ndarray
    failed_u: bool
    failed_v: bool

    @property
    def failed(self) -> bool:
        return self.failed_u or self.failed_v


def joint_rates_inside(model: Model, aux: AuxSpecJoint, n: int, margin: float = 0.15, eps_tilde: float = 0.0) -> dict:
    """Rate tuple strictly inside the joint scheme's conditions by ``margin``.

    Covering rates are scaled up by (1 + margin), the packing sums down by
    (1 - margin). The randomization rate takes the smallest positive
    codebook exponent (one bit per block) and R2 the rest of the packing
    budget, which leaves the covering condition with extra room.
    A negative margin gives a point outside the packing conditions.
    """
    q = joint_information(system_for(model), aux)
    R1 = (1.0 + margin) * q["I(U;A)"]
    total = min((1.0 - margin) * q["I(V;BY|U)"], (1.0 - margin) * q["I(UV;BY)"] - R1)
    Rf = min(1.0 / n, max(total, 0.0))
    R2 = max(total - Rf, 0.0)
    Rk = max(R2 + Rf - q["I(V;EZ|U)"] + eps_tilde, 0.0)
    eps_tilde = Rk - (R2 + Rf - q["I(V;EZ|U)"]) if Rk == 0.0 else eps_tilde
    return {"R1": R1, "R2": R2, "Rf": Rf, "Rk": Rk, "eps_tilde": eps_tilde, "info": q}


def _joint_tables(sys: SystemSpec, aux: AuxSpecJoint) -> dict[str, np.ndarray]:
    p = joint_scheme_pmf(sys, aux)
    return {
        "U": p.marginal(["U"]),
        "UA": p.marginal(["U", "A"]),
        "UV": p.marginal(["U", "V"]),
        "UVA": p.marginal(["U", "V", "A"]),
        "UVBY": p.marginal(["U", "V", "B", "Y"]),
    }


def build_joint_codebook(cfg: JointSimConfig, aux: AuxSpecJoint, batch: int = 0) -> Codebook:
    sys = system_for(cfg.model)
    aux.check(sys)
    cfg.check_key_rate(aux)
    n = cfg.n
    k1, k2, kf, kk = (_exp(n, r) for r in (cfg.R1, cfg.R2, cfg.Rf, cfg.Rk))
    if k1 + k2 + kf > MAX_CODEBOOK_EXP:
        raise ValueError(f"codebook of 2^{k1 + k2 + kf} words exceeds the 2^{MAX_CODEBOOK_EXP} memory bound")
    if kk > k2 + kf:
        raise ValueError(f"2^{kk} key bins exceed the 2^{k2 + kf} codewords per cloud")
    tables = _joint_tables(sys, aux)
    rng = np.random.default_rng([cfg.seed, _CODEBOOK, batch])
    u = _sample_typical(rng, tables["U"], None, 2**k1, n, cfg.delta)
    nv = 2 ** (k2 + kf)
    v = np.stack([_sample_typical(rng, tables["UV"], u[i], nv, n, cfg.delta) for i in range(2**k1)])
    v = v.reshape(2**k1, 2**k2, 2**kf, n)
    key = np.stack([_equal_bins(rng, k2 + kf, kk) for _ in range(2**k1)]).reshape(2**k1, 2**k2, 2**kf)
    return Codebook(
        scheme="joint",
        n=n,
        m=n,
        delta=cfg.delta,
        seed=cfg.seed,
        exps={"R1": k1, "R2": k2, "Rf": kf, "Rk": kk},
        words={"u": u, "v": v},
        bins={"key": key},
        sys=sys,
        aux=aux,
        tables=tables,
    )


def _x_given_va(aux: AuxSpecJoint) -> np.ndarray:
    """p(x | v, a) indexed (V, A, X); uniform where p(v|a) = 0."""
    p = np.transpose(aux.p_vx_given_a, (1, 0, 2))
    s = p.sum(axis=2, keepdims=True)
    return np.where(s > 0, p / np.where(s > 0, s, 1.0), 1.0 / p.shape[2])


def _pick(rng: np.random.Generator, mask: np.ndarray) -> tuple[int, bool]:
    idx = np.flatnonzero(mask)
    if len(idx):
        return int(idx[rng.integers(len(idx))]), False
    return int(rng.integers(len(mask))), True


def joint_encode(cb: Codebook, a_seq: np.ndarray, rf: int, rng: np.random.Generator) -> JointEncoding:
    """Typicality encoder with uniform tie-breaking and uniform fallback."""
    a_seq = np.asarray(a_seq)
    if a_seq.shape != (cb.n,):
        raise ValueError(f"a_seq must have length {cb.n}")
    u, v = cb.words["u"], cb.words["v"]
    ok_u = typical_mask(cb.tables["UA"], [u, a_seq[None, :]], cb.delta)
    r1, fail_u = _pick(rng, ok_u)
    row = v[r1, :, rf]
    ok_v = typical_mask(cb.tables["UVA"], [u[r1][None, :], row, a_seq[None, :]], cb.delta)
    r2, fail_v = _pick(rng, ok_v)
    px = _x_given_va(cb.aux)[v[r1, r2, rf], a_seq]
    x = _sample_rows(rng, px)
    return JointEncoding(r1, r2, rf, int(cb.bins["key"][r1, r2, rf]), x, fail_u, fail_v)


def joint_decode(cb: Codebook, b_seq: np.ndarray, y_seq: np.ndarray) -> tuple[tuple[int, int, int], int]:
    """Unique (r1, r2, rf) whose codewords are jointly typical with (b, y)."""
    u, v = cb.words["u"], cb.words["v"]
    n1, n2, nf, n = v.shape
    U = np.broadcast_to(u[:, None, None, :], v.shape).reshape(-1, n)
    ok = typical_mask(cb.tables["UVBY"], [U, v.reshape(-1, n), b_seq[None, :], y_seq[None, :]], cb.delta)
    hits = np.flatnonzero(ok)
    if len(hits) != 1:
        raise DecodeError("joint", len(hits))
    r1, r2, rf = np.unravel_index(hits[0], (n1, n2, nf))
    return (int(r1), int(r2), int(rf)), int(cb.bins["key"][r1, r2, rf])


def _eve_kernel(cb: Codebook) -> np.ndarray:
    """K[a, v, c] = p(e|a) sum_x p(x|v,a) p(z|x,a) with c = e * |Z| + z."""
    sys = cb.sys
    src = sys.source
    p_ae = src.marginal(["A", "E"])
    p_e_a = p_ae / p_ae.sum(axis=1, keepdims=True)
    pz = sys.channel.sum(axis=-2)  # marginal over y
    if not sys.state_coupled:
        pz = np.broadcast_to(pz[:, None, :], (pz.shape[0], sys.nA, pz.shape[-1]))
    pxva = _x_given_va(cb.aux)  # (V, A, X)
    z_given_va = np.einsum("vax,xaz->avz", pxva, pz)
    K = p_e_a[:, None, :, None] * z_given_va[:, :, None, :]
    return K.reshape(K.shape[0], K.shape[1], -1)


def _mutual_info_2d(P: np.ndarray) -> float:
    def H(p):
        p = p[p > 0]
        return float(-(p * np.log2(p)).sum())

    return H(P.sum(axis=1)) + H(P.sum(axis=0)) - H(P.ravel())


def exact_leakage_joint(cb: Codebook, cfg: Optional[JointSimConfig] = None, chunk: int = 64) -> float:
    """I(K; E^n Z^n) / n for a fixed codebook, by full enumeration.

    The law of (K, E^n, Z^n) is assembled from every source sequence and
    every encoder random choice (r_f, and the uniform picks among typical
    candidates or the fallback).
    """
    n = cb.n
    K = _eve_kernel(cb)
    nA, _, C = K.shape
    nkeys = 2 ** cb.exps["Rk"]
    if n > EXACT_MAX_N or C**n * nkeys > EXACT_BUDGET:
        raise ValueError(
            f"exact enumeration needs n <= {EXACT_MAX_N} and |EZ|^n * 2^(n Rk) <= 2^22; use the plug-in estimate"
        )
    u, v = cb.words["u"], cb.words["v"]
    n1, n2, nf, _ = v.shape
    key = cb.bins["key"]
    pA = cb.sys.source.marginal(["A"])
    P = np.zeros((nkeys, C**n))
    flat_v = v.reshape(-1, n)
    flat_key = key.ravel()
    for a_seq in itertools.product(range(nA), repeat=n):
        a = np.array(a_seq)
        pa = float(np.prod(pA[a]))
        if pa == 0.0:
            continue
        w = np.zeros(n1 * n2 * nf)
        ok_u = typical_mask(cb.tables["UA"], [u, a[None, :]], cb.delta)
        r1s = np.flatnonzero(ok_u) if ok_u.any() else np.arange(n1)
        for r1 in r1s:
            ok_v = typical_mask(cb.tables["UVA"], [u[r1][None, :], v[r1].reshape(-1, n), a[None, :]], cb.delta)
            ok_v = ok_v.reshape(n2, nf)
            for rf in range(nf):
                col = ok_v[:, rf]
                r2s = np.flatnonzero(col) if col.any() else np.arange(n2)
                idx = np.ravel_multi_index((r1, r2s, rf), (n1, n2, nf))
                w[idx] += pa / (len(r1s) * nf * len(r2s))
        used = np.flatnonzero(w)
        for start in range(0, len(used), chunk):
            sel = used[start : start + chunk]
            M = K[a[0], flat_v[sel, 0], :]
            for i in range(1, n):
                M = (M[:, :, None] * K[a[i], flat_v[sel, i], None, :]).reshape(len(sel), -1)
            onehot = (flat_key[sel][:, None] == np.arange(nkeys)[None, :]).astype(float)
            P += (onehot * w[sel, None]).T @ M
    total = P.sum()
    if abs(total - 1.0) > 1e-9:
        raise RuntimeError(f"assembled p(k, e^n, z^n) sums to {total}")
    return max(_mutual_info_2d(P), 0.0) / n


def _eve_statistic(e: np.ndarray, z: np.ndarray, ne: int, nz: int) -> tuple:
    """Full sequence when the space is small, otherwise the count vector of symbols."""
    n_e, n_z = len(e), len(z)
    if ne**n_e * nz**n_z <= SEQ_STAT_BUDGET:
        return tuple(e) + tuple(z)
    if n_e == n_z:
        return tuple(np.bincount(e * nz + z, minlength=ne * nz))
    return tuple(np.bincount(e, minlength=ne)) + tuple(np.bincount(z, minlength=nz))


def plugin_leakage(keys: list[int], stats: list[tuple]) -> tuple[float, float]:
    """Empirical I(K; S) in bits and the first-order (Miller-Madow) bias term."""
    N = len(keys)
    if N == 0:
        return 0.0, 0.0
    kidx = {k: i for i, k in enumerate(sorted(set(keys)))}
    sidx = {s: i for i, s in enumerate(sorted(set(stats)))}
    P = np.zeros((len(kidx), len(sidx)))
    for k, s in zip(keys, stats):
        P[kidx[k], sidx[s]] += 1.0
    P /= N
    nonzero = int((P > 0).sum())
    bias = (nonzero - len(kidx) - len(sidx) + 1) / (2.0 * N * math.log(2.0))
    return max(_mutual_info_2d(P), 0.0), bias


def _exact_allowed(cb: Codebook) -> bool:
    C = _eve_kernel(cb).shape[2]
    return cb.n <= EXACT_MAX_N and C**cb.n * 2 ** cb.exps["Rk"] <= EXACT_BUDGET


def _batches(trials: int, size: int):
    for b, start in enumerate(range(0, trials, size)):
        yield b, range(start, min(start + size, trials))


def _summarize(records: list[dict], leak: float, method: str, details: dict) -> SimReport:
    N = len(records)
    decoded = [r for r in records if r["decoded"]]
    agree = sum(r["agree"] for r in records)
    stages: dict[str, int] = {}
    for r in records:
        if not r["decoded"]:
            stages[r["stage"]] = stages.get(r["stage"], 0) + 1
    details = dict(details)
    details["agreement_given_decoded"] = (sum(r["agree"] for r in decoded) / len(decoded)) if decoded else None
    details["decode_errors_by_stage"] = dict(sorted(stages.items()))
    return SimReport(
        agreement_rate=agree / N,
        encode_failure_rate=sum(r["enc_fail"] for r in records) / N,
        decode_error_rate=(N - len(decoded)) / N,
        leakage_bits_per_symbol=leak,
        leakage_method=method,
        trials_run=N,
        details=details,
    )


def run_joint_experiment(cfg: JointSimConfig, aux: AuxSpecJoint) -> SimReport:
    """Trials of the joint scheme with a fresh codebook per batch of trials."""
    records = []
    leaks, methods, biases = [], set(), []
    exps = None
    for b, trial_ids in _batches(cfg.trials, cfg.batch_size):
        cb = build_joint_codebook(cfg, aux, batch=b)
        exps = cb.exps
        nE = cb.sys.source.table.shape[2]
        nZ = cb.sys.channel.shape[-1]
        keys, stats = [], []
        for t in trial_ids:
            rng = np.random.default_rng([cfg.seed, _TRIAL, t])
            a, bb, e = _sample_source(rng, cb.sys.source, cfg.n)
            rf = int(rng.integers(cb.size("Rf")))
            enc = joint_encode(cb, a, rf, rng)
            y, z = _channel(rng, cb.sys, enc.x, a)
            rec = {"enc_fail": enc.failed, "decoded": True, "agree": False, "stage": None}
            try:
                _, k_hat = joint_decode(cb, bb, y)
                rec["agree"] = k_hat == enc.key
            except DecodeError as err:
                rec["decoded"], rec["stage"] = False, err.stage
            records.append(rec)
            keys.append(enc.key)
            stats.append(_eve_statistic(e, z, nE, nZ))
        if _exact_allowed(cb):
            leaks.append((exact_leakage_joint(cb, cfg), len(trial_ids)))
            methods.add("exact")
        else:
            mi, bias = plugin_leakage(keys, stats)
            leaks.append((mi / cfg.n, len(trial_ids)))
            biases.append(bias / cfg.n)
            methods.add("plugin")
    leak = sum(l * w for l, w in leaks) / cfg.trials
    method = "exact" if methods == {"exact"} else "plugin"
    details = {"scheme": "joint", "codebook_exponents": exps, "codebooks": len(leaks)}
    if biases:
        details["plugin_bias_bits_per_symbol"] = float(np.mean(biases))
    return _summarize(records, leak, method, details)


# ---------------------------------------------------------------------------
# separate scheme


@dataclass
class SeparateEncoding:
    s1: int
    s2p: int
    s2pp: int
    r1: int
    r2: int
    rc: int
    rp: int
    rf: int
    key: int
    x: np.ndarray
    failed_u: bool
    failed_v: bool

    @property
    def failed(self) -> bool:
        return self.failed_u or self.failed_v


def _separate_info(sys: SystemSpec, aux: AuxSpecSeparate) -> dict[str, float]:
    from .info import cond_mutual_info as I

    ch = channel_joint(sys, aux.p_tx, aux.p_q_given_t)
    src = source_joint(sys, aux.p_v_given_a, aux.p_u_given_v)
    return {
        "I(U;A)": I(src, ["U"], ["A"]),
        "I(V;A|U)": I(src, ["V"], ["A"], ["U"]),
        "I(U;B)": I(src, ["U"], ["B"]),
        "I(V;B|U)": I(src, ["V"], ["B"], ["U"]),
        "I(V;A|UE)": I(src, ["V"], ["A"], ["U", "E"]),
        "I(T;Y)": I(ch, ["T"], ["Y"]),
        "I(T;Y|Q)": I(ch, ["T"], ["Y"], ["Q"]),
        "I(T;Z|Q)": I(ch, ["T"], ["Z"], ["Q"]),
    }


def separate_rates_inside(model: BecBscModel, aux: AuxSpecSeparate, eta: int = 1, margin: float = 0.15) -> dict:
    """Rate tuple meeting the separate scheme's conditions with a relative margin.

    Solves the linear program that maximizes Rk over the scheme's rate
    conditions, with every lower bound scaled by (1 + margin) and every
    upper bound by (1 - margin).
    """
    from scipy.optimize import linprog

    q = _separate_info(system_for(model), aux)
    lo, hi = 1.0 + margin, 1.0 - margin
    names = ["S1", "S2p", "S2pp", "R1", "R2", "Rc", "Rp", "Rf", "Rk"]
    ix = {k: i for i, k in enumerate(names)}

    def row(**coef):
        r = np.zeros(len(names))
        for k, c in coef.items():
            r[ix[k]] = c
        return r

    A, b = [], []

    def le(rhs, **coef):
        A.append(row(**coef))
        b.append(rhs)

    le(-lo * q["I(U;A)"], S1=-1)
    le(-lo * q["I(V;A|U)"], S2pp=-1)
    le(hi * eta * q["I(T;Y)"], Rc=1, Rp=1, Rf=1)
    le(hi * eta * q["I(T;Y|Q)"], Rp=1, Rf=1)
    le(hi * q["I(U;B)"], S1=1, R1=-1)
    le(hi * q["I(V;B|U)"], S2p=1, S2pp=1, R2=-1)
    le(hi * eta * q["I(T;Z|Q)"], Rf=1)
    le(0.0, R1=1, Rc=-1)
    le(0.0, R1=1, S1=-1)
    le(0.0, R2=1, S2p=-1, S2pp=-1)
    le(0.0, Rk=1, S1=-1, S2p=-1, S2pp=-1)
    le(q["I(V;A|UE)"] - eta * q["I(T;Z|Q)"], Rk=1, Rp=-1, Rf=-1, S2p=-1, R2=1)
    A_eq = [row(R1=1, R2=1, Rc=-1, Rp=-1)]
    c = -row(Rk=1)
    res = linprog(c, A_ub=np.array(A), b_ub=np.array(b), A_eq=np.array(A_eq), b_eq=[0.0], bounds=[(0, None)] * len(names))
    if res.status != 0:
        raise ValueError(f"no rate tuple meets the conditions with margin {margin}: {res.message}")
    rates = {k: float(max(res.x[i], 0.0)) + 0.0 for k, i in ix.items()}
    rates["info"] = q
    return rates


def separate_map(r1: int, r2: int, exps: dict[str, int]) -> tuple[int, int]:
    """One-to-one (r1, r2) -> (rc, rp) with r1 a function of rc alone."""
    j = (r1 << exps["R2"]) | r2
    return j >> exps["Rp"], j & ((1 << exps["Rp"]) - 1)


def separate_unmap(rc: int, rp: int, exps: dict[str, int]) -> tuple[int, int]:
    j = (rc << exps["Rp"]) | rp
    return j >> exps["R2"], j & ((1 << exps["R2"]) - 1)


def _separate_tables(sys: SystemSpec, aux: AuxSpecSeparate) -> dict[str, np.ndarray]:
    src = source_joint(sys, aux.p_v_given_a, aux.p_u_given_v)
    ch = channel_joint(sys, aux.p_tx, aux.p_q_given_t)
    return {
        "U": src.marginal(["U"]),
        "UV": src.marginal(["U", "V"]),
        "UA": src.marginal(["U", "A"]),
        "UVA": src.marginal(["U", "V", "A"]),
        "UB": src.marginal(["U", "B"]),
        "UVB": src.marginal(["U", "V", "B"]),
        "Q": ch.marginal(["Q"]),
        "QT": ch.marginal(["Q", "T"]),
        "QTY": ch.marginal(["Q", "T", "Y"]),
        "TX": ch.marginal(["T", "X"]),
    }


def build_separate_codebook(
    cfg: SeparateSimConfig, aux: AuxSpecSeparate, batch: int = 0, rf_margin: float = 0.0
) -> Codebook:
    sys = system_for(cfg.model)
    aux.check(sys)
    info = _separate_info(sys, aux)
    if cfg.Rf > cfg.eta * info["I(T;Z|Q)"] - rf_margin + 1e-12:
        raise ValueError(f"Rf = {cfg.Rf} exceeds (m/n) I(T;Z|Q) = {cfg.eta * info['I(T;Z|Q)']:.6f}")
    n, m = cfg.n, cfg.m
    e = {k: _exp(n, getattr(cfg, k)) for k in ("S1", "S2p", "S2pp", "R1", "R2", "Rc", "Rp", "Rf", "Rk")}
    if e["R1"] + e["R2"] != e["Rc"] + e["Rp"] or e["R1"] > e["Rc"]:
        raise ValueError(f"rounded exponents break the index map: {e}")
    if e["S1"] + e["S2p"] + e["S2pp"] > MAX_CODEBOOK_EXP or e["Rc"] + e["Rp"] + e["Rf"] > MAX_CODEBOOK_EXP:
        raise ValueError(f"codebook exceeds the 2^{MAX_CODEBOOK_EXP} memory bound")
    tables = _separate_tables(sys, aux)
    rng = np.random.default_rng([cfg.seed, _CODEBOOK, batch])
    ns1, nv = 2 ** e["S1"], 2 ** (e["S2p"] + e["S2pp"])
    u = _sample_typical(rng, tables["U"], None, ns1, n, cfg.delta)
    v = np.stack([_sample_typical(rng, tables["UV"], u[i], nv, n, cfg.delta) for i in range(ns1)])
    v = v.reshape(ns1, 2 ** e["S2p"], 2 ** e["S2pp"], n)
    b1 = _equal_bins(rng, e["S1"], e["R1"])
    b2 = np.stack([_equal_bins(rng, e["S2p"] + e["S2pp"], e["R2"]) for _ in range(ns1)])
    b2 = b2.reshape(ns1, 2 ** e["S2p"], 2 ** e["S2pp"])
    q = _sample_typical(rng, tables["Q"], None, 2 ** e["Rc"], m, cfg.delta)
    nt = 2 ** (e["Rp"] + e["Rf"])
    t = np.stack([_sample_typical(rng, tables["QT"], q[i], nt, m, cfg.delta) for i in range(2 ** e["Rc"])])
    t = t.reshape(2 ** e["Rc"], 2 ** e["Rp"], 2 ** e["Rf"], m)
    # the key hashes (s1, s2', s2'') into equal-size bins
    krng = np.random.default_rng([cfg.seed, _KEYHASH, batch])
    key = _equal_bins(krng, e["S1"] + e["S2p"] + e["S2pp"], e["Rk"]).reshape(b2.shape)
    return Codebook(
        scheme="separate",
        n=n,
        m=m,
        delta=cfg.delta,
        seed=cfg.seed,
        exps=e,
        words={"u": u, "v": v, "q": q, "t": t},
        bins={"b1": b1, "b2": b2, "key": key},
        sys=sys,
        aux=aux,
        tables=tables,
    )


def _first(mask: np.ndarray) -> tuple[int, bool]:
    idx = np.flatnonzero(mask)
    return (int(idx[0]), False) if len(idx) else (0, True)


def separate_encode(cb: Codebook, a_seq: np.ndarray, s2p: int, rf: int, rng: np.random.Generator) -> SeparateEncoding:
    """Two-layer source encoding (smallest typical index), index map, channel codeword."""
    a_seq = np.asarray(a_seq)
    if a_seq.shape != (cb.n,):
        raise ValueError(f"a_seq must have length {cb.n}")
    u, v, t = cb.words["u"], cb.words["v"], cb.words["t"]
    s1, fail_u = _first(typical_mask(cb.tables["UA"], [u, a_seq[None, :]], cb.delta))
    row = v[s1, s2p]
    s2pp, fail_v = _first(typical_mask(cb.tables["UVA"], [u[s1][None, :], row, a_seq[None, :]], cb.delta))
    r1 = int(cb.bins["b1"][s1])
    r2 = int(cb.bins["b2"][s1, s2p, s2pp])
    rc, rp = separate_map(r1, r2, cb.exps)
    tx = cb.tables["TX"]
    p_x_t = tx / tx.sum(axis=1, keepdims=True)
    x = _sample_rows(rng, p_x_t[t[rc, rp, rf]])
    key = int(cb.bins["key"][s1, s2p, s2pp])
    return SeparateEncoding(s1, s2p, s2pp, r1, r2, rc, rp, rf, key, x, fail_u, fail_v)


def separate_decode(cb: Codebook, b_seq: np.ndarray, y_seq: np.ndarray) -> tuple[tuple[int, int, int], int]:
    """Channel indices, then s1 within its bin, then (s2', s2'') within its bin."""
    q, t, u, v = cb.words["q"], cb.words["t"], cb.words["u"], cb.words["v"]
    nc, np_, nf, m = t.shape
    Q = np.broadcast_to(q[:, None, None, :], t.shape).reshape(-1, m)
    ok = typical_mask(cb.tables["QTY"], [Q, t.reshape(-1, m), y_seq[None, :]], cb.delta)
    hits = np.flatnonzero(ok)
    if len(hits) != 1:
        raise DecodeError("channel", len(hits))
    rc, rp, _ = np.unravel_index(hits[0], (nc, np_, nf))
    r1, r2 = separate_unmap(int(rc), int(rp), cb.exps)

    in_bin = np.flatnonzero(cb.bins["b1"] == r1)
    ok = typical_mask(cb.tables["UB"], [u[in_bin], b_seq[None, :]], cb.delta)
    if ok.sum() != 1:
        raise DecodeError("source_u", int(ok.sum()))
    s1 = int(in_bin[np.flatnonzero(ok)[0]])

    b2 = cb.bins["b2"][s1]
    pairs = np.argwhere(b2 == r2)
    cand = v[s1][pairs[:, 0], pairs[:, 1]]
    ok = typical_mask(cb.tables["UVB"], [u[s1][None, :], cand, b_seq[None, :]], cb.delta)
    if ok.sum() != 1:
        raise DecodeError("source_v", int(ok.sum()))
    s2p, s2pp = (int(x) for x in pairs[np.flatnonzero(ok)[0]])
    return (s1, s2p, s2pp), int(cb.bins["key"][s1, s2p, s2pp])


def run_separate_experiment(cfg: SeparateSimConfig, aux: AuxSpecSeparate) -> SimReport:
    """Trials of the separate scheme; leakage is the plug-in estimate on (K; E^n, Z^m)."""
    records = []
    leaks, biases = [], []
    exps = None
    for b, trial_ids in _batches(cfg.trials, cfg.batch_size):
        cb = build_separate_codebook(cfg, aux, batch=b)
        exps = cb.exps
        nE = cb.sys.source.table.shape[2]
        nZ = cb.sys.channel.shape[-1]
        keys, stats = [], []
        for tr in trial_ids:
            rng = np.random.default_rng([cfg.seed, _TRIAL, tr])
            a, bb, e = _sample_source(rng, cb.sys.source, cfg.n)
            s2p = int(rng.integers(cb.size("S2p")))
            rf = int(rng.integers(cb.size("Rf")))
            enc = separate_encode(cb, a, s2p, rf, rng)
            y, z = _channel(rng, cb.sys, enc.x, None)
            rec = {"enc_fail": enc.failed, "decoded": True, "agree": False, "stage": None}
            try:
                _, k_hat = separate_decode(cb, bb, y)
                rec["agree"] = k_hat == enc.key
            except DecodeError as err:
                rec["decoded"], rec["stage"] = False, err.stage
            records.append(rec)
            keys.append(enc.key)
            stats.append(_eve_statistic(e, z, nE, nZ))
        mi, bias = plugin_leakage(keys, stats)
        leaks.append((mi / cfg.n, len(trial_ids)))
        biases.append(bias / cfg.n)
    leak = sum(l * w for l, w in leaks) / cfg.trials
    details = {
        "scheme": "separate",
        "codebook_exponents": exps,
        "codebooks": len(leaks),
        "plugin_bias_bits_per_symbol": float(np.mean(biases)),
    }
    return _summarize(records, leak, "plugin", details)
