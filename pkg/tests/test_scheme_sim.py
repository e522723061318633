import itertools
import math

import numpy as np
import pytest

from skrates.info import h2
from skrates.models import BecBscModel, BinaryStateModel
from skrates.region import AuxSpecJoint, AuxSpecSeparate, joint_information, prop5_aux, prop6_aux, prop9_aux
from skrates.scheme_sim import (
    Codebook,
    DecodeError,
    JointSimConfig,
    SeparateSimConfig,
    SimReport,
    build_joint_codebook,
    build_separate_codebook,
    exact_leakage_joint,
    joint_decode,
    joint_encode,
    joint_rates_inside,
    plugin_leakage,
    run_joint_experiment,
    run_separate_experiment,
    separate_encode,
    separate_map,
    separate_rates_inside,
    separate_unmap,
    system_for,
    typical_mask,
    typical_set_nonempty,
)
from skrates.scheme_sim import _channel, _equal_bins, _eve_statistic, _joint_tables, _sample_source, _separate_info

STATE = BinaryStateModel(a=0.25, zeta=0.1, beta=0.2, epsilon=0.8)


def joint_cfg(model, aux, n, margin, **kw):
    r = joint_rates_inside(model, aux, n, margin)
    rates = {k: r[k] for k in ("R1", "R2", "Rf", "Rk", "eps_tilde")}
    return JointSimConfig(n=n, model=model, **{**rates, **kw})


def noisy_copy_aux(flip=0.1):
    """V = A xor N with N ~ B(flip), X = V, U constant."""
    p = np.zeros((2, 2, 2))
    for a, v in itertools.product(range(2), repeat=2):
        p[a, v, v] = 1 - flip if v == a else flip
    return AuxSpecJoint(p, np.ones((2, 1)))


def key_consistent(model, aux, n, R1, R2, Rf, Rk, **kw):
    i_vez = joint_information(system_for(model), aux)["I(V;EZ|U)"]
    return JointSimConfig(n=n, model=model, R1=R1, R2=R2, Rf=Rf, Rk=Rk, eps_tilde=Rk + i_vez - R2 - Rf, **kw)


# ---------------------------------------------------------------- typicality and bins


def test_typical_mask_by_direct_counting(rng):
    p = np.array([[0.3, 0.2], [0.1, 0.4]])
    seqs = rng.integers(0, 2, size=(200, 2, 10))
    mask = typical_mask(p, [seqs[:, 0], seqs[:, 1]], 0.1)
    for k in range(200):
        t = np.zeros((2, 2))
        for a, b in zip(*seqs[k]):
            t[a, b] += 0.1
        assert mask[k] == bool(np.all(np.abs(t - p) <= 0.1 + 1e-12))


def test_typical_mask_forbids_zero_cells():
    p = np.array([0.5, 0.5, 0.0])
    assert not typical_mask(p, [np.array([[0, 1, 2, 0, 1, 0, 1, 0, 1, 0]])], 0.5)[0]


def test_typical_set_nonempty():
    assert typical_set_nonempty(np.array([0.5, 0.5]), 6, 0.1)
    assert not typical_set_nonempty(np.array([0.45, 0.55]), 2, 0.01)


def test_equal_bins_partition(rng):
    labels = _equal_bins(rng, 6, 2)
    assert sorted(np.bincount(labels).tolist()) == [16] * 4
    with pytest.raises(ValueError):
        _equal_bins(rng, 2, 3)


# ---------------------------------------------------------------- joint codebook


def test_joint_codebook_shapes_and_determinism():
    aux = prop6_aux(0.1)
    m = BecBscModel(zeta=0.2, beta=0.1, epsilon=0.1)
    cfg = key_consistent(m, aux, 4, 0.25, 0.25, 0.25, 0.25, delta=0.3, seed=5)
    cb = build_joint_codebook(cfg, aux)
    assert cb.words["u"].shape == (2, 4)
    assert cb.words["v"].shape == (2, 2, 2, 4)
    again = build_joint_codebook(cfg, aux)
    for k in ("u", "v"):
        assert np.array_equal(cb.words[k], again.words[k])
    assert np.array_equal(cb.bins["key"], again.bins["key"])
    for row in cb.bins["key"]:
        assert sorted(np.bincount(row.ravel()).tolist()) == [2] * 2


def test_joint_codewords_typical():
    aux = prop6_aux(0.1)
    m = BecBscModel(zeta=0.2, beta=0.1, epsilon=0.1)
    cfg = key_consistent(m, aux, 6, 0.5, 0.0, 0.0, 0.0, delta=0.1, seed=1)
    cb = build_joint_codebook(cfg, aux)
    assert cb.words["u"].shape == (8, 6)
    for w in cb.words["u"]:
        assert abs(np.mean(w == 1) - 0.5) <= 0.1


def test_joint_memory_bound():
    m = BinaryStateModel(a=0.5, zeta=0.0, beta=0.0, epsilon=1.0)
    cfg = key_consistent(m, prop9_aux(), 10, 0.0, 1.5, 0.6, 0.0)
    with pytest.raises(ValueError, match="memory"):
        build_joint_codebook(cfg, prop9_aux())


def test_joint_key_rate_checked():
    cfg = JointSimConfig(n=10, model=STATE, R1=0, R2=0.5, Rf=0.1, Rk=0.5)
    with pytest.raises(ValueError):
        cfg.check_key_rate(prop9_aux())


def test_joint_degenerate_aux_never_fails(rng):
    m = BecBscModel(zeta=0.1, beta=0.2, epsilon=0.1)
    aux = AuxSpecJoint(np.full((2, 1, 2), 0.5), np.ones((1, 1)))
    cfg = key_consistent(m, aux, 6, 0.0, 0.0, 0.0, 0.0, delta=1.0)
    cb = build_joint_codebook(cfg, aux)
    for _ in range(20):
        enc = joint_encode(cb, rng.integers(0, 2, 6), 0, rng)
        assert not enc.failed and (enc.r1, enc.r2) == (0, 0)


def test_joint_noiseless_round_trip(rng):
    # Bob sees A and Y = V xor A exactly, so V is recovered whenever codewords are distinct
    m = BinaryStateModel(a=0.5, zeta=0.0, beta=0.0, epsilon=1.0)
    aux = prop9_aux()
    cfg = key_consistent(m, aux, 10, 0.0, 0.2, 0.1, 0.3, delta=1.0, seed=2)
    cb = build_joint_codebook(cfg, aux)
    words = cb.words["v"].reshape(-1, 10)
    assert len({w.tobytes() for w in words}) == len(words)
    sys = cb.sys
    for _ in range(50):
        a, b, _ = _sample_source(rng, sys.source, 10)
        enc = joint_encode(cb, a, int(rng.integers(cb.size("Rf"))), rng)
        y, _ = _channel(rng, sys, enc.x, a)
        idx, k_hat = joint_decode(cb, b, y)
        assert not enc.failed and k_hat == enc.key and idx == (enc.r1, enc.r2, enc.rf)


def test_joint_covering_violation_fails_often():
    aux = noisy_copy_aux()
    i_va = joint_information(system_for(BinaryStateModel(a=0.5, zeta=0.1, beta=0.2, epsilon=0.8)), aux)["I(V;A|U)"]
    m = BinaryStateModel(a=0.5, zeta=0.1, beta=0.2, epsilon=0.8)
    cfg = key_consistent(m, aux, 10, 0.0, 0.4, 0.1, 0.0, trials=500, seed=4)
    assert math.ceil(10 * cfg.R2) <= 10 * 0.85 * i_va  # codebook exponent 15% below the covering rate
    rep = run_joint_experiment(cfg, aux)
    assert rep.encode_failure_rate >= 0.3


def test_joint_covering_above_threshold_rarely_fails():
    m = BinaryStateModel(a=0.5, zeta=0.1, beta=0.2, epsilon=0.8)
    aux = noisy_copy_aux()
    q = joint_information(system_for(m), aux)
    R2 = 1.15 * q["I(V;A|U)"]
    cfg = key_consistent(m, aux, 10, 0.0, R2, 0.1, R2 + 0.1 - q["I(V;EZ|U)"], trials=500, seed=4, delta=0.2)
    rep = run_joint_experiment(cfg, aux)
    assert rep.encode_failure_rate <= 0.2


def test_joint_packing_violation_breaks_decoding():
    cfg = joint_cfg(STATE, prop9_aux(), 10, -0.15, delta=0.2, trials=500, seed=7)
    assert run_joint_experiment(cfg, prop9_aux()).decode_error_rate >= 0.5


def test_joint_inside_packing_decodes():
    # at n = 10 the 15% margin leaves about 1.5 bits of packing slack; see the notes
    cfg = joint_cfg(STATE, prop9_aux(), 10, 0.15, delta=0.2, trials=500, seed=7)
    assert run_joint_experiment(cfg, prop9_aux()).decode_error_rate <= 0.2


def test_decode_error_monotone_in_margin():
    rates = []
    for margin in (0.15, 0.3, 0.45):
        cfg = joint_cfg(STATE, prop9_aux(), 10, margin, delta=0.2, trials=500, seed=7)
        rates.append(run_joint_experiment(cfg, prop9_aux()).decode_error_rate)
    for lo, hi in zip(rates, rates[1:]):
        sigma = math.sqrt(max(lo * (1 - lo), 1e-3) / 500)
        assert hi <= lo + 3 * sigma


# ---------------------------------------------------------------- leakage


def test_zero_key_rate_has_zero_leakage_and_full_agreement():
    m = BinaryStateModel(a=0.5, zeta=0.0, beta=0.0, epsilon=1.0)
    cfg = key_consistent(m, prop9_aux(), 6, 0.0, 0.34, 0.0, 0.0, delta=1.0, trials=100, seed=3)
    rep = run_joint_experiment(cfg, prop9_aux())
    assert rep.leakage_method == "exact"
    assert rep.leakage_bits_per_symbol == pytest.approx(0.0, abs=1e-12)
    assert rep.details["agreement_given_decoded"] == 1.0


def test_fully_leaked_key():
    # V = A exactly, every source word in the codebook, key = first source symbol, Eve sees A
    n = 3
    m = BinaryStateModel(a=0.5, zeta=0.2, beta=0.3, epsilon=0.0)
    p = np.zeros((2, 2, 2))
    p[0, 0, :] = p[1, 1, :] = 0.5
    aux = AuxSpecJoint(p, np.ones((2, 1)))
    sys = system_for(m)
    words = np.array(list(itertools.product(range(2), repeat=n)))
    cb = Codebook(
        scheme="joint",
        n=n,
        m=n,
        delta=1.0,
        seed=0,
        exps={"R1": 0, "R2": n, "Rf": 0, "Rk": 1},
        words={"u": np.zeros((1, n), dtype=int), "v": words.reshape(1, 2**n, 1, n)},
        bins={"key": words[:, 0].reshape(1, 2**n, 1)},
        sys=sys,
        aux=aux,
        tables=_joint_tables(sys, aux),
    )
    assert exact_leakage_joint(cb) == pytest.approx(h2(0.5) / n, abs=1e-12)


def test_exact_leakage_budget():
    cfg = joint_cfg(STATE, prop9_aux(), 10, 0.15, delta=0.2)
    with pytest.raises(ValueError, match="plug-in"):
        exact_leakage_joint(build_joint_codebook(cfg, prop9_aux()))


def test_exact_leakage_normalized_and_bounded():
    for n in (4, 5):
        cfg = joint_cfg(STATE, prop9_aux(), n, 0.15, delta=0.2, seed=1)
        cb = build_joint_codebook(cfg, prop9_aux())
        leak = exact_leakage_joint(cb)  # raises if p(k, e, z) is off by more than 1e-9
        assert 0.0 <= leak <= cb.exps["Rk"] / n + 1e-12


def test_plugin_matches_exact_at_n4():
    cfg = joint_cfg(STATE, prop9_aux(), 4, 0.15, delta=0.2, seed=7)
    cb = build_joint_codebook(cfg, prop9_aux())
    exact = exact_leakage_joint(cb)
    rng = np.random.default_rng(11)
    keys, stats = [], []
    for _ in range(20000):
        a, _, e = _sample_source(rng, cb.sys.source, 4)
        enc = joint_encode(cb, a, int(rng.integers(cb.size("Rf"))), rng)
        _, z = _channel(rng, cb.sys, enc.x, a)
        keys.append(enc.key)
        stats.append(_eve_statistic(e, z, 3, 2))
    mi, _ = plugin_leakage(keys, stats)
    assert mi / 4 == pytest.approx(exact, abs=0.05)


def test_plugin_independent_and_copy():
    rng = np.random.default_rng(0)
    k = rng.integers(0, 4, 5000).tolist()
    s = [(x,) for x in rng.integers(0, 4, 5000)]
    assert plugin_leakage(k, s)[0] < 0.01
    assert plugin_leakage(k, [(x,) for x in k])[0] == pytest.approx(2.0, abs=0.01)


# ---------------------------------------------------------------- reports


def test_joint_report_deterministic():
    cfg = joint_cfg(STATE, prop9_aux(), 10, 0.15, delta=0.2, trials=150, batch_size=50, seed=9)
    assert run_joint_experiment(cfg, prop9_aux()).to_json() == run_joint_experiment(cfg, prop9_aux()).to_json()


def test_report_validation():
    with pytest.raises(ValueError):
        SimReport(1.2, 0, 0, 0, "exact", 1)
    with pytest.raises(ValueError):
        SimReport(0.5, 0, 0, -0.1, "exact", 1)


# ---------------------------------------------------------------- separate scheme

SEP_MODEL = BecBscModel(zeta=0.01, beta=0.1, epsilon=0.2)
CONST_U = AuxSpecSeparate(np.eye(2) / 2, np.eye(2), np.ones((2, 1)))


def sep_cfg(**kw):
    base = dict(n=4, m=4, S1=0.25, S2p=0.25, S2pp=0.25, R1=0.25, R2=0.25, Rc=0.25, Rp=0.25, Rf=0.25, Rk=0.25)
    base.update(kw)
    return SeparateSimConfig(model=kw.pop("model", BecBscModel(zeta=0.01, beta=0.1, epsilon=0.1)), **{k: v for k, v in base.items() if k != "model"})


def test_separate_codebook_shapes():
    aux = prop5_aux(0.1, 0.1, 0.3)
    cfg = sep_cfg(delta=0.2, seed=3)
    cb = build_separate_codebook(cfg, aux)
    assert cb.words["u"].shape == (2, 4)
    assert cb.words["v"].shape == (2, 2, 2, 4)
    assert cb.words["q"].shape == (2, 4)
    assert cb.words["t"].shape == (2, 2, 2, 4)
    assert sorted(np.bincount(cb.bins["b1"]).tolist()) == [1, 1]
    for row in cb.bins["b2"]:
        assert sorted(np.bincount(row.ravel()).tolist()) == [2, 2]
    again = build_separate_codebook(cfg, aux)
    for k in cb.words:
        assert np.array_equal(cb.words[k], again.words[k])


def test_separate_config_validation():
    with pytest.raises(ValueError, match="R1 \\+ R2"):
        sep_cfg(Rc=0.5)
    with pytest.raises(ValueError, match="R1 <= Rc"):
        sep_cfg(R1=0.5, R2=0.0, Rc=0.25, Rp=0.25, S1=0.5)
    with pytest.raises(ValueError, match="integer"):
        sep_cfg(m=6)


def test_separate_fictitious_rate_checked():
    with pytest.raises(ValueError, match="Rf"):
        build_separate_codebook(sep_cfg(Rf=0.25), prop5_aux(0.1, 0.1, 0.0))


def test_index_map_round_trip():
    exps = {"R1": 1, "R2": 3, "Rc": 2, "Rp": 2}
    seen = set()
    for r1, r2 in itertools.product(range(2), range(8)):
        rc, rp = separate_map(r1, r2, exps)
        assert separate_unmap(rc, rp, exps) == (r1, r2)
        assert rc < 4 and rp < 4
        seen.add((rc, rp))
    assert len(seen) == 16
    # r1 depends on rc alone
    owner = {}
    for r1, r2 in itertools.product(range(2), range(8)):
        rc, _ = separate_map(r1, r2, exps)
        assert owner.setdefault(rc, r1) == r1


def test_separate_constant_u_found(rng):
    cfg = sep_cfg(S1=0, R1=0, R2=0.5, Rc=0, Rp=0.5, delta=1.0)
    cb = build_separate_codebook(cfg, CONST_U)
    enc = separate_encode(cb, rng.integers(0, 2, 4), 0, 0, rng)
    assert enc.s1 == 0 and not enc.failed_u


def test_separate_tie_break_smallest(rng):
    aux = prop5_aux(0.1, 0.0, 0.3)
    cfg = sep_cfg(S1=0.5, R1=0.25, R2=0.25, delta=0.3, seed=1)
    cb = build_separate_codebook(cfg, aux)
    a = np.array([0, 1, 1, 0])
    pool = np.array(list(itertools.product(range(2), repeat=4)))
    ok = typical_mask(cb.tables["UA"], [pool, a[None, :]], cb.delta)
    good, bad = pool[ok][0], pool[~ok][0]
    cb.words["u"][:] = [bad, good, good, bad]
    assert separate_encode(cb, a, 0, 0, rng).s1 == 1


def test_separate_covering_violation():
    aux = prop5_aux(0.1, 0.0, 0.5)
    q = _separate_info(system_for(SEP_MODEL), aux)
    cfg = SeparateSimConfig(
        n=10, m=10, S1=0.85 * q["I(U;A)"], S2p=0, S2pp=1.15 * q["I(V;A|U)"], R1=0, R2=0.2, Rc=0, Rp=0.2,
        Rf=0, Rk=0.1, model=SEP_MODEL, delta=0.2, trials=500, seed=1,
    )
    assert run_separate_experiment(cfg, aux).encode_failure_rate >= 0.3


def test_separate_binning_violation():
    aux = prop5_aux(0.1, 0.0, 0.5)
    q = _separate_info(system_for(SEP_MODEL), aux)
    S1 = 1.15 * q["I(U;A)"]
    R1 = S1 - 1.15 * q["I(U;B)"]
    cfg = SeparateSimConfig(
        n=10, m=10, S1=S1, S2p=0, S2pp=1.15 * q["I(V;A|U)"], R1=R1, R2=0.2, Rc=R1, Rp=0.2,
        Rf=0, Rk=0.1, model=SEP_MODEL, delta=0.2, trials=500, seed=1,
    )
    rep = run_separate_experiment(cfg, aux)
    stages = rep.details["decode_errors_by_stage"]
    assert (stages.get("source_u", 0) + stages.get("source_v", 0)) / rep.trials_run >= 0.5


def test_separate_noiseless_channel_stage():
    cfg = SeparateSimConfig(
        n=10, m=10, S1=0, S2p=0, S2pp=1.0, R1=0, R2=0.2, Rc=0.1, Rp=0.1, Rf=0.1, Rk=0.1,
        model=SEP_MODEL, delta=0.3, trials=500, seed=2,
    )
    rep = run_separate_experiment(cfg, CONST_U)
    assert "channel" not in rep.details["decode_errors_by_stage"]


def test_separate_rates_inside_meet_conditions():
    r = separate_rates_inside(SEP_MODEL, CONST_U, 1, 0.15)
    q = r["info"]
    assert r["S2pp"] >= 1.15 * q["I(V;A|U)"] - 1e-9
    assert r["Rc"] + r["Rp"] + r["Rf"] <= 0.85 * q["I(T;Y)"] + 1e-9
    assert r["R1"] + r["R2"] == pytest.approx(r["Rc"] + r["Rp"], abs=1e-9)


def test_separate_rates_inside_infeasible_margin():
    with pytest.raises(ValueError):
        separate_rates_inside(BecBscModel(zeta=0.01, beta=0.05, epsilon=0.05), prop5_aux(0.5, 0.0, 0.0), 1, 0.15)


def test_separate_inside_region_agreement():
    # best configuration found at n = 10; packing slack is about a bit per stage, see the notes
    r = separate_rates_inside(SEP_MODEL, CONST_U, 1, 0.15)
    rates = {k: v for k, v in r.items() if k != "info"}
    cfg = SeparateSimConfig(n=10, m=10, model=SEP_MODEL, delta=0.3, trials=500, seed=3, **rates)
    assert run_separate_experiment(cfg, CONST_U).agreement_rate >= 0.95


def test_separate_leakage_contrast():
    r = separate_rates_inside(SEP_MODEL, CONST_U, 1, 0.15)
    rates = {k: v for k, v in r.items() if k != "info"}
    common = dict(n=10, m=10, model=SEP_MODEL, delta=0.3, trials=2000, batch_size=2000, seed=5)
    inside = run_separate_experiment(SeparateSimConfig(**common, **rates), CONST_U)
    leaky = dict(rates, Rk=rates["S1"] + rates["S2p"] + rates["S2pp"])
    outside = run_separate_experiment(SeparateSimConfig(**common, **leaky), CONST_U)
    assert outside.leakage_method == inside.leakage_method == "plugin"
    assert outside.leakage_bits_per_symbol >= 5 * inside.leakage_bits_per_symbol


def test_separate_report_deterministic():
    cfg = sep_cfg(n=10, m=10, S1=0, R1=0, R2=0.5, Rc=0, Rp=0.5, Rf=0.1, delta=0.3, trials=100, seed=4)
    aux = CONST_U
    assert run_separate_experiment(cfg, aux).to_json() == run_separate_experiment(cfg, aux).to_json()
