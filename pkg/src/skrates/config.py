"""JSON configuration documents for simulations and generic systems.

Schema version 1::

    {
      "schema_version": 1,
      "model": {"kind": "binary_state", "a": 0.25, "zeta": 0.1, "beta": 0.2, "epsilon": 0.8},
      "aux": {"family": "prop9"},
      "n": 10,
      "rates": {"margin": 0.15},
      "delta": 0.2, "trials": 500, "seed": 7, "batch_size": 100,
      "acceptance": {"min_agreement": 0.95}
    }

``model.kind`` is ``binary_state`` or ``becbsc``. ``rates`` either lists the
rates explicitly (joint: R1, R2, Rf, Rk and optionally eps_tilde; separate:
S1, S2p, S2pp, R1, R2, Rc, Rp, Rf, Rk) or gives ``margin`` to derive a
tuple inside the scheme's conditions. ``aux`` names a family
(joint: prop9, prop6 with ``v``; separate: prop5 with ``u``, ``v``, ``q``)
or gives the conditional tables as nested lists. Separate configs also
carry ``m``, a multiple of ``n``.

A system document (for the generic evaluators) holds ``source_pmf``
(nested |A| x |B| x |E| list), ``channel`` and optional ``eta`` and
``state_coupled``, or just ``model``.
"""

from __future__ import annotations

import json
import math
from typing import Any, Callable, Optional

import numpy as np

from .info import FinitePMF
from .models import BecBscModel, BinaryStateModel
from .region import AuxSpecJoint, AuxSpecSeparate, SystemSpec, prop5_aux, prop6_aux, prop9_aux
from .scheme_sim import (
    JointSimConfig,
    SeparateSimConfig,
    SimReport,
    joint_rates_inside,
    separate_rates_inside,
    system_for,
)

SCHEMA_VERSION = 1

__all__ = [
    "ConfigError",
    "SCHEMA_VERSION",
    "load_document",
    "parse_model",
    "parse_system",
    "parse_joint",
    "parse_separate",
    "check_acceptance",
]


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def load_document(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError("<document>", f"invalid JSON ({err})") from None
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "top level must be an object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    return doc


def _get(doc: dict, key: str, kind: Callable, prefix: str = "", default: Any = ...) -> Any:
    name = prefix + key
    if key not in doc:
        if default is ...:
            raise ConfigError(name, "missing")
        return default
    val = doc[key]
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(name, f"expected an integer, got {val!r}")
        return val
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            raise ConfigError(name, f"expected a number, got {val!r}")
        return float(val)
    if kind is dict and not isinstance(val, dict):
        raise ConfigError(name, f"expected an object, got {val!r}")
    return val


def _wrap(field: str, fn: Callable, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as err:
        raise ConfigError(field, str(err)) from None


def parse_model(doc: dict):
    m = _get(doc, "model", dict)
    kind = _get(m, "kind", str, "model.")
    if kind == "binary_state":
        args = {k: _get(m, k, float, "model.") for k in ("a", "zeta", "beta", "epsilon")}
        return _wrap("model", BinaryStateModel, **args)
    if kind == "becbsc":
        args = {k: _get(m, k, float, "model.") for k in ("zeta", "beta", "epsilon")}
        return _wrap("model", BecBscModel, **args)
    raise ConfigError("model.kind", f"unknown model {kind!r}")


def _table(d: dict, key: str, prefix: str, required: bool = True) -> Optional[np.ndarray]:
    if key not in d:
        if required:
            raise ConfigError(prefix + key, "missing")
        return None
    try:
        return np.asarray(d[key], dtype=float)
    except (ValueError, TypeError):
        raise ConfigError(prefix + key, "expected a nested list of numbers") from None


def parse_system(doc: dict) -> SystemSpec:
    if "model" in doc:
        return system_for(parse_model(doc))
    src = _table(doc, "source_pmf", "")
    if src.ndim != 3:
        raise ConfigError("source_pmf", "expected an |A| x |B| x |E| table")
    pmf = _wrap("source_pmf", FinitePMF, ("A", "B", "E"), src)
    channel = _table(doc, "channel", "")
    eta = _get(doc, "eta", float, default=1.0)
    coupled = bool(_get(doc, "state_coupled", bool, default=False))
    return _wrap("channel", SystemSpec, pmf, channel, eta, coupled)


def _joint_aux(doc: dict) -> AuxSpecJoint:
    a = _get(doc, "aux", dict)
    fam = a.get("family")
    if fam == "prop9":
        return prop9_aux()
    if fam == "prop6":
        return _wrap("aux.v", prop6_aux, _get(a, "v", float, "aux."))
    if fam is not None:
        raise ConfigError("aux.family", f"unknown joint family {fam!r}")
    return _wrap("aux", AuxSpecJoint, _table(a, "p_vx_given_a", "aux."), _table(a, "p_u_given_v", "aux."))


def _separate_aux(doc: dict) -> AuxSpecSeparate:
    a = _get(doc, "aux", dict)
    fam = a.get("family")
    if fam == "prop5":
        args = [_get(a, k, float, "aux.") for k in ("u", "v", "q")]
        return _wrap("aux", prop5_aux, *args)
    if fam is not None:
        raise ConfigError("aux.family", f"unknown separate family {fam!r}")
    return _wrap(
        "aux",
        AuxSpecSeparate,
        _table(a, "p_tx", "aux."),
        _table(a, "p_v_given_a", "aux."),
        _table(a, "p_u_given_v", "aux."),
        _table(a, "p_q_given_t", "aux.", required=False),
    )


def _common(doc: dict, trials: Optional[int], seed: Optional[int]) -> dict:
    out = {
        "delta": _get(doc, "delta", float, default=0.1),
        "trials": trials if trials is not None else _get(doc, "trials", int, default=100),
        "seed": seed if seed is not None else _get(doc, "seed", int, default=0),
        "batch_size": _get(doc, "batch_size", int, default=100),
    }
    return out


def parse_joint(doc: dict, trials: Optional[int] = None, seed: Optional[int] = None):
    model = parse_model(doc)
    aux = _joint_aux(doc)
    _wrap("aux", aux.check, system_for(model))
    n = _get(doc, "n", int)
    rates = _get(doc, "rates", dict)
    if "margin" in rates:
        margin = _get(rates, "margin", float, "rates.")
        eps = _get(rates, "eps_tilde", float, "rates.", default=0.0)
        r = joint_rates_inside(model, aux, n, margin, eps)
        chosen = {k: r[k] for k in ("R1", "R2", "Rf", "Rk", "eps_tilde")}
    else:
        chosen = {k: _get(rates, k, float, "rates.") for k in ("R1", "R2", "Rf", "Rk")}
        chosen["eps_tilde"] = _get(rates, "eps_tilde", float, "rates.", default=0.0)
    cfg = _wrap("rates", JointSimConfig, n=n, model=model, **chosen, **_common(doc, trials, seed))
    _wrap("rates", cfg.check_key_rate, aux)
    return cfg, aux


SEPARATE_RATES = ("S1", "S2p", "S2pp", "R1", "R2", "Rc", "Rp", "Rf", "Rk")


def parse_separate(doc: dict, trials: Optional[int] = None, seed: Optional[int] = None):
    model = parse_model(doc)
    if not isinstance(model, BecBscModel):
        raise ConfigError("model.kind", "the separate scheme needs sources independent of the channel (becbsc)")
    aux = _separate_aux(doc)
    _wrap("aux", aux.check, system_for(model))
    n = _get(doc, "n", int)
    m = _get(doc, "m", int, default=n)
    rates = _get(doc, "rates", dict)
    if "margin" in rates:
        margin = _get(rates, "margin", float, "rates.")
        if n <= 0 or m % n:
            raise ConfigError("m", "must be a positive multiple of n")
        r = _wrap("rates.margin", separate_rates_inside, model, aux, m // n, margin)
        chosen = {k: r[k] for k in SEPARATE_RATES}
    else:
        chosen = {k: _get(rates, k, float, "rates.") for k in SEPARATE_RATES}
    cfg = _wrap("rates", SeparateSimConfig, n=n, m=m, model=model, **chosen, **_common(doc, trials, seed))
    return cfg, aux


PREDICATES = {
    "min_agreement": lambda r, x: r.agreement_rate >= x,
    "max_decode_error": lambda r, x: r.decode_error_rate <= x,
    "min_decode_error": lambda r, x: r.decode_error_rate >= x,
    "max_encode_failure": lambda r, x: r.encode_failure_rate <= x,
    "max_leakage": lambda r, x: r.leakage_bits_per_symbol <= x,
}


def check_acceptance(doc: dict, report: SimReport) -> dict[str, bool]:
    """Evaluate the optional ``acceptance`` block against a report."""
    acc = _get(doc, "acceptance", dict, default={})
    out = {}
    for key, val in acc.items():
        if key not in PREDICATES:
            raise ConfigError(f"acceptance.{key}", f"unknown predicate (known: {', '.join(PREDICATES)})")
        out[key] = PREDICATES[key](report, _get(acc, key, float, "acceptance."))
    return out
