"""Problem configs: JSON schema, builders, shipped builtins and random valid instances."""
from __future__ import annotations

import copy
import json
import math
from typing import Any

import jsonschema
import numpy as np

from .calculus import EigenFamily
from .chaos import ChaosExpansion, hermite_fns
from .errors import ConfigError
from .evolution import CauchyProblem, ForcingTerm
from .multiindex import MultiIndex, Truncation, weight
from .operators import (CoordinatewiseFamily, LinearOp, TimeDependentOp, WickFamily, log_norm,
                        op_from_literal)
from .stationary import StationaryProblem, ou_polynomial_eigs, validate

__all__ = [
    "BUILTINS",
    "builtin_config",
    "load_config",
    "validate_config",
    "build",
    "build_evolution",
    "build_stationary",
    "random_evolution",
    "random_stationary",
]

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_ALPHA = {"type": "string", "pattern": r"^\[\s*(\d+\s*(,\s*\d+\s*)*)?\]$"}
_OP = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["dense", "diag", "scalar", "laplacian1d_periodic", "shift1d_periodic"]},
        "data": {"type": "array"},
        "value": _NUM,
        "d": {"type": "integer", "minimum": 1},
        "h": _POS,
        "scale": _NUM,
    },
    "additionalProperties": False,
}
_BUMP = {
    "type": "object",
    "required": ["kind"],
    "properties": {"kind": {"const": "bump"}, "center": _NUM, "width": _POS, "amplitude": _NUM},
    "additionalProperties": False,
}
_VALUE = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 1}, _BUMP]}
_PROFILE = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["constant", "sin", "cos", "exp", "hermite"]},
        "rate": _NUM,
        "k": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}
_TRUNC = {
    "type": "object",
    "required": ["n", "m"],
    "properties": {"n": {"type": "integer", "minimum": 0}, "m": {"type": "integer", "minimum": 1}},
    "additionalProperties": False,
}
_TERM = {
    "type": "object",
    "required": ["alpha", "value"],
    "properties": {"alpha": _ALPHA, "value": _VALUE, "profile": _PROFILE},
    "additionalProperties": False,
}
_WICK = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["alpha", "op"],
        "properties": {"alpha": _ALPHA, "op": _OP, "profile": _PROFILE},
        "additionalProperties": False,
    },
}
_COMMON = {
    "type": {"enum": ["evolution", "stationary"]},
    "name": {"type": "string"},
    "dim": {"type": "integer", "minimum": 1},
    "truncation": _TRUNC,
    "p": _POS,
    "space": {"type": "object", "required": ["length"], "properties": {"length": _POS},
              "additionalProperties": False},
    "B": _WICK,
    "F": {"type": "array", "items": _TERM},
    "output_stride": {"type": "integer", "minimum": 1},
}
EVOLUTION_SCHEMA = {
    "type": "object",
    "properties": dict(_COMMON, **{
        "type": {"const": "evolution"},
        "T": _POS,
        "n_steps": {"type": "integer", "minimum": 2},
        "M": _POS,
        "w": {"oneOf": [_NUM, {"const": "auto"}]},
        "A": {
            "type": "object",
            "properties": {
                "op": _OP,
                "level_coeff": _NUM,
                "overrides": {"type": "array", "items": {
                    "type": "object", "required": ["alpha", "op"],
                    "properties": {"alpha": _ALPHA, "op": _OP}, "additionalProperties": False}},
            },
            "additionalProperties": False,
        },
        "noise": {"type": "array", "items": {
            "type": "object",
            "required": ["kind", "modes"],
            "properties": {
                "kind": {"enum": ["white_noise_space", "white_noise_time"]},
                "modes": {"type": "integer", "minimum": 1},
                "scale": _NUM,
                "value": _VALUE,
                "compose": _OP,
            },
            "additionalProperties": False,
        }},
        "U0": {"type": "array", "items": {"oneOf": [
            {"type": "object", "required": ["alpha", "value"],
             "properties": {"alpha": _ALPHA, "value": _VALUE}, "additionalProperties": False},
            {"type": "object", "required": ["weighted"],
             "properties": {"weighted": {"type": "object", "required": ["q", "value"],
                                         "properties": {"q": _NUM, "value": _VALUE},
                                         "additionalProperties": False}},
             "additionalProperties": False},
        ]}},
        "random": {"type": "object", "required": ["seed"],
                   "properties": {"seed": {"type": "integer", "minimum": 0}, "time_dependent": {"type": "boolean"}},
                   "additionalProperties": False},
    }),
    "required": ["type"],
    "anyOf": [{"required": ["random"]}, {"required": ["dim", "truncation", "p", "T"]}],
    "additionalProperties": False,
}
STATIONARY_SCHEMA = {
    "type": "object",
    "properties": dict(_COMMON, **{
        "type": {"const": "stationary"},
        "K": _POS,
        "Atilde": {"type": "object", "properties": {"op": _OP}, "additionalProperties": False},
        "r": {"oneOf": [
            {"type": "object", "required": ["c", "poly"],
             "properties": {"c": _NUM, "poly": {"type": "array", "items": _NUM, "minItems": 1}},
             "additionalProperties": False},
            {"type": "object", "required": ["values"],
             "properties": {"values": {"type": "array", "items": {
                 "type": "object", "required": ["alpha", "value"],
                 "properties": {"alpha": _ALPHA, "value": _NUM}, "additionalProperties": False}},
                 "default": _NUM},
             "additionalProperties": False},
        ]},
        "random": {"type": "object", "required": ["seed"],
                   "properties": {"seed": {"type": "integer", "minimum": 0}}, "additionalProperties": False},
    }),
    "required": ["type"],
    "anyOf": [{"required": ["random"]}, {"required": ["dim", "truncation", "p", "r"]}],
    "additionalProperties": False,
}


def _check_finite(node, path="config"):
    if isinstance(node, float) and not math.isfinite(node):
        raise ConfigError(f"{path} is not finite")
    if isinstance(node, dict):
        for k, v in node.items():
            _check_finite(v, f"{path}.{k}")
    elif isinstance(node, list):
        for i, v in enumerate(node):
            _check_finite(v, f"{path}[{i}]")


def validate_config(cfg: Any) -> dict:
    """Schema-check a parsed config; raises :class:`ConfigError` with the first violation."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    kind = cfg.get("type")
    schema = {"evolution": EVOLUTION_SCHEMA, "stationary": STATIONARY_SCHEMA}.get(kind)
    if schema is None:
        raise ConfigError(f"config type must be 'evolution' or 'stationary', got {kind!r}")
    try:
        jsonschema.validate(cfg, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    _check_finite(cfg)
    return cfg


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return validate_config(cfg)


# -- builders ---------------------------------------------------------------

def _x_grid(cfg: dict, d: int) -> np.ndarray:
    length = cfg.get("space", {}).get("length", float(d))
    return -0.5 * length + length * np.arange(d) / d


def _vector(value, cfg: dict, d: int) -> np.ndarray:
    if isinstance(value, (int, float)):
        return np.full(d, float(value))
    if isinstance(value, dict):
        x = _x_grid(cfg, d)
        c, wdt, amp = value.get("center", 0.0), value.get("width", 1.0), value.get("amplitude", 1.0)
        return amp * np.exp(-0.5 * ((x - c) / wdt) ** 2)
    vec = np.asarray(value, dtype=float)
    if vec.shape != (d,):
        raise ConfigError(f"vector of length {vec.size} given for dimension {d}")
    return vec


def _alpha(text: str, t: Truncation) -> MultiIndex:
    a = MultiIndex.parse(text)
    if a not in t:
        raise ConfigError(f"index {text} lies outside truncation I({t.n},{t.m})")
    return a


def _profile_fns(prof: dict | None):
    """``(g, g')`` vectorized over time for a scalar time profile, or ``None`` for constants."""
    if prof is None or prof["kind"] == "constant":
        return None
    kind = prof["kind"]
    rate = float(prof.get("rate", 1.0))
    if kind == "sin":
        return (lambda t: np.sin(rate * np.asarray(t)), lambda t: rate * np.cos(rate * np.asarray(t)))
    if kind == "cos":
        return (lambda t: np.cos(rate * np.asarray(t)), lambda t: -rate * np.sin(rate * np.asarray(t)))
    if kind == "exp":
        return (lambda t: np.exp(rate * np.asarray(t)), lambda t: rate * np.exp(rate * np.asarray(t)))
    k = prof.get("k")
    if k is None:
        raise ConfigError("hermite profile needs a mode k")
    return "hermite", k


def _forcing(vec: np.ndarray, prof: dict | None) -> ForcingTerm:
    fns = _profile_fns(prof)
    if fns is None:
        return ForcingTerm.constant(vec)
    if fns[0] == "hermite":
        return ForcingTerm.hermite(vec, fns[1])
    return ForcingTerm.profile(vec, fns[0], fns[1], vectorized=True)


def _op(lit: dict, d: int) -> LinearOp:
    return op_from_literal(lit, dim=d)


def _add_op(store: dict, alpha: MultiIndex, op):
    if alpha in store:
        if isinstance(op, TimeDependentOp) or isinstance(store[alpha], TimeDependentOp):
            raise ConfigError(f"time-dependent Wick member at {alpha} cannot be combined with another")
        store[alpha] = store[alpha] + op
    else:
        store[alpha] = op


def _wick_family(cfg: dict, d: int, t: Truncation) -> WickFamily:
    ops: dict = {}
    for entry in cfg.get("B", []):
        alpha = MultiIndex.parse(entry["alpha"])
        op = _op(entry["op"], d)
        fns = _profile_fns(entry.get("profile"))
        if fns is not None:
            if alpha.is_zero():
                raise ConfigError("B_0 must not depend on time")
            if fns[0] == "hermite":
                raise ConfigError("hermite profiles are only available for forcing terms")
            g, dg = fns
            op = TimeDependentOp.scaled(op, lambda s, g=g: float(g(s)), lambda s, dg=dg: float(dg(s)))
        _add_op(ops, alpha, op)
    for noise in cfg.get("noise", []):
        if noise["kind"] != "white_noise_space":
            continue
        x = _x_grid(cfg, d)
        xi = hermite_fns(noise["modes"], x)
        scale = float(noise.get("scale", 1.0))
        compose = _op(noise["compose"], d) if "compose" in noise else None
        for k in range(1, noise["modes"] + 1):
            op = LinearOp.diag(scale * xi[k - 1])
            if compose is not None:
                op = op @ compose
            _add_op(ops, MultiIndex.unit(k), op)
    return WickFamily(ops, dim=d)


def _truncation(cfg: dict, override: Truncation | None) -> Truncation:
    if override is not None:
        return override
    return Truncation(cfg["truncation"]["n"], cfg["truncation"]["m"])


def build_evolution(cfg: dict, truncation: Truncation | None = None) -> CauchyProblem:
    """Build a :class:`CauchyProblem` from a validated evolution config."""
    try:
        if "random" in cfg:
            kw = {k: cfg[k] for k in ("dim", "p", "T", "n_steps") if k in cfg}
            if "dim" in kw:
                kw["d"] = kw.pop("dim")
            t = truncation or (Truncation(cfg["truncation"]["n"], cfg["truncation"]["m"]) if "truncation" in cfg
                               else None)
            if t is not None:
                kw["truncation"] = t
            return random_evolution(cfg["random"]["seed"], time_dependent=cfg["random"].get("time_dependent", False),
                                    **kw)
        d = cfg["dim"]
        t = _truncation(cfg, truncation)
        acfg = cfg.get("A", {})
        base = _op(acfg["op"], d) if "op" in acfg else LinearOp.zeros(d)
        level = float(acfg.get("level_coeff", 0.0))
        overrides = {MultiIndex.parse(o["alpha"]): _op(o["op"], d) for o in acfg.get("overrides", [])}
        if level == 0 and not overrides:
            A = CoordinatewiseFamily.simple(base, truncation=t)
        else:
            A = CoordinatewiseFamily.from_function(
                lambda a: overrides.get(a, base + LinearOp.scalar(level * len(a), d)), truncation=t)
        B = _wick_family(cfg, d, t)
        u0: dict = {}
        for entry in cfg.get("U0", []):
            if "weighted" in entry:
                vec = _vector(entry["weighted"]["value"], cfg, d)
                q = float(entry["weighted"]["q"])
                for a in t:
                    u0[a] = u0.get(a, 0.0) + weight(a, q) * vec
            else:
                a = _alpha(entry["alpha"], t)
                u0[a] = u0.get(a, 0.0) + _vector(entry["value"], cfg, d)
        F: dict = {}
        for entry in cfg.get("F", []):
            a = _alpha(entry["alpha"], t)
            if a in F:
                raise ConfigError(f"duplicate forcing entry at {entry['alpha']}")
            F[a] = _forcing(_vector(entry["value"], cfg, d), entry.get("profile"))
        for noise in cfg.get("noise", []):
            if noise["kind"] != "white_noise_time":
                continue
            vec = float(noise.get("scale", 1.0)) * _vector(noise.get("value", 1.0), cfg, d)
            for k in range(1, noise["modes"] + 1):
                a = MultiIndex.unit(k)
                if a not in t:
                    continue
                if a in F:
                    raise ConfigError(f"forcing at {a} is given twice")
                F[a] = ForcingTerm.hermite(vec, k)
        w = cfg.get("w", "auto")
        if w == "auto":
            w = max(0.0, max(log_norm(A[a]) for a in t))
        return CauchyProblem(A, B, ChaosExpansion(u0, kind="vector", dim=d), F, T=float(cfg["T"]),
                             p=float(cfg["p"]), truncation=t, n_steps=int(cfg.get("n_steps", 256)),
                             M=float(cfg.get("M", 1.0)), w=float(w), name=cfg.get("name", ""))
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot build evolution problem: {exc}") from exc


def build_stationary(cfg: dict, truncation: Truncation | None = None) -> StationaryProblem:
    """Build a :class:`StationaryProblem` from a validated stationary config."""
    try:
        if "random" in cfg:
            kw = {}
            if "dim" in cfg:
                kw["d"] = cfg["dim"]
            if "p" in cfg:
                kw["p"] = cfg["p"]
            t = truncation or (Truncation(cfg["truncation"]["n"], cfg["truncation"]["m"]) if "truncation" in cfg
                               else None)
            if t is not None:
                kw["truncation"] = t
            return random_stationary(cfg["random"]["seed"], **kw)
        d = cfg["dim"]
        t = _truncation(cfg, truncation)
        acfg = cfg.get("Atilde", {})
        Atilde = CoordinatewiseFamily.simple(_op(acfg["op"], d) if "op" in acfg else LinearOp.zeros(d), truncation=t)
        rcfg = cfg["r"]
        if "poly" in rcfg:
            r = ou_polynomial_eigs(float(rcfg["c"]), rcfg["poly"], t)
        else:
            vals = {MultiIndex.parse(v["alpha"]): float(v["value"]) for v in rcfg["values"]}
            default = float(rcfg.get("default", 0.0))
            r = EigenFamily(lambda a: vals.get(a, default), t)
        B = _wick_family(cfg, d, t)
        F = {}
        for entry in cfg.get("F", []):
            if "profile" in entry:
                raise ConfigError("stationary forcing terms take no time profile")
            a = _alpha(entry["alpha"], t)
            F[a] = F.get(a, 0.0) + _vector(entry["value"], cfg, d)
        return StationaryProblem(Atilde, r, B, ChaosExpansion(F, kind="vector", dim=d), p=float(cfg["p"]),
                                 truncation=t, K=cfg.get("K"), name=cfg.get("name", ""))
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot build stationary problem: {exc}") from exc


def build(cfg: dict, truncation: Truncation | None = None):
    cfg = validate_config(cfg)
    if cfg["type"] == "evolution":
        return build_evolution(cfg, truncation)
    return build_stationary(cfg, truncation)


# -- random valid instances ------------------------------------------------

def random_evolution(seed: int, d: int = 4, truncation: Truncation = Truncation(3, 4), T: float = 1.0,
                     n_steps: int = 128, p: float = 2.0, time_dependent: bool = False) -> CauchyProblem:
    """A random Cauchy problem with a rigorous declared bound ``M = 1``, ``w = max(0, log-norms)``.

    Generators are damped per level, Wick members sit on first-order
    indices (plus one second-order entry), ``U0`` has levels 0 and 1 and
    the forcing acts on ``0`` and ``eps_2``.
    """
    rng = np.random.default_rng(seed)
    t = truncation
    A_ops = {a: LinearOp(-(1.0 + 0.5 * len(a)) * np.eye(d) + 0.3 * rng.normal(size=(d, d))) for a in t}
    A = CoordinatewiseFamily(A_ops, truncation=t)
    ops: dict = {MultiIndex.zero(): LinearOp(0.2 * rng.normal(size=(d, d)))}
    for k in range(1, t.m + 1):
        mat = LinearOp(0.5 / k * rng.normal(size=(d, d)))
        if time_dependent and k == 1:
            rate = float(rng.uniform(0.5, 2.0))
            ops[MultiIndex.unit(k)] = TimeDependentOp.scaled(mat, lambda s, r=rate: math.cos(r * s),
                                                             lambda s, r=rate: -r * math.sin(r * s))
        else:
            ops[MultiIndex.unit(k)] = mat
    if t.n >= 2:
        ops[MultiIndex.unit(1, 2)] = LinearOp(0.1 * rng.normal(size=(d, d)))
    B = WickFamily(ops, dim=d)
    U0 = ChaosExpansion({a: 0.5 ** len(a) * rng.normal(size=d) for a in t if len(a) <= 1}, kind="vector", dim=d)
    omega = float(rng.uniform(0.5, 3.0))
    F = {MultiIndex.zero(): ForcingTerm.profile(rng.normal(size=d), lambda s: np.sin(omega * np.asarray(s)),
                                                lambda s: omega * np.cos(omega * np.asarray(s)), vectorized=True)}
    if MultiIndex.unit(2) in t:
        F[MultiIndex.unit(2)] = ForcingTerm.profile(rng.normal(size=d), lambda s: np.exp(-np.asarray(s)),
                                                    lambda s: -np.exp(-np.asarray(s)), vectorized=True)
    w = max(0.0, max(log_norm(op) for op in A_ops.values()))
    return CauchyProblem(A, B, U0, F, T=T, p=p, truncation=t, n_steps=n_steps, M=1.0, w=w, name=f"random-{seed}")


def random_stationary(seed: int, d: int = 3, truncation: Truncation = Truncation(3, 3),
                      p: float = 1.0) -> StationaryProblem:
    """A random stationary problem that satisfies every solvability condition with ``K = 1.05 * sup``."""
    rng = np.random.default_rng(seed)
    t = truncation

    def scaled(norm: float) -> np.ndarray:
        m = rng.normal(size=(d, d))
        return norm * m / np.linalg.norm(m, 2)

    a0, a1 = float(rng.uniform(2.0, 3.0)), float(rng.uniform(0.5, 1.5))
    r = EigenFamily(lambda a: -(a0 + a1 * len(a)), t)
    Atilde = CoordinatewiseFamily({a: LinearOp(scaled(float(rng.uniform(0.0, 0.3)))) for a in t}, truncation=t)
    ops = {MultiIndex.zero(): LinearOp(scaled(0.2))}
    for k in range(1, t.m + 1):
        ops[MultiIndex.unit(k)] = LinearOp(scaled(float(rng.uniform(0.1, 0.4)) / k))
    if t.n >= 2 and t.m >= 2:
        ops[MultiIndex((1, 1))] = LinearOp(scaled(0.1))
    B = WickFamily(ops, dim=d)
    F = ChaosExpansion({a: rng.normal(size=d) for a in t if len(a) <= 1}, kind="vector", dim=d)
    prob = StationaryProblem(Atilde, r, B, F, p=p, truncation=t, name=f"random-{seed}")
    report = validate(prob)
    if not report.passed:
        raise AssertionError(f"random stationary instance {seed} is invalid: {report.failures()}")
    return prob


# -- builtins ----------------------------------------------------------------

BUILTINS: dict[str, dict] = {
    "langevin": {
        "type": "evolution", "name": "langevin", "dim": 1, "truncation": {"n": 1, "m": 16},
        "p": 1.0, "T": 1.0, "n_steps": 2048, "M": 1.0, "w": 0.0,
        "A": {"op": {"kind": "scalar", "value": -1.0}},
        "noise": [{"kind": "white_noise_time", "modes": 16, "value": [1.0]}],
        "output_stride": 16,
    },
    "ou_heat": {
        "type": "evolution", "name": "ou_heat", "dim": 2, "truncation": {"n": 4, "m": 6},
        "p": 1.0, "T": 1.0, "n_steps": 256, "M": 1.0, "w": 0.0,
        "A": {"op": {"kind": "scalar", "value": 0.0}, "level_coeff": -1.0},
        "U0": [{"weighted": {"q": -0.5, "value": [1.0, 0.5]}}],
        "output_stride": 8,
    },
    "heat_wick_potential": {
        "type": "evolution", "name": "heat_wick_potential", "dim": 16, "truncation": {"n": 3, "m": 8},
        "p": 4.0, "T": 1.0, "n_steps": 256, "M": 1.0, "w": 0.0, "space": {"length": 8.0},
        "A": {"op": {"kind": "laplacian1d_periodic", "d": 16, "h": 0.5, "scale": 0.25}},
        "noise": [{"kind": "white_noise_space", "modes": 8}],
        "U0": [{"alpha": "[]", "value": {"kind": "bump", "center": 0.0, "width": 1.0}}],
        "output_stride": 16,
    },
    "transport_whitenoise": {
        "type": "evolution", "name": "transport_whitenoise", "dim": 32, "truncation": {"n": 2, "m": 4},
        "p": 4.0, "T": 1.0, "n_steps": 512, "M": 1.0, "w": 0.0, "space": {"length": 8.0},
        "A": {"op": {"kind": "shift1d_periodic", "d": 32, "h": 0.25}},
        "noise": [{"kind": "white_noise_space", "modes": 4, "scale": 0.5,
                   "compose": {"kind": "shift1d_periodic", "d": 32, "h": 0.25}}],
        "U0": [{"alpha": "[]", "value": {"kind": "bump", "center": 0.0, "width": 1.0}}],
        "output_stride": 32,
    },
    "deterministic_demo": {
        "type": "evolution", "name": "deterministic_demo", "dim": 2, "truncation": {"n": 3, "m": 3},
        "p": 2.0, "T": 2.0, "n_steps": 256, "M": 1.0, "w": "auto",
        "A": {"op": {"kind": "dense", "data": [[-1.0, 0.5], [-0.5, -1.0]]}},
        "B": [
            {"alpha": "[1]", "op": {"kind": "dense", "data": [[0.3, 0.0], [0.1, 0.2]]}},
            {"alpha": "[0,1]", "op": {"kind": "scalar", "value": 0.2}},
            {"alpha": "[0,0,1]", "op": {"kind": "diag", "data": [0.1, -0.1]}},
        ],
        "U0": [{"alpha": "[]", "value": [1.0, 0.0]}],
        "F": [{"alpha": "[]", "value": [0.0, 1.0], "profile": {"kind": "cos", "rate": 2.0}}],
        "output_stride": 8,
    },
    "fredholm_demo": {
        "type": "stationary", "name": "fredholm_demo", "dim": 1, "truncation": {"n": 3, "m": 3},
        "p": 1.0, "K": 0.6,
        "r": {"c": -1.0, "poly": [2.0, 1.0]},
        "F": [{"alpha": "[]", "value": [1.0]}],
    },
    "ou_polynomial": {
        "type": "stationary", "name": "ou_polynomial", "dim": 8, "truncation": {"n": 3, "m": 4},
        "p": 2.0, "space": {"length": 8.0},
        "r": {"c": -1.0, "poly": [2.0, 1.0, 1.0]},
        "Atilde": {"op": {"kind": "shift1d_periodic", "d": 8, "h": 1.0, "scale": 0.1}},
        "B": [
            {"alpha": "[]", "op": {"kind": "laplacian1d_periodic", "d": 8, "h": 1.0, "scale": 0.1}},
            {"alpha": "[1]", "op": {"kind": "scalar", "value": 0.3}},
            {"alpha": "[0,1]", "op": {"kind": "scalar", "value": 0.2}},
        ],
        "F": [{"alpha": "[]", "value": 1.0},
              {"alpha": "[1]", "value": {"kind": "bump", "center": 0.0, "width": 1.0}}],
    },
}


def builtin_config(name: str) -> dict:
    if name not in BUILTINS:
        raise ConfigError(f"unknown builtin {name!r}; choose from {', '.join(sorted(BUILTINS))}")
    return copy.deepcopy(BUILTINS[name])
