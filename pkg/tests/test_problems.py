import copy
import math

import numpy as np
import pytest

from wickflow import evolution as ev
from wickflow import stationary as stn
from wickflow.chaos import hermite_fns
from wickflow.errors import ConfigError
from wickflow.multiindex import MultiIndex, Truncation, weight
from wickflow.problems import (BUILTINS, build, builtin_config, random_evolution, random_stationary,
                               validate_config)

from conftest import E1, E2, ZERO

BASE = {
    "type": "evolution", "dim": 2, "truncation": {"n": 2, "m": 2}, "p": 2.0, "T": 1.0, "n_steps": 64,
    "A": {"op": {"kind": "scalar", "value": -1.0}},
    "U0": [{"alpha": "[]", "value": [1.0, 0.0]}],
}


def cfg(**changes):
    out = copy.deepcopy(BASE)
    out.update(changes)
    return out


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtins_validate_and_build(name):
    prob = build(builtin_config(name))
    kind = BUILTINS[name]["type"]
    assert isinstance(prob, ev.CauchyProblem if kind == "evolution" else stn.StationaryProblem)
    assert prob.name == name


def test_builtin_config_is_a_copy():
    c = builtin_config("langevin")
    c["T"] = 99.0
    assert BUILTINS["langevin"]["T"] == 1.0
    with pytest.raises(ConfigError):
        builtin_config("nope")


def test_langevin_builtin_structure():
    prob = build(builtin_config("langevin"))
    assert prob.dim == 1 and prob.n_steps == 2048
    assert set(prob.F) == {MultiIndex.unit(k) for k in range(1, 17)}
    assert prob.B.support() == []


def test_heat_wick_potential_uses_hermite_grid():
    c = builtin_config("heat_wick_potential")
    prob = build(c)
    x = -4.0 + 8.0 * np.arange(16) / 16
    xi = hermite_fns(8, x)
    for k in range(1, 9):
        np.testing.assert_allclose(np.diag(prob.B.ops[MultiIndex.unit(k)].matrix), xi[k - 1])
    np.testing.assert_allclose(prob.U0[ZERO], np.exp(-0.5 * x * x))


def test_level_coeff_and_overrides():
    c = cfg(A={"op": {"kind": "scalar", "value": -1.0}, "level_coeff": -0.5,
               "overrides": [{"alpha": "[1]", "op": {"kind": "scalar", "value": 3.0}}]})
    prob = build(c)
    assert prob.A[ZERO].matrix[0, 0] == -1.0
    assert prob.A[E1].matrix[0, 0] == 3.0
    assert prob.A[MultiIndex((1, 1))].matrix[0, 0] == -2.0


def test_weighted_initial_data():
    c = cfg(U0=[{"weighted": {"q": -0.5, "value": [1.0, 2.0]}}])
    prob = build(c)
    for a in Truncation(2, 2):
        np.testing.assert_allclose(prob.U0[a], weight(a, -0.5) * np.array([1.0, 2.0]))


def test_forcing_profiles():
    c = cfg(F=[{"alpha": "[]", "value": [1.0, 0.0], "profile": {"kind": "sin", "rate": 2.0}},
               {"alpha": "[1]", "value": 1.5, "profile": {"kind": "exp", "rate": -1.0}},
               {"alpha": "[0,1]", "value": [0.0, 1.0], "profile": {"kind": "hermite", "k": 2}},
               {"alpha": "[2]", "value": [1.0, 1.0]}])
    prob = build(c)
    t = np.array([0.0, 0.3, 0.9])
    v, dv = prob.F[ZERO].sample(t)
    np.testing.assert_allclose(v[:, 0], np.sin(2 * t))
    np.testing.assert_allclose(dv[:, 0], 2 * np.cos(2 * t))
    v, dv = prob.F[E1].sample(t)
    np.testing.assert_allclose(v, np.outer(np.exp(-t), [1.5, 1.5]))
    v, _ = prob.F[E2].sample(t)
    np.testing.assert_allclose(v[:, 1], hermite_fns(2, t)[1])
    v, dv = prob.F[MultiIndex.unit(1, 2)].sample(t)
    np.testing.assert_allclose(v, 1.0)
    np.testing.assert_allclose(dv, 0.0)


def test_time_profile_on_wick_member():
    c = cfg(B=[{"alpha": "[1]", "op": {"kind": "scalar", "value": 0.5}, "profile": {"kind": "cos", "rate": 1.0}}])
    prob = build(c)
    assert prob.B.time_dependent
    np.testing.assert_allclose(prob.B.at(E1, 0.4).matrix, 0.5 * math.cos(0.4) * np.eye(2))


def test_space_noise_composes_with_operator():
    c = builtin_config("transport_whitenoise")
    prob = build(c)
    from wickflow.operators import shift1d_periodic
    x = -4.0 + 8.0 * np.arange(32) / 32
    xi = hermite_fns(4, x)
    D = shift1d_periodic(32, 0.25).matrix
    np.testing.assert_allclose(prob.B.ops[E2].matrix, 0.5 * np.diag(xi[1]) @ D)


def test_auto_rate_from_log_norm():
    c = cfg(A={"op": {"kind": "dense", "data": [[0.5, 1.0], [0.0, 0.2]]}}, w="auto")
    prob = build(c)
    m = np.array([[0.5, 1.0], [0.0, 0.2]])
    assert prob.w == pytest.approx(np.linalg.eigvalsh(0.5 * (m + m.T))[-1])
    assert build(cfg(w="auto")).w == 0.0


def test_truncation_override():
    prob = build(builtin_config("ou_heat"), truncation=Truncation(2, 3))
    assert prob.truncation == Truncation(2, 3)


def test_random_configs_are_reproducible():
    a = build({"type": "evolution", "random": {"seed": 5}})
    b = build({"type": "evolution", "random": {"seed": 5}})
    for alpha in a.truncation:
        np.testing.assert_array_equal(a.A[alpha].matrix, b.A[alpha].matrix)
    np.testing.assert_array_equal(a.U0[ZERO], b.U0[ZERO])
    s = build({"type": "stationary", "random": {"seed": 2}, "dim": 2})
    assert s.dim == 2


@pytest.mark.parametrize("seed", range(5))
def test_random_evolution_declared_bound_is_valid(seed):
    prob = random_evolution(seed, time_dependent=bool(seed % 2))
    for a in prob.truncation:
        S = ev.SemigroupProvider(prob.A[a], prob.M, prob.w)
        with np.errstate(all="raise"):
            assert S.validate_bound(np.linspace(0, prob.T, 9)).passed


@pytest.mark.parametrize("seed", range(5))
def test_random_stationary_is_valid(seed):
    assert stn.validate(random_stationary(seed)).passed


BAD = [
    ("not an object", []),
    ("missing type", {k: v for k, v in BASE.items() if k != "type"}),
    ("unknown type", cfg(type="elliptic")),
    ("missing horizon", {k: v for k, v in BASE.items() if k != "T"}),
    ("negative horizon", cfg(T=-1.0)),
    ("zero dimension", cfg(dim=0)),
    ("zero modes", cfg(truncation={"n": 2, "m": 0})),
    ("unknown key", cfg(colour="blue")),
    ("unknown operator", cfg(A={"op": {"kind": "fourier"}})),
    ("wrong vector length", cfg(U0=[{"alpha": "[]", "value": [1.0, 2.0, 3.0]}])),
    ("malformed index", cfg(U0=[{"alpha": "1,2", "value": [1.0, 2.0]}])),
    ("index outside truncation", cfg(U0=[{"alpha": "[0,0,1]", "value": [1.0, 2.0]}])),
    ("nan value", cfg(U0=[{"alpha": "[]", "value": [float("nan"), 0.0]}])),
    ("infinite weight", cfg(p=float("inf"))),
    ("time-dependent B_0", cfg(B=[{"alpha": "[]", "op": {"kind": "scalar", "value": 1.0},
                                   "profile": {"kind": "cos"}}])),
    ("hermite profile without mode", cfg(F=[{"alpha": "[]", "value": 1.0, "profile": {"kind": "hermite"}}])),
    ("string step count", cfg(n_steps="many")),
    ("dense operator of wrong size", cfg(A={"op": {"kind": "dense", "data": [[1.0]]}})),
    ("stationary without eigenvalues", {"type": "stationary", "dim": 1, "truncation": {"n": 1, "m": 1}, "p": 1.0}),
    ("empty polynomial", {"type": "stationary", "dim": 1, "truncation": {"n": 1, "m": 1}, "p": 1.0,
                          "r": {"c": -1.0, "poly": []}}),
    ("duplicate forcing", cfg(F=[{"alpha": "[]", "value": 1.0}, {"alpha": "[]", "value": 2.0}])),
    ("zero noise modes", cfg(noise=[{"kind": "white_noise_time", "modes": 0}])),
]


@pytest.mark.parametrize("label, config", BAD, ids=[b[0] for b in BAD])
def test_malformed_configs_raise_config_error(label, config):
    with pytest.raises(ConfigError) as info:
        build(config)
    assert str(info.value)


def test_validate_config_passes_good_config():
    assert validate_config(cfg()) is not None
