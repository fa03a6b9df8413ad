import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wickflow.calculus import (DirectionalExpansion, EigenFamily, malliavin, ou_operator, ou_semigroup,
                               r_to_skorokhod, selfadjoint_decomposition, skorokhod, wick_skorokhod_bridge)
from wickflow.chaos import ChaosExpansion, wick
from wickflow.errors import TruncationDomainError
from wickflow.multiindex import MultiIndex, Truncation
from wickflow.operators import CoordinatewiseFamily, LinearOp

from conftest import E1, E2, ZERO, random_scalar, random_vector

H = ChaosExpansion.basis
T33 = Truncation(3, 3)


def test_malliavin_examples():
    assert len(malliavin(ChaosExpansion({ZERO: 4.0}))) == 0
    assert dict(malliavin(H(E1)).items()) == {(ZERO, 1): 1.0}
    assert dict(malliavin(H(MultiIndex.unit(1, 2))).items()) == {(E1, 1): 2.0}


def test_skorokhod_examples():
    assert len(skorokhod(DirectionalExpansion({}))) == 0
    assert skorokhod(DirectionalExpansion({(ZERO, 1): 1.0})) == H(E1)
    a = MultiIndex.unit(1, 2)
    assert skorokhod(malliavin(H(a))) == 2.0 * H(a)


def test_ou_operator_examples():
    assert len(ou_operator(ChaosExpansion({ZERO: 1.0}))) == 0
    a = MultiIndex((1, 1))
    assert ou_operator(H(a)) == 2.0 * H(a)


def test_ou_semigroup_examples(rng):
    F = random_scalar(rng, T33)
    assert ou_semigroup(F, 0.0) == F
    a = MultiIndex.unit(1, 2)
    assert ou_semigroup(H(a), math.log(2)).max_abs_diff(0.25 * H(a)) < 1e-15
    lhs = ou_semigroup(ou_semigroup(F, 0.3), 0.7)
    assert lhs.max_abs_diff(ou_semigroup(F, 1.0)) < 1e-12
    with pytest.raises(ValueError):
        ou_semigroup(F, -1.0)


def test_level_shifts(rng):
    F = random_scalar(rng, Truncation(4, 4), density=1.0)
    for (alpha, _), _ in malliavin(F).items():
        assert len(alpha) <= 3
    level2 = ChaosExpansion({a: c for a, c in F.items() if len(a) == 2})
    assert {len(a) for (a, _), _ in malliavin(level2).items()} == {1}
    V = malliavin(level2)
    assert {len(a) for a in skorokhod(V).support()} == {2}


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_skorokhod_of_malliavin_is_ou_operator(seed):
    F = random_scalar(np.random.default_rng(seed), Truncation(4, 4))
    assert skorokhod(malliavin(F)).max_abs_diff(ou_operator(F)) == 0.0


def test_first_chaos_is_the_fixed_point_set(rng):
    F = random_scalar(rng, Truncation(3, 4), density=1.0)
    R = ou_operator(F)
    for a, c in F.items():
        assert (R[a] == c) == (len(a) == 1)


def test_r_to_skorokhod_examples():
    d = 2
    assert len(r_to_skorokhod(CoordinatewiseFamily.simple(LinearOp.zeros(d)), ChaosExpansion(
        {E1: [1.0, 2.0]}, kind="vector"))) == 0
    R = CoordinatewiseFamily.from_function(lambda a: LinearOp.scalar(len(a), 1))
    u = ChaosExpansion({E1: 1.0})
    M = r_to_skorokhod(R, u)
    assert dict(M.items()) == {(ZERO, 1): 1.0}
    assert skorokhod(M) == ou_operator(u)


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_r_to_skorokhod_reproduces_coordinatewise_operator(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    Rops = {a: LinearOp(rng.normal(size=(d, d))) for a in T33}
    u = random_vector(rng, T33, d)
    u = u.like({a: c for a, c in u.items() if a})
    R = CoordinatewiseFamily(Rops, truncation=T33)
    got = skorokhod(r_to_skorokhod(R, u))
    expected = u.like({a: Rops[a].apply(c) for a, c in u.items()})
    assert got.max_abs_diff(expected) <= 1e-14 * max(1.0, max(np.abs(c).max() for _, c in expected.items()))


def test_r_to_skorokhod_needs_centered_image():
    R = CoordinatewiseFamily.simple(LinearOp.identity(1))
    with pytest.raises(ValueError):
        r_to_skorokhod(R, ChaosExpansion({ZERO: 1.0}))


def test_r_to_skorokhod_domain_check():
    R = CoordinatewiseFamily.simple(LinearOp.identity(1), truncation=Truncation(1, 1))
    with pytest.raises(TruncationDomainError):
        r_to_skorokhod(R, ChaosExpansion({MultiIndex.unit(1, 2): 1.0}))


def test_selfadjoint_decomposition_examples(rng):
    t = Truncation(2, 3)
    u = random_scalar(rng, t)
    zero = EigenFamily(lambda a: 0.0, t)
    assert len(selfadjoint_decomposition(zero, u)) == 0
    number = EigenFamily(lambda a: float(len(a)), t)
    assert skorokhod(selfadjoint_decomposition(number, u)).max_abs_diff(ou_operator(u)) < 1e-15
    M = selfadjoint_decomposition(number, u)
    for (alpha, k), v in M.items():
        gamma = alpha + MultiIndex.unit(k)
        assert v == pytest.approx(gamma.at(k) * u[gamma])


def test_selfadjoint_decomposition_random_eigenvalues(rng):
    t = Truncation(2, 3)
    vals = {a: rng.normal() for a in t}
    vals[ZERO] = 0.0
    r = EigenFamily(vals, t)
    u = random_scalar(rng, t, density=1.0)
    got = skorokhod(selfadjoint_decomposition(r, u))
    assert got.max_abs_diff(u.map(lambda a, c: vals[a] * c)) < 1e-14


def test_selfadjoint_decomposition_custom_split(rng):
    t = Truncation(2, 2)
    r = EigenFamily(lambda a: 3.0 * len(a), t)
    u = random_scalar(rng, t, density=1.0).map(lambda a, c: c if a else 0.0)

    def split(alpha, k):
        # all weight on the first supported mode
        first = next(j for j, _ in alpha.modes())
        return 3.0 * len(alpha) if k == first else 0.0

    got = skorokhod(selfadjoint_decomposition(r, u, split=split))
    assert got.max_abs_diff(u.map(lambda a, c: 3.0 * len(a) * c)) < 1e-14


def test_eigen_family_domain():
    r = EigenFamily(lambda a: -1.0, Truncation(1, 1))
    with pytest.raises(TruncationDomainError):
        r[E2]
    fam = r.as_family(2)
    np.testing.assert_array_equal(fam[E1].matrix, -np.eye(2))


def test_bridge_examples(rng):
    u = random_vector(rng, Truncation(2, 2), 2)
    via_delta, via_wick = wick_skorokhod_bridge([LinearOp.zeros(2), LinearOp.zeros(2)], u)
    assert len(via_delta) == 0 and len(via_wick) == 0
    via_delta, via_wick = wick_skorokhod_bridge([LinearOp.identity(2)], u)
    expected = wick(H(E1), u)
    assert via_delta.max_abs_diff(expected) == 0.0
    assert via_wick.max_abs_diff(expected) == 0.0


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_bridge_paths_agree(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    ms = [LinearOp(rng.normal(size=(d, d))) for _ in range(int(rng.integers(1, 4)))]
    u = random_vector(rng, T33, d)
    via_delta, via_wick = wick_skorokhod_bridge(ms, u)
    assert via_delta.max_abs_diff(via_wick) <= 1e-14 * max(1.0, max((np.abs(c).max() for _, c in via_wick.items()),
                                                                     default=1.0))


def test_directional_component():
    V = DirectionalExpansion({(ZERO, 1): 1.0, (E1, 2): 3.0, (E2, 1): -1.0})
    assert V.component(1) == ChaosExpansion({ZERO: 1.0, E2: -1.0})
    with pytest.raises(ValueError):
        DirectionalExpansion({(ZERO, 0): 1.0})
