"""Malliavin derivative, Skorokhod integral and the Ornstein-Uhlenbeck operator on chaos coefficients.

Directions ``xi_k`` are stored by their integer mode, so every operation
here is combinatorial: coefficients are only rescaled and moved between
indices, never evaluated as functions.
"""
from __future__ import annotations

import math
from typing import Callable, Iterable, Mapping

import numpy as np

from .chaos import ChaosExpansion, _is_zero
from .errors import TruncationDomainError
from .multiindex import MultiIndex, Truncation
from .operators import CoordinatewiseFamily, LinearOp, WickFamily, wick_apply

__all__ = [
    "DirectionalExpansion",
    "EigenFamily",
    "malliavin",
    "skorokhod",
    "ou_operator",
    "ou_semigroup",
    "r_to_skorokhod",
    "selfadjoint_decomposition",
    "wick_skorokhod_bridge",
]


class DirectionalExpansion:
    """``sum_{alpha,k} v_{alpha,k} (x) xi_k (x) H_alpha`` as a sparse map ``(alpha, k) -> v``."""

    def __init__(self, coeffs: Mapping[tuple[MultiIndex, int], object] | None = None,
                 kind: str = "scalar", dim: int = 1):
        if kind not in ("scalar", "vector"):
            raise ValueError("directional expansions hold scalar or vector coefficients")
        self.kind = kind
        self.dim = dim
        store = {}
        for (alpha, k), c in (coeffs or {}).items():
            if k < 1:
                raise ValueError("direction modes are numbered from 1")
            c = float(c) if kind == "scalar" else np.array(c, dtype=float).reshape(dim)
            if not _is_zero(c):
                store[(alpha, int(k))] = c
        self._coeffs = dict(sorted(store.items(), key=lambda kv: (kv[0][0].sort_key(), kv[0][1])))

    @property
    def coeffs(self) -> Mapping[tuple[MultiIndex, int], object]:
        return self._coeffs

    def __getitem__(self, key: tuple[MultiIndex, int]):
        if key in self._coeffs:
            return self._coeffs[key]
        return 0.0 if self.kind == "scalar" else np.zeros(self.dim)

    def __len__(self) -> int:
        return len(self._coeffs)

    def items(self):
        return self._coeffs.items()

    def component(self, k: int) -> ChaosExpansion:
        """The coefficient process ``M_k u`` of direction ``xi_k``."""
        return ChaosExpansion({a: c for (a, j), c in self._coeffs.items() if j == k}, kind=self.kind, dim=self.dim)

    def __repr__(self) -> str:
        return f"DirectionalExpansion<{self.kind}, {len(self)} terms>"


class EigenFamily:
    """Eigenvalues ``alpha -> r_alpha`` of a self-adjoint coordinatewise operator on a truncation."""

    def __init__(self, values: Mapping[MultiIndex, float] | Callable[[MultiIndex], float],
                 truncation: Truncation):
        self.truncation = truncation
        if callable(values):
            self._r = {a: float(values(a)) for a in truncation}
        else:
            self._r = {a: float(values.get(a, 0.0)) for a in truncation}

    def __getitem__(self, alpha: MultiIndex) -> float:
        if alpha not in self._r:
            raise TruncationDomainError(f"eigenvalue requested outside {self.truncation}: {alpha}")
        return self._r[alpha]

    def items(self):
        return self._r.items()

    def as_family(self, d: int) -> CoordinatewiseFamily:
        return CoordinatewiseFamily({a: LinearOp.scalar(r, d) for a, r in self._r.items()},
                                    truncation=self.truncation)


def _accumulate(store: dict, key, value):
    store[key] = store[key] + value if key in store else value


def malliavin(F: ChaosExpansion) -> DirectionalExpansion:
    """``D F``: the entry at ``(alpha - eps_k, k)`` is ``alpha_k f_alpha``."""
    out: dict = {}
    for alpha, f in F.items():
        for k, a in alpha.modes():
            _accumulate(out, (alpha.sub(MultiIndex.unit(k)), k), a * f)
    return DirectionalExpansion(out, kind=F.kind, dim=F.dim)


def skorokhod(V: DirectionalExpansion) -> ChaosExpansion:
    """``delta V``: the coefficient at ``gamma`` is ``sum_k v_{gamma - eps_k, k}``."""
    out: dict = {}
    for (alpha, k), v in V.items():
        _accumulate(out, alpha + MultiIndex.unit(k), v)
    return ChaosExpansion(out, kind=V.kind, dim=V.dim)


def ou_operator(F: ChaosExpansion) -> ChaosExpansion:
    """``R F = sum |alpha| f_alpha H_alpha``."""
    return F.map(lambda alpha, f: len(alpha) * f)


def ou_semigroup(F: ChaosExpansion, t: float) -> ChaosExpansion:
    """``T_t F = sum exp(-|alpha| t) f_alpha H_alpha``."""
    if t < 0:
        raise ValueError("the Ornstein-Uhlenbeck semigroup needs t >= 0")
    return F.map(lambda alpha, f: math.exp(-len(alpha) * t) * f)


def _check_centered(value, what: str):
    if not _is_zero(value):
        raise ValueError(f"{what} has a nonzero expectation; Skorokhod integrals are centered")


def r_to_skorokhod(R: CoordinatewiseFamily, u: ChaosExpansion) -> DirectionalExpansion:
    """An ``M u`` with ``delta(M u) = R u`` for a coordinatewise ``R``.

    The entry at ``(gamma - eps_k, k)`` is ``gamma_k R_gamma(u_gamma) / |gamma|``.
    ``R u`` must have zero expectation (``R_0 u_0 = 0``) since the range of
    ``delta`` does.
    """
    out: dict = {}
    for gamma, ug in u.items():
        if not R.defined_at(gamma):
            raise TruncationDomainError(f"R is not defined at {gamma}")
        rg = R[gamma].apply(ug)
        if gamma.is_zero():
            _check_centered(rg, "R u")
            continue
        n = len(gamma)
        for k, a in gamma.modes():
            _accumulate(out, (gamma.sub(MultiIndex.unit(k)), k), (a / n) * rg)
    return DirectionalExpansion(out, kind=u.kind, dim=u.dim)


def selfadjoint_decomposition(r: EigenFamily, u: ChaosExpansion,
                              split: Callable[[MultiIndex, int], float] | None = None) -> DirectionalExpansion:
    """``M_k u = sum_alpha r_{k,alpha} u_alpha H_{alpha - eps_k}`` with ``sum_k r_{k,alpha} = r_alpha``.

    ``split(alpha, k)`` returns ``r_{k,alpha}``; the default spreads
    ``r_alpha`` along the supported modes, ``r_alpha alpha_k / |alpha|``.
    A custom split must vanish where ``alpha_k = 0``.
    """
    out: dict = {}
    for alpha, ua in u.items():
        ra = r[alpha]
        if alpha.is_zero():
            _check_centered(ra * ua, "r_0 u_0")
            continue
        n = len(alpha)
        for k, a in alpha.modes():
            rk = split(alpha, k) if split is not None else ra * a / n
            _accumulate(out, (alpha.sub(MultiIndex.unit(k)), k), rk * ua)
    return DirectionalExpansion(out, kind=u.kind, dim=u.dim)


def wick_skorokhod_bridge(ms: Iterable[LinearOp], u: ChaosExpansion) -> tuple[ChaosExpansion, ChaosExpansion]:
    """Compute ``delta(M u)`` with ``M_k = m_k`` and ``B <> u`` with ``B_{eps_k} = m_k`` separately.

    The two results agree coefficientwise; they are returned as
    ``(via_skorokhod, via_wick)``.
    """
    ms = list(ms)
    if not ms:
        zero = u.like({})
        return zero, zero
    d = ms[0].dim
    # delta(M u): M_k acts on every coefficient, then delta lifts (alpha, k) to alpha + eps_k
    entries: dict = {}
    for alpha, ua in u.items():
        for k, m in enumerate(ms, start=1):
            _accumulate(entries, (alpha, k), m.apply(ua))
    via_delta = skorokhod(DirectionalExpansion(entries, kind=u.kind, dim=u.dim))
    B = WickFamily({MultiIndex.unit(k): m for k, m in enumerate(ms, start=1)}, dim=d)
    return via_delta, wick_apply(B, u)
