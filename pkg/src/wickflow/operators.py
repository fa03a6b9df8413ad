"""Linear operators on R^d, coordinatewise and Wick operator families, semigroups.

The state space is discretized as R^d.  Continuous-space operators
(periodic finite-difference Laplacian, upwind first derivative, pointwise
multiplication) are d x d matrices behind :class:`LinearOp`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import linalg

from .chaos import ChaosExpansion, KondratievNorm, kondratiev_norm_sq
from .errors import BoundViolationWarning, ConfigError, KindMismatchError, TruncationDomainError
from .multiindex import MultiIndex, Truncation, full_weight_sum, log_weight

__all__ = [
    "LinearOp",
    "TimeDependentOp",
    "CoordinatewiseFamily",
    "WickFamily",
    "SemigroupProvider",
    "op_norm",
    "log_norm",
    "op_from_literal",
    "laplacian1d_periodic",
    "shift1d_periodic",
    "scaled_generator",
    "k_constant",
    "check_polybound",
    "coordinatewise_apply",
    "wick_apply",
    "wick_bound_shifted",
    "wick_bound_minkowski",
]


class LinearOp:
    """A d x d real matrix with a structure tag (``dense``, ``diag``, ``scalar``, ...)."""

    __slots__ = ("matrix", "kind", "_norm")

    def __init__(self, matrix, kind: str = "dense"):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator entries must be finite")
        m.setflags(write=False)
        self.matrix = m
        self.kind = kind
        self._norm = None

    @classmethod
    def identity(cls, d: int) -> LinearOp:
        return cls(np.eye(d), kind="scalar")

    @classmethod
    def scalar(cls, value: float, d: int) -> LinearOp:
        return cls(value * np.eye(d), kind="scalar")

    @classmethod
    def zeros(cls, d: int) -> LinearOp:
        return cls(np.zeros((d, d)), kind="scalar")

    @classmethod
    def diag(cls, values) -> LinearOp:
        return cls(np.diag(np.asarray(values, dtype=float)), kind="diag")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def norm(self) -> float:
        if self._norm is None:
            self._norm = op_norm(self)
        return self._norm

    def is_zero(self) -> bool:
        return not np.any(self.matrix)

    def apply(self, v):
        """Apply to a vector ``(d,)``, a stack of rows ``(N, d)``, or a scalar when ``d == 1``."""
        if np.ndim(v) == 0:
            if self.dim != 1:
                raise KindMismatchError("scalar coefficient needs a 1 x 1 operator")
            return float(self.matrix[0, 0] * v)
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise KindMismatchError(f"operator of size {self.dim} applied to vector of size {v.shape[-1]}")
        if self.kind in ("diag", "scalar"):
            return v * np.diagonal(self.matrix)
        return v @ self.matrix.T

    def __add__(self, other: LinearOp) -> LinearOp:
        kind = self.kind if self.kind == other.kind and self.kind in ("diag", "scalar") else "dense"
        return LinearOp(self.matrix + other.matrix, kind=kind)

    def __sub__(self, other: LinearOp) -> LinearOp:
        return self + (-1.0) * other

    def __mul__(self, s: float) -> LinearOp:
        return LinearOp(s * self.matrix, kind=self.kind)

    __rmul__ = __mul__

    def __matmul__(self, other: LinearOp) -> LinearOp:
        return LinearOp(self.matrix @ other.matrix)

    def __repr__(self) -> str:
        return f"LinearOp<{self.kind}, d={self.dim}>"


def op_norm(L: LinearOp | np.ndarray) -> float:
    """Spectral norm ``|L|_2``."""
    if isinstance(L, LinearOp):
        if L.kind in ("diag", "scalar"):
            return float(np.max(np.abs(np.diagonal(L.matrix)))) if L.dim else 0.0
        L = L.matrix
    return float(np.linalg.norm(L, 2))


def log_norm(L: LinearOp | np.ndarray) -> float:
    """Logarithmic 2-norm ``max eig((L + L^T)/2)``, so that ``|exp(tL)| <= exp(t * log_norm(L))``."""
    m = L.matrix if isinstance(L, LinearOp) else np.asarray(L, dtype=float)
    return float(np.linalg.eigvalsh(0.5 * (m + m.T))[-1])


def laplacian1d_periodic(d: int, h: float) -> LinearOp:
    """Second-difference ``(u_{j+1} - 2u_j + u_{j-1}) / h^2`` on a periodic grid."""
    if d < 3:
        raise ValueError("periodic Laplacian needs d >= 3")
    S = np.roll(np.eye(d), 1, axis=1)
    return LinearOp((S - 2 * np.eye(d) + S.T) / h ** 2, kind="tridiagonal")


def shift1d_periodic(d: int, h: float) -> LinearOp:
    """Upwind derivative ``(u_{j+1} - u_j)/h``: generator of ``g(x) -> g(x + t)``.

    Its exponential is a contraction in the Euclidean norm.
    """
    if d < 2:
        raise ValueError("periodic shift needs d >= 2")
    S = np.roll(np.eye(d), 1, axis=1)
    return LinearOp((S - np.eye(d)) / h, kind="tridiagonal")


def scaled_generator(a, D: LinearOp) -> LinearOp:
    """``a * D`` for a constant scalar ``a``; its semigroup is ``t -> T_{a t}``.

    Spatially varying coefficients are rejected because ``exp(t a(x) D)``
    is not a rescaling of the semigroup of ``D``.
    """
    if np.ndim(a) != 0:
        raise NotImplementedError("only constant scalar coefficients are supported for a*D")
    return float(a) * D


def op_from_literal(lit: Mapping, dim: int | None = None) -> LinearOp:
    """Build an operator from a config literal.

    Supported kinds: ``dense`` (``data``), ``diag`` (``data``), ``scalar``
    (``value``; needs ``dim``), ``laplacian1d_periodic`` and
    ``shift1d_periodic`` (``d``, ``h``, optional ``scale``).
    """
    try:
        kind = lit["kind"]
        if kind == "dense":
            op = LinearOp(lit["data"])
        elif kind == "diag":
            op = LinearOp.diag(lit["data"])
        elif kind == "scalar":
            d = lit.get("d", dim)
            if d is None:
                raise ConfigError("scalar operator literal needs a dimension")
            op = LinearOp.scalar(float(lit["value"]), int(d))
        elif kind == "laplacian1d_periodic":
            op = laplacian1d_periodic(int(lit["d"]), float(lit["h"]))
        elif kind == "shift1d_periodic":
            op = shift1d_periodic(int(lit["d"]), float(lit["h"]))
        else:
            raise ConfigError(f"unknown operator kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad operator literal {lit!r}: {exc}") from exc
    if "scale" in lit:
        op = float(lit["scale"]) * op
    if dim is not None and op.dim != dim:
        raise ConfigError(f"operator literal has dimension {op.dim}, expected {dim}")
    return op


class TimeDependentOp:
    """``t -> B(t)`` with its time derivative, both as callables returning d x d arrays."""

    def __init__(self, value: Callable[[float], np.ndarray], deriv: Callable[[float], np.ndarray], dim: int):
        self.value = value
        self.deriv = deriv
        self.dim = dim

    @classmethod
    def scaled(cls, base: LinearOp, profile: Callable[[float], float],
               dprofile: Callable[[float], float]) -> TimeDependentOp:
        """``B(t) = profile(t) * base``."""
        m = base.matrix
        return cls(lambda t: profile(t) * m, lambda t: dprofile(t) * m, base.dim)

    def at(self, t: float) -> LinearOp:
        return LinearOp(self.value(t))

    def deriv_at(self, t: float) -> LinearOp:
        return LinearOp(self.deriv(t))

    def sample(self, grid) -> tuple[np.ndarray, np.ndarray]:
        vals = np.stack([np.asarray(self.value(t), dtype=float) for t in grid])
        ders = np.stack([np.asarray(self.deriv(t), dtype=float) for t in grid])
        return vals, ders

    def c1_norm(self, grid) -> float:
        """``sup |B(t)| + sup |B'(t)|`` over the grid nodes."""
        vals, ders = self.sample(grid)
        return max(op_norm(v) for v in vals) + max(op_norm(v) for v in ders)


class CoordinatewiseFamily:
    """A family ``alpha -> o_alpha`` acting on each chaos coefficient separately.

    Either an explicit map, a callable, or a single ``default`` operator
    (a simple family).  ``truncation`` restricts the domain; ``poly_bound``
    records a declared ``(R, r)`` with ``|o_alpha| <= R (2N)^(r alpha)``.
    """

    def __init__(self, ops: Mapping[MultiIndex, LinearOp] | None = None, default: LinearOp | None = None,
                 truncation: Truncation | None = None, fn: Callable[[MultiIndex], LinearOp] | None = None,
                 poly_bound: tuple[float, float] | None = None):
        self._ops = dict(ops or {})
        self.default = default
        self.truncation = truncation
        self._fn = fn
        self._cache: dict[MultiIndex, LinearOp] = {}
        self.poly_bound = poly_bound
        if not self._ops and default is None and fn is None:
            raise ValueError("a coordinatewise family needs operators, a default, or a function")

    @classmethod
    def simple(cls, op: LinearOp, truncation: Truncation | None = None) -> CoordinatewiseFamily:
        return cls(default=op, truncation=truncation)

    @classmethod
    def from_function(cls, fn: Callable[[MultiIndex], LinearOp], truncation: Truncation | None = None,
                      poly_bound=None) -> CoordinatewiseFamily:
        return cls(fn=fn, truncation=truncation, poly_bound=poly_bound)

    @property
    def is_simple(self) -> bool:
        return self.default is not None and not self._ops and self._fn is None

    @property
    def dim(self) -> int:
        if self.default is not None:
            return self.default.dim
        if self._ops:
            return next(iter(self._ops.values())).dim
        return self[MultiIndex.zero()].dim

    def defined_at(self, alpha: MultiIndex) -> bool:
        if alpha in self._ops:
            return True
        if self.truncation is not None and alpha not in self.truncation:
            return False
        return self.default is not None or self._fn is not None

    def __getitem__(self, alpha: MultiIndex) -> LinearOp:
        if alpha in self._ops:
            return self._ops[alpha]
        if not self.defined_at(alpha):
            raise TruncationDomainError(f"family is not defined at {alpha}")
        if self._fn is not None:
            if alpha not in self._cache:
                self._cache[alpha] = self._fn(alpha)
            return self._cache[alpha]
        return self.default


class WickFamily:
    """Sparse ``alpha -> B_alpha`` acting by Wick convolution.

    Entries other than ``B_0`` may be :class:`TimeDependentOp`; ``B_0``
    must be constant in time.
    """

    def __init__(self, ops: Mapping[MultiIndex, LinearOp | TimeDependentOp] | None = None, dim: int | None = None):
        cleaned = {}
        for alpha, op in (ops or {}).items():
            if not isinstance(alpha, MultiIndex):
                alpha = MultiIndex(alpha)
            if isinstance(op, TimeDependentOp):
                if alpha.is_zero():
                    raise ValueError("B_0 must not depend on time")
            elif op.is_zero():
                continue
            cleaned[alpha] = op
            if dim is None:
                dim = op.dim
            elif op.dim != dim:
                raise KindMismatchError("all Wick family members must share one dimension")
        if dim is None:
            raise ValueError("an empty Wick family needs an explicit dimension")
        self.dim = dim
        self._ops = dict(sorted(cleaned.items(), key=lambda kv: kv[0].sort_key()))

    @classmethod
    def zero(cls, d: int) -> WickFamily:
        return cls({}, dim=d)

    @property
    def ops(self) -> Mapping[MultiIndex, LinearOp | TimeDependentOp]:
        return self._ops

    @property
    def b0(self) -> LinearOp:
        return self._ops.get(MultiIndex.zero(), LinearOp.zeros(self.dim))

    @property
    def time_dependent(self) -> bool:
        return any(isinstance(op, TimeDependentOp) for op in self._ops.values())

    def shifted(self) -> list[tuple[MultiIndex, LinearOp | TimeDependentOp]]:
        """Members with ``alpha > 0``, in level-then-lex order."""
        return [(a, op) for a, op in self._ops.items() if a]

    def support(self) -> list[MultiIndex]:
        return list(self._ops)

    def at(self, alpha: MultiIndex, t: float | None = None) -> LinearOp:
        op = self._ops.get(alpha)
        if op is None:
            return LinearOp.zeros(self.dim)
        if isinstance(op, TimeDependentOp):
            if t is None:
                raise ValueError("time-dependent Wick family needs a time")
            return op.at(t)
        return op


def k_constant(B: WickFamily, p: float, grid=None) -> float:
    """``K = sum_alpha |B_alpha| (2N)^(-p alpha / 2)``.

    Time-dependent members contribute their C^1 norm on ``grid``.
    """
    terms = []
    for alpha, op in B.ops.items():
        if isinstance(op, TimeDependentOp):
            if grid is None:
                raise ValueError("time-dependent Wick family needs a grid for its C^1 norm")
            nrm = op.c1_norm(grid)
        else:
            nrm = op.norm
        terms.append(nrm * math.exp(-0.5 * p * log_weight(alpha)))
    return math.fsum(terms)


@dataclass
class PolyBoundReport:
    passed: bool
    worst_ratio: float
    worst_alpha: MultiIndex | None
    first_failure: MultiIndex | None
    series: float


def check_polybound(F: CoordinatewiseFamily, r: float, R: float, truncation: Truncation | None = None,
                    rtol: float = 1e-12) -> PolyBoundReport:
    """Check ``|o_alpha| <= R (2N)^(r alpha)`` on a truncation.

    Also returns ``sum |o_alpha|^2 (2N)^(-r alpha)``, the equivalent
    summability form.
    """
    t = truncation or F.truncation
    if t is None:
        raise ValueError("polynomial bound checks are truncation-scoped")
    worst, worst_alpha, first = 0.0, None, None
    series = []
    for alpha in t:
        nrm = F[alpha].norm
        lw = log_weight(alpha)
        ratio = nrm / (R * math.exp(r * lw))
        if ratio > worst:
            worst, worst_alpha = ratio, alpha
        if first is None and ratio > 1 + rtol:
            first = alpha
        series.append(nrm * nrm * math.exp(-r * lw))
    return PolyBoundReport(first is None, worst, worst_alpha, first, math.fsum(series))


def coordinatewise_apply(A: CoordinatewiseFamily, U: ChaosExpansion) -> ChaosExpansion:
    out = {}
    for alpha, u in U.items():
        if not A.defined_at(alpha):
            raise TruncationDomainError(f"coefficient {alpha} lies outside the family's truncation")
        out[alpha] = A[alpha].apply(u)
    return U.like(out)


def wick_apply(B: WickFamily, U: ChaosExpansion, t: float | None = None) -> ChaosExpansion:
    """``(B <> U)_gamma = sum_{alpha+beta=gamma} B_alpha(u_beta)``.

    For trajectory expansions, time-dependent members are evaluated on the
    expansion's grid; otherwise ``t`` is required for them.
    """
    if U.kind != "scalar" and U.dim != B.dim:
        raise KindMismatchError(f"Wick family of size {B.dim} applied to coefficients of size {U.dim}")
    if U.kind == "scalar" and B.dim != 1:
        raise KindMismatchError("scalar expansions need a Wick family of size 1")
    out: dict[MultiIndex, object] = {}
    for alpha, op in B.ops.items():
        for beta, u in U.items():
            if isinstance(op, TimeDependentOp):
                if U.kind == "trajectory":
                    mats, _ = op.sample(U.grid)
                    term = np.einsum("nij,nj->ni", mats, u)
                else:
                    if t is None:
                        raise ValueError("time-dependent Wick family needs a time")
                    term = op.at(t).apply(u)
            else:
                term = op.apply(u)
            gamma = alpha + beta
            out[gamma] = out[gamma] + term if gamma in out else term
    return U.like(out)


@dataclass
class WickBoundReport:
    lhs: float
    rhs: float
    passed: bool


def _family_series(B: WickFamily, power: int, r: float) -> float:
    # sum |B_alpha|^power (2N)^(-r alpha)
    return math.fsum(op.norm ** power * math.exp(-r * log_weight(a)) for a, op in B.ops.items())


def wick_bound_shifted(B: WickFamily, U: ChaosExpansion, p: float, r: float, m: float) -> WickBoundReport:
    """``|B<>U|^2_{-(p+r+m)} <= M_m (sum |B_a|^2 (2N)^(-r a)) (sum |u_b|^2 (2N)^(-p b))``.

    ``M_m`` is the full series ``sum (2N)^(-m gamma)``, finite for ``m > 1``.
    """
    if m <= 1:
        raise ValueError("the shift m must exceed 1")
    lhs = kondratiev_norm_sq(wick_apply(B, U), KondratievNorm(p + r + m), reduce="sup")
    rhs = full_weight_sum(m) * _family_series(B, 2, r) * kondratiev_norm_sq(U, KondratievNorm(p), reduce="sup")
    return WickBoundReport(lhs, rhs, lhs <= rhs)


def wick_bound_minkowski(B: WickFamily, U: ChaosExpansion, r: float) -> WickBoundReport:
    """``|B<>U|^2_{-r} <= (sum |B_a| (2N)^(-r a/2))^2 |U|^2_{-r}``."""
    lhs = kondratiev_norm_sq(wick_apply(B, U), KondratievNorm(r), reduce="sup")
    kb = math.fsum(op.norm * math.exp(-0.5 * r * log_weight(a)) for a, op in B.ops.items())
    rhs = kb * kb * kondratiev_norm_sq(U, KondratievNorm(r), reduce="sup")
    return WickBoundReport(lhs, rhs, lhs <= rhs * (1 + 1e-12))


@dataclass
class BoundReport:
    passed: bool
    max_ratio: float
    worst_t: float
    ratios: np.ndarray = field(repr=False)


class SemigroupProvider:
    """``t -> exp(t A)`` for a generator ``A`` with declared bound ``|T_t| <= M exp(w t)``.

    Propagators and phi-function blocks are cached per time step, so grid
    solvers pay for one matrix exponential per step size.
    """

    def __init__(self, generator: LinearOp | np.ndarray, M: float = 1.0, w: float = 0.0):
        self.generator = generator if isinstance(generator, LinearOp) else LinearOp(generator)
        self.M = float(M)
        self.w = float(w)
        self._expm: dict[float, np.ndarray] = {}
        self._phi: dict[tuple[float, int], list[np.ndarray]] = {}

    @property
    def dim(self) -> int:
        return self.generator.dim

    def propagator(self, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError("semigroups are defined for t >= 0")
        key = float(t)
        if key not in self._expm:
            self._expm[key] = linalg.expm(key * self.generator.matrix)
        return self._expm[key]

    def action(self, t: float, v):
        return self.propagator(t) @ np.asarray(v, dtype=float)

    def phi(self, h: float, order: int) -> list[np.ndarray]:
        """``[phi_0(hA), ..., phi_order(hA)]`` from one augmented exponential.

        ``phi_0 = exp``, ``phi_j(z) = sum_k z^k / (k + j)!``; the top block
        row of ``expm([[hA, I, 0..], [0, 0, I, ..], ...])`` holds them.
        """
        key = (float(h), order)
        if key not in self._phi:
            d = self.dim
            Z = np.zeros((d * (order + 1), d * (order + 1)))
            Z[:d, :d] = h * self.generator.matrix
            for j in range(order):
                Z[j * d:(j + 1) * d, (j + 1) * d:(j + 2) * d] = np.eye(d)
            E = linalg.expm(Z)
            self._phi[key] = [E[:d, j * d:(j + 1) * d] for j in range(order + 1)]
            self._expm.setdefault(float(h), self._phi[key][0])
        return self._phi[key]

    def bound(self, t) -> np.ndarray:
        return self.M * np.exp(self.w * np.asarray(t, dtype=float))

    def validate_bound(self, grid, rtol: float = 1e-10) -> BoundReport:
        """Sample ``|exp(tA)|`` on ``grid`` against ``M exp(w t)``; warns on violation."""
        grid = np.asarray(grid, dtype=float)
        ratios = np.array([op_norm(self.propagator(t)) for t in grid]) / self.bound(grid)
        i = int(np.argmax(ratios))
        report = BoundReport(bool(ratios[i] <= 1 + rtol), float(ratios[i]), float(grid[i]), ratios)
        if not report.passed:
            warnings.warn(f"|exp(tA)| exceeds M exp(wt) by factor {ratios[i]:.6g} at t={grid[i]:.6g}",
                          BoundViolationWarning, stacklevel=2)
        return report
