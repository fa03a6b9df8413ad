"""Stationary equations ``A U + B<>U + F = 0`` with ``A_alpha = Atilde_alpha + r_alpha Id``.

Each coefficient solves one d x d system,

    (-r_gamma Id - Atilde_gamma - B_0) u_gamma = f_gamma + sum_{0 < beta <= gamma} B_beta u_{gamma - beta},

in level order.  The hypotheses that make every system uniquely solvable
and give a weighted-norm bound are checked first.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calculus import EigenFamily
from .chaos import ChaosExpansion
from .errors import HypothesisError, TruncationDomainError
from .multiindex import MultiIndex, Truncation, log_weight
from .operators import CoordinatewiseFamily, WickFamily

__all__ = [
    "StationaryProblem",
    "ConditionReport",
    "StationarySolution",
    "NormBoundReport",
    "validate",
    "solve",
    "norm_bound",
    "ou_polynomial_eigs",
    "suggest_k",
    "dense_solve",
]

KERNEL_TOL = 1e-10


@dataclass
class StationaryProblem:
    """``K`` bounds the inverses of the coefficient systems; ``None`` picks ``1.05 * sup``."""

    Atilde: CoordinatewiseFamily
    r: EigenFamily
    B: WickFamily
    F: ChaosExpansion
    p: float
    truncation: Truncation
    K: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.B.time_dependent:
            raise ValueError("stationary problems need time-independent Wick families")
        if self.F.kind != "vector" and self.F.support():
            raise ValueError("F must be a vector-kind expansion")
        for alpha in self.F.support():
            if alpha not in self.truncation:
                raise TruncationDomainError(f"F has a coefficient at {alpha} outside {self.truncation}")

    @property
    def dim(self) -> int:
        return self.B.dim

    def system(self, gamma: MultiIndex) -> np.ndarray:
        """``-r_gamma Id - Atilde_gamma - B_0``."""
        d = self.dim
        return -self.r[gamma] * np.eye(d) - self.Atilde[gamma].matrix - self.B.b0.matrix


def wick_series(B: WickFamily, p: float) -> float:
    """``sum_{beta > 0} |B_beta| (2N)^(-p beta / 2)``."""
    return math.fsum(op.norm * math.exp(-0.5 * p * log_weight(b)) for b, op in B.shifted())


@dataclass
class ConditionReport:
    K: float
    dissipativity_margin: float
    worst_alpha: MultiIndex | None
    inverse_sup: float
    wick_series: float
    kernel_min_sv: float
    kernel_alpha: MultiIndex | None

    @property
    def dissipative(self) -> bool:
        return self.dissipativity_margin >= 0

    @property
    def inverse_bounded(self) -> bool:
        return self.inverse_sup < self.K

    @property
    def wick_small(self) -> bool:
        return self.K * self.wick_series < 1 / math.sqrt(2)

    @property
    def kernel_trivial(self) -> bool:
        return self.kernel_min_sv > KERNEL_TOL

    @property
    def passed(self) -> bool:
        return self.dissipative and self.inverse_bounded and self.wick_small and self.kernel_trivial

    def failures(self) -> list[str]:
        out = []
        if not self.dissipative:
            out.append(f"-|Atilde| - |B_0| - r is negative ({self.dissipativity_margin:.6g}) at {self.worst_alpha}")
        if not self.inverse_bounded:
            out.append(f"sup of inverse margins {self.inverse_sup:.6g} is not below K = {self.K:.6g}")
        if not self.wick_small:
            out.append(f"K * Wick series = {self.K * self.wick_series:.6g} is not below 1/sqrt(2)")
        if not self.kernel_trivial:
            out.append(f"coefficient system is singular at {self.kernel_alpha} (min singular value "
                       f"{self.kernel_min_sv:.3g})")
        return out

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "dissipativity_margin": self.dissipativity_margin,
            "inverse_sup": self.inverse_sup,
            "inverse_margin": self.K - self.inverse_sup,
            "wick_series": self.wick_series,
            "wick_margin": 1 / math.sqrt(2) - self.K * self.wick_series,
            "kernel_min_sv": self.kernel_min_sv,
            "pass": self.passed,
        }


def _margins(problem: StationaryProblem):
    b0 = problem.B.b0.norm
    worst, worst_alpha, sup_inv = math.inf, None, 0.0
    sv, sv_alpha = math.inf, None
    for alpha in problem.truncation:
        gap = -problem.Atilde[alpha].norm - b0 - problem.r[alpha]
        if gap < worst:
            worst, worst_alpha = gap, alpha
        sup_inv = max(sup_inv, 1.0 / gap if gap > 0 else math.inf)
        s = float(np.linalg.svd(problem.system(alpha), compute_uv=False)[-1])
        if s < sv:
            sv, sv_alpha = s, alpha
    return worst, worst_alpha, sup_inv, sv, sv_alpha


def suggest_k(problem: StationaryProblem) -> float:
    """``1.05 * sup_alpha 1/(-r_alpha - |Atilde_alpha| - |B_0|)``."""
    return 1.05 * _margins(problem)[2]


def validate(problem: StationaryProblem) -> ConditionReport:
    worst, worst_alpha, sup_inv, sv, sv_alpha = _margins(problem)
    K = problem.K if problem.K is not None else 1.05 * sup_inv
    return ConditionReport(K, worst, worst_alpha, sup_inv, wick_series(problem.B, problem.p), sv, sv_alpha)


@dataclass
class StationarySolution:
    u: dict[MultiIndex, np.ndarray]
    order: list[MultiIndex]
    report: ConditionReport
    residuals: dict[MultiIndex, float]

    def to_expansion(self) -> ChaosExpansion:
        return ChaosExpansion(self.u, kind="vector", dim=len(next(iter(self.u.values()))))

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)


def _rhs(problem: StationaryProblem, gamma: MultiIndex, u) -> np.ndarray:
    out = np.array(problem.F[gamma], dtype=float) if problem.F.support() else np.zeros(problem.dim)
    for beta, op in problem.B.shifted():
        rest = gamma.sub(beta)
        if rest is not None:
            out = out + op.matrix @ u[rest]
    return out


def solve(problem: StationaryProblem, threads: int = 1, check: bool = True) -> StationarySolution:
    """Level-order recursion; raises :class:`HypothesisError` if ``validate`` fails and ``check`` is set."""
    report = validate(problem)
    if check and not report.passed:
        raise HypothesisError("; ".join(report.failures()), report)
    order = list(problem.truncation)
    u: dict[MultiIndex, np.ndarray] = {}

    def one(gamma):
        return gamma, np.linalg.solve(problem.system(gamma), _rhs(problem, gamma, u))

    levels: dict[int, list] = {}
    for g in order:
        levels.setdefault(len(g), []).append(g)
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for lev in sorted(levels):
            results = pool.map(one, levels[lev]) if pool is not None else map(one, levels[lev])
            for gamma, vec in results:
                u[gamma] = vec
    finally:
        if pool is not None:
            pool.shutdown()
    res = {}
    for gamma in order:
        # original equation: (Atilde + r Id + B_0) u + sum_{beta>0} B_beta u + f = 0
        r = -problem.system(gamma) @ u[gamma] + _rhs(problem, gamma, u)
        res[gamma] = float(np.linalg.norm(r))
    return StationarySolution(u, order, report, res)


@dataclass
class NormBoundReport:
    lhs: float
    rhs: float
    M: float
    passed: bool


def norm_bound(problem: StationaryProblem, solution: StationarySolution) -> NormBoundReport:
    """``sum |u|^2 (2N)^(-p gamma) <= (2K^2/M) sum |f|^2 (2N)^(-p gamma)``, ``M = 1 - 2K^2 S^2``."""
    K = solution.report.K
    S = wick_series(problem.B, problem.p)
    M = 1.0 - 2.0 * K * K * S * S
    p = problem.p
    lhs = math.fsum(float(v @ v) * math.exp(-p * log_weight(g)) for g, v in solution.u.items())
    fsum = math.fsum(float(np.sum(np.asarray(f) ** 2)) * math.exp(-p * log_weight(g)) for g, f in problem.F.items())
    rhs = 2.0 * K * K / M * fsum if M > 0 else math.inf
    return NormBoundReport(lhs, rhs, M, lhs <= rhs)


def ou_polynomial_eigs(c: float, coeffs: Sequence[float], truncation: Truncation) -> EigenFamily:
    """``r_alpha = c P(|alpha|)`` with ``P`` given by ascending coefficients ``p_0, p_1, ...``."""
    coeffs = np.asarray(coeffs, dtype=float)
    return EigenFamily(lambda a: c * float(np.polynomial.polynomial.polyval(len(a), coeffs)), truncation)


def dense_solve(problem: StationaryProblem) -> dict[MultiIndex, np.ndarray]:
    """Assemble all coefficient equations into one block system and solve it directly."""
    order = list(problem.truncation)
    d = problem.dim
    pos = {g: i for i, g in enumerate(order)}
    n = len(order) * d
    L = np.zeros((n, n))
    rhs = np.zeros(n)
    for g in order:
        i = pos[g] * d
        L[i:i + d, i:i + d] = -problem.system(g)
        for beta, op in problem.B.shifted():
            rest = g.sub(beta)
            if rest is not None:
                j = pos[rest] * d
                L[i:i + d, j:j + d] += op.matrix
        if g in problem.F.coeffs:
            rhs[i:i + d] = -np.asarray(problem.F[g])
    x = np.linalg.solve(L, rhs)
    return {g: x[pos[g] * d:(pos[g] + 1) * d] for g in order}
