"""Propagator solver for ``dU/dt = A U + B<>U + F``, ``U(0) = U0``, on a truncation.

Chaos coefficients are solved in level order.  The ``B_0`` part of the
Wick term is folded into each generator ``G_alpha = A_alpha + B_0``; every
other Wick term only involves strictly smaller indices, so each ``u_alpha``
solves an ordinary linear ODE with a known forcing

    g_alpha = sum_{0 < beta <= alpha} B_beta u_{alpha - beta} + f_alpha.

The default time stepper is an exponential integrator: on each step the
forcing is replaced by its cubic Hermite interpolant (values and time
derivatives at both ends) and the variation-of-constants integral is
evaluated exactly with phi-functions of ``h G_alpha``.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .chaos import ChaosExpansion, hermite_fn, hermite_fn_deriv
from .errors import DegenerateRateError, GridTooCoarseWarning, TruncationDomainError
from .multiindex import MultiIndex, Truncation, log_weight
from .operators import (CoordinatewiseFamily, SemigroupProvider, TimeDependentOp, WickFamily,
                        k_constant, op_norm)

__all__ = [
    "ForcingTerm",
    "CauchyProblem",
    "SolutionProcess",
    "ConvergenceCertificate",
    "c_of_t",
    "choose_t0",
    "solve",
    "derivative",
    "residual",
    "certificate",
    "oracle_solve",
    "grid_check",
    "continuation",
]


class ForcingTerm:
    """One forcing coefficient ``f_alpha`` with its time derivative, as callables of ``t``.

    With ``vectorized`` set, both callables also accept an array of times
    and return shape ``(len(t), dim)``.
    """

    def __init__(self, value: Callable[[float], np.ndarray], deriv: Callable[[float], np.ndarray], dim: int,
                 vectorized: bool = False):
        self.value = value
        self.deriv = deriv
        self.dim = dim
        self.vectorized = vectorized

    @classmethod
    def constant(cls, vec) -> ForcingTerm:
        v = np.array(vec, dtype=float).reshape(-1)
        z = np.zeros_like(v)
        return cls(lambda t: v, lambda t: z, v.size)

    @classmethod
    def profile(cls, vec, g: Callable[[float], float], dg: Callable[[float], float],
                vectorized: bool = False) -> ForcingTerm:
        """``f(t) = g(t) * vec``; set ``vectorized`` when ``g`` and ``dg`` accept arrays."""
        v = np.array(vec, dtype=float).reshape(-1)
        return cls(lambda t: np.multiply.outer(g(t), v), lambda t: np.multiply.outer(dg(t), v), v.size, vectorized)

    @classmethod
    def hermite(cls, vec, k: int) -> ForcingTerm:
        """``f(t) = xi_k(t) * vec``, the time white-noise coefficient of mode ``k``."""
        v = np.array(vec, dtype=float).reshape(-1)
        return cls(lambda t: np.multiply.outer(hermite_fn(k, t), v),
                   lambda t: np.multiply.outer(hermite_fn_deriv(k, t), v), v.size, vectorized=True)

    @classmethod
    def from_samples(cls, grid, values, derivs) -> ForcingTerm:
        """Piecewise cubic Hermite interpolation of sampled ``f`` and ``f'``."""
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float).reshape(len(grid), -1)
        derivs = np.asarray(derivs, dtype=float).reshape(len(grid), -1)
        spline = CubicHermiteSpline(grid, values, derivs, axis=0)
        dspline = spline.derivative()
        return cls(lambda t: spline(t), lambda t: dspline(t), values.shape[1])

    def sample(self, grid) -> tuple[np.ndarray, np.ndarray]:
        if self.vectorized:
            grid = np.asarray(grid, dtype=float)
            shape = (len(grid), self.dim)
            return (np.asarray(self.value(grid), dtype=float).reshape(shape),
                    np.asarray(self.deriv(grid), dtype=float).reshape(shape))
        vals = np.array([np.asarray(self.value(t), dtype=float).reshape(self.dim) for t in grid])
        ders = np.array([np.asarray(self.deriv(t), dtype=float).reshape(self.dim) for t in grid])
        return vals, ders


@dataclass
class CauchyProblem:
    """Data of the truncated Cauchy problem.

    ``M`` and ``w`` declare the uniform bound ``|exp(t A_alpha)| <= M exp(w t)``.
    ``n_steps`` is the number of uniform steps on ``[0, T]``.
    """

    A: CoordinatewiseFamily
    B: WickFamily
    U0: ChaosExpansion
    F: Mapping[MultiIndex, ForcingTerm]
    T: float
    p: float
    truncation: Truncation
    n_steps: int = 256
    M: float = 1.0
    w: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("the horizon T must be positive")
        if self.n_steps < 1:
            raise ValueError("need at least one time step")
        if self.U0.kind != "vector":
            raise ValueError("U0 must be a vector-kind expansion")
        if self.U0.dim != self.B.dim:
            raise ValueError("U0 and B have different state dimensions")
        for alpha in list(self.U0.support()) + list(self.F):
            if alpha not in self.truncation:
                raise TruncationDomainError(f"data coefficient {alpha} lies outside {self.truncation}")
        for alpha, f in self.F.items():
            if f.dim != self.dim:
                raise ValueError(f"forcing at {alpha} has dimension {f.dim}, expected {self.dim}")

    @property
    def dim(self) -> int:
        return self.B.dim

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)

    def generator(self, alpha: MultiIndex) -> np.ndarray:
        return self.A[alpha].matrix + self.B.b0.matrix

    def replace(self, **changes) -> CauchyProblem:
        kw = {k: getattr(self, k) for k in ("A", "B", "U0", "F", "T", "p", "truncation", "n_steps", "M", "w", "name")}
        kw.update(changes)
        return CauchyProblem(**kw)


@dataclass
class SolutionProcess:
    """Per-index trajectories on the grid.

    ``du`` holds time derivatives from the differentiated mild formula;
    ``segments`` are node-index ranges ``(i0, i1)`` of the restart intervals.
    """

    grid: np.ndarray
    u: dict[MultiIndex, np.ndarray]
    du: dict[MultiIndex, np.ndarray]
    order: list[MultiIndex]
    segments: list[tuple[int, int]]
    method: str
    K: float
    T0: float

    def to_expansion(self, derivative: bool = False) -> ChaosExpansion:
        src = self.du if derivative else self.u
        return ChaosExpansion(src, kind="trajectory", grid=self.grid)

    def sup_norms(self, derivative: bool = False) -> dict[MultiIndex, float]:
        src = self.du if derivative else self.u
        return {a: float(np.max(np.linalg.norm(src[a], axis=1))) for a in self.order}


@dataclass
class ConvergenceCertificate:
    K: float
    M: float
    w: float
    b0_norm: float
    C_T0: float
    T0: float
    segments: int
    c: int
    Q: float
    G: float
    Qp: float
    Gp: float
    Hp: float
    Np: float
    EB: float
    lhs_sup: float
    rhs_sup: float
    lhs_der: float
    rhs_der: float
    rhs_sup_segmentwise: float
    rhs_der_segmentwise: float
    semigroup_ratio: float
    pass_T0: bool
    pass_sup: bool
    pass_der: bool
    Q_k: list[float] = field(default_factory=list)
    Qp_k: list[float] = field(default_factory=list)
    Hp_k: list[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.pass_T0 and self.pass_sup and self.pass_der

    def failures(self) -> list[str]:
        out = []
        if not self.pass_T0:
            out.append(f"C(T0) = {self.C_T0:.6g} is not below 1/({self.c} K^2) = {1 / (self.c * self.K ** 2):.6g}")
        if not self.pass_sup:
            out.append(f"sup bound fails: {self.lhs_sup:.6g} > {self.rhs_sup:.6g}")
        if not self.pass_der:
            out.append(f"derivative bound fails: {self.lhs_der:.6g} > {self.rhs_der:.6g}")
        return out

    def to_dict(self) -> dict:
        keys = ("K", "M", "w", "b0_norm", "C_T0", "T0", "segments", "c", "Q", "G", "Qp", "Gp", "Hp", "Np", "EB",
                "lhs_sup", "rhs_sup", "lhs_der", "rhs_der", "rhs_sup_segmentwise", "rhs_der_segmentwise",
                "semigroup_ratio", "pass_T0", "pass_sup", "pass_der", "Q_k", "Qp_k", "Hp_k")
        out = {k: getattr(self, k) for k in keys}
        out["pass"] = self.passed
        return out


def c_of_t(t: float, M: float, w: float, b0norm: float) -> float:
    """``C(t) = M^2 / rho^2 (exp(rho t) - 1)^2`` with ``rho = w + M |B_0|``.

    At ``rho = 0`` the limit ``M^2 t^2`` is used; ``rho < 0`` is rejected.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    rho = w + M * b0norm
    if rho < 0:
        raise DegenerateRateError(f"growth rate w + M|B_0| = {rho} is negative")
    if rho == 0:
        return M * M * t * t
    return (M / rho * math.expm1(rho * t)) ** 2


def choose_t0(K: float, M: float, w: float, b0norm: float, T: float, c: int = 5) -> float:
    """``min(T, 0.95 t*)`` where ``C(t*) = 1/(c K^2)``; ``T`` when ``K = 0``."""
    if K == 0:
        return T
    target = 1.0 / (c * K * K)
    hi = 1.0
    while c_of_t(hi, M, w, b0norm) <= target:
        hi *= 2.0
    t_star = brentq(lambda t: c_of_t(t, M, w, b0norm) - target, 0.0, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps)
    return min(T, 0.95 * t_star)


def _segments(n_steps: int, T: float, T0: float, forced: bool) -> list[tuple[int, int]]:
    """Node-index ranges covering the grid, each at most ``T0`` long after snapping."""
    h = T / n_steps
    if forced:
        bounds = [0]
        k = 1
        while k * T0 < T - 1e-12 * T:
            bounds.append(int(round(k * T0 / h)))
            k += 1
        bounds.append(n_steps)
        bounds = sorted(set(bounds))
    else:
        l = max(1, math.ceil(T / T0 - 1e-12))
        while True:
            if l > n_steps:
                raise ValueError(f"grid with {n_steps} steps cannot resolve segments of length {T0:.4g}")
            bounds = sorted(set(int(round(k * n_steps / l)) for k in range(l + 1)))
            if max(b - a for a, b in zip(bounds, bounds[1:])) * h <= T0 * (1 + 1e-12):
                break
            l += 1
    return list(zip(bounds, bounds[1:]))


class _Context:
    """Sampled data shared by all coefficient solves of one problem."""

    def __init__(self, problem: CauchyProblem):
        self.problem = problem
        self.grid = problem.grid
        self.h = problem.T / problem.n_steps
        d = problem.dim
        self.zero = np.zeros((len(self.grid), d))
        self.f = {a: ft.sample(self.grid) for a, ft in problem.F.items()}
        self.wick = []
        for beta, op in problem.B.shifted():
            if isinstance(op, TimeDependentOp):
                mats, dmats = op.sample(self.grid)
                self.wick.append((beta, mats, dmats))
            else:
                self.wick.append((beta, op.matrix, None))

    def forcing(self, alpha: MultiIndex, u: Mapping, du: Mapping) -> tuple[np.ndarray, np.ndarray]:
        """``g_alpha`` and ``g_alpha'`` on the grid from already-solved lower coefficients."""
        fv, fd = self.f.get(alpha, (self.zero, self.zero))
        g, dg = fv.copy(), fd.copy()
        for beta, mats, dmats in self.wick:
            gamma = alpha.sub(beta)
            if gamma is None:
                continue
            ug, dug = u[gamma], du[gamma]
            if dmats is None:
                g += ug @ mats.T
                dg += dug @ mats.T
            else:
                g += np.einsum("nij,nj->ni", mats, ug)
                dg += np.einsum("nij,nj->ni", mats, dug) + np.einsum("nij,nj->ni", dmats, ug)
        return g, dg


def _exp_steps(S: SemigroupProvider, h: float, u0: np.ndarray, g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """March ``u' = G u + g`` across the nodes of ``g`` with cubic Hermite forcing."""
    phi = S.phi(h, 4)
    E = phi[0]
    P = [h * phi[1], h ** 2 * phi[2], 2 * h ** 3 * phi[3], 6 * h ** 4 * phi[4]]
    g0, g1, d0, d1 = g[:-1], g[1:], dg[:-1], dg[1:]
    slope = (g1 - g0) / h
    c2 = (3 * slope - 2 * d0 - d1) / h
    c3 = (d0 + d1 - 2 * slope) / h ** 2
    inc = g0 @ P[0].T + d0 @ P[1].T + c2 @ P[2].T + c3 @ P[3].T
    out = np.empty((len(g), len(u0)))
    out[0] = u0
    ET = E.T
    for n in range(len(inc)):
        out[n + 1] = out[n] @ ET + inc[n]
    return out


def _trapezoid_segment(S: SemigroupProvider, h: float, u0: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``S_t u0 + int_0^t S_{t-s} g(s) ds`` at every node, by composite trapezoid."""
    n = len(g)
    E = S.propagator(h)
    pows = np.empty((n, len(u0), len(u0)))
    pows[0] = np.eye(len(u0))
    for k in range(1, n):
        pows[k] = E @ pows[k - 1]
    out = np.empty((n, len(u0)))
    out[0] = u0
    for j in range(1, n):
        terms = np.einsum("kab,kb->ka", pows[j::-1], g[: j + 1])
        integral = h * (terms.sum(axis=0) - 0.5 * (terms[0] + terms[-1]))
        out[j] = pows[j] @ u0 + integral
    return out


def _ds1_segment(S: SemigroupProvider, h: float, G: np.ndarray, v0: np.ndarray, g: np.ndarray,
                 dg: np.ndarray) -> np.ndarray:
    """Differentiated mild formula ``S_t (G v0 + g(0)) + int S_{t-s} g'(s) ds`` on one segment."""
    phi = S.phi(h, 2)
    E, P1, P2 = phi[0], h * phi[1], h * phi[2]
    inc = dg[:-1] @ (P1 - P2).T + dg[1:] @ P2.T
    out = np.empty_like(g)
    out[0] = G @ v0 + g[0]
    ET = E.T
    for n in range(len(inc)):
        out[n + 1] = out[n] @ ET + inc[n]
    return out


def _levels(order: list[MultiIndex]) -> list[list[MultiIndex]]:
    levels: dict[int, list[MultiIndex]] = {}
    for a in order:
        levels.setdefault(len(a), []).append(a)
    return [levels[k] for k in sorted(levels)]


def solve(problem: CauchyProblem, method: str = "exponential", t0: float | None = None, threads: int = 1,
          check_grid: bool = False, grid_tol: float = 1e-6) -> SolutionProcess:
    """Solve every coefficient of the truncation, level by level.

    ``method`` is ``"exponential"`` (default, O(N) per coefficient) or
    ``"trapezoid"`` (the full convolution integral by composite trapezoid,
    O(N^2), kept for verification).  Segments of length at most ``T0``
    are chosen from the certificate constant unless ``t0`` forces restart
    points at its multiples.
    """
    if method not in ("exponential", "trapezoid"):
        raise ValueError(f"unknown method {method!r}")
    ctx = _Context(problem)
    K = k_constant(problem.B, problem.p, ctx.grid)
    c = 6 if problem.B.time_dependent else 5
    b0 = problem.B.b0.norm
    if t0 is None:
        T0 = choose_t0(K, problem.M, problem.w, b0, problem.T, c)
        segs = _segments(problem.n_steps, problem.T, T0, forced=False)
    else:
        segs = _segments(problem.n_steps, problem.T, t0, forced=True)
    T0_eff = max(b - a for a, b in segs) * ctx.h
    order = list(problem.truncation)
    u: dict[MultiIndex, np.ndarray] = {}
    du_ode: dict[MultiIndex, np.ndarray] = {}
    du: dict[MultiIndex, np.ndarray] = {}

    def one(alpha: MultiIndex):
        G = problem.generator(alpha)
        S = SemigroupProvider(G)
        g, dg = ctx.forcing(alpha, u, du_ode)
        traj = np.empty_like(g)
        v0 = np.array(problem.U0[alpha], dtype=float)
        traj[0] = v0
        for i0, i1 in segs:
            if method == "exponential":
                traj[i0:i1 + 1] = _exp_steps(S, ctx.h, traj[i0], g[i0:i1 + 1], dg[i0:i1 + 1])
            else:
                traj[i0:i1 + 1] = _trapezoid_segment(S, ctx.h, traj[i0], g[i0:i1 + 1])
        # DS1 uses derivatives of the lower coefficients from the same formula
        _, dg_ds1 = ctx.forcing(alpha, u, du)
        dtraj = np.empty_like(g)
        for i0, i1 in segs:
            dtraj[i0:i1 + 1] = _ds1_segment(S, ctx.h, G, traj[i0], g[i0:i1 + 1], dg_ds1[i0:i1 + 1])
        return alpha, traj, traj @ G.T + g, dtraj

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for level in _levels(order):
            results = pool.map(one, level) if pool is not None else map(one, level)
            for alpha, traj, ode_d, dtraj in results:
                u[alpha], du_ode[alpha], du[alpha] = traj, ode_d, dtraj
    finally:
        if pool is not None:
            pool.shutdown()
    for store in (u, du):
        for arr in store.values():
            arr.setflags(write=False)
    sol = SolutionProcess(ctx.grid, u, du, order, segs, method, K, T0_eff)
    if check_grid:
        grid_check(problem, sol, tol=grid_tol, t0=t0)
    return sol


def grid_check(problem: CauchyProblem, solution: SolutionProcess, tol: float = 1e-6,
               t0: float | None = None) -> float:
    """Relative change of the solution when the step count is halved; warns above ``tol``."""
    if problem.n_steps % 2:
        raise ValueError("grid check needs an even number of steps")
    coarse = solve(problem.replace(n_steps=problem.n_steps // 2), method=solution.method, t0=t0)
    scale = max([1e-300] + [float(np.max(np.abs(v))) for v in solution.u.values()])
    diff = max([0.0] + [float(np.max(np.abs(solution.u[a][::2] - coarse.u[a]))) for a in solution.order]) / scale
    if diff > tol:
        warnings.warn(f"halving the grid changes the solution by {diff:.3g} (relative), above {tol:.3g}",
                      GridTooCoarseWarning, stacklevel=2)
    return diff


def continuation(problem: CauchyProblem, solution: SolutionProcess, node: int) -> CauchyProblem:
    """The problem restarted at grid node ``node``: data ``v0 = u(t_node)`` and forcing ``f(t_node + t)``.

    The returned problem lives on ``[0, T - t_node]`` with the same step size.
    """
    if not 0 < node < problem.n_steps:
        raise ValueError("restart node must be interior")
    ts = float(solution.grid[node])

    def shift_f(ft: ForcingTerm) -> ForcingTerm:
        return ForcingTerm(lambda t: ft.value(t + ts), lambda t: ft.deriv(t + ts), ft.dim, ft.vectorized)

    ops = {}
    for beta, op in problem.B.ops.items():
        if isinstance(op, TimeDependentOp):
            op = TimeDependentOp(lambda t, op=op: op.value(t + ts), lambda t, op=op: op.deriv(t + ts), op.dim)
        ops[beta] = op
    U0 = ChaosExpansion({a: solution.u[a][node] for a in solution.order}, kind="vector", dim=problem.dim)
    return problem.replace(B=WickFamily(ops, dim=problem.dim), U0=U0,
                           F={a: shift_f(ft) for a, ft in problem.F.items()},
                           T=problem.T - ts, n_steps=problem.n_steps - node)


def derivative(problem: CauchyProblem, solution: SolutionProcess) -> dict[MultiIndex, np.ndarray]:
    """Time derivatives from the differentiated mild formula, recomputed from ``solution.u``."""
    ctx = _Context(problem)
    out: dict[MultiIndex, np.ndarray] = {}
    for alpha in solution.order:
        G = problem.generator(alpha)
        S = SemigroupProvider(G)
        g, dg = ctx.forcing(alpha, solution.u, out)
        traj = solution.u[alpha]
        dtraj = np.empty_like(g)
        for i0, i1 in solution.segments:
            dtraj[i0:i1 + 1] = _ds1_segment(S, ctx.h, G, traj[i0], g[i0:i1 + 1], dg[i0:i1 + 1])
        out[alpha] = dtraj
    return out


@dataclass
class ResidualReport:
    max_by_alpha: dict[MultiIndex, float]
    weighted: float

    @property
    def max(self) -> float:
        return max(self.max_by_alpha.values(), default=0.0)


def residual(problem: CauchyProblem, solution: SolutionProcess) -> ResidualReport:
    """``du_alpha - G_alpha u_alpha - sum_{0<beta<=alpha} B_beta u_{alpha-beta} - f_alpha`` at interior nodes."""
    ctx = _Context(problem)
    per = {}
    for alpha in solution.order:
        g, _ = ctx.forcing(alpha, solution.u, solution.du)
        r = solution.du[alpha] - solution.u[alpha] @ problem.generator(alpha).T - g
        per[alpha] = float(np.max(np.linalg.norm(r[1:-1], axis=1))) if len(r) > 2 else 0.0
    weighted = math.fsum(v * v * math.exp(-problem.p * log_weight(a)) for a, v in per.items())
    return ResidualReport(per, weighted)


def _wsum(values: Mapping[MultiIndex, float], p: float) -> float:
    # sum_alpha values_alpha (2N)^(-p alpha)
    return math.fsum(v * math.exp(-p * log_weight(a)) for a, v in values.items())


def certificate(problem: CauchyProblem, solution: SolutionProcess, bound_samples: int = 8) -> ConvergenceCertificate:
    """All constants of the a priori estimate and both partial-sum inequalities.

    Suprema are taken over grid nodes.  ``Q``, ``Q'`` and ``H'`` are maxima
    over the restart segments.  ``rhs_*_segmentwise`` sum the per-segment
    right-hand sides instead, which bounds the left-hand side without
    exchanging the sum over indices with the maximum over segments.
    """
    p, M, w = problem.p, problem.M, problem.w
    K = solution.K
    b0 = problem.B.b0.norm
    rho = w + M * b0
    td = problem.B.time_dependent
    c = 6 if td else 5
    T0 = solution.T0
    C = c_of_t(T0, M, w, b0)
    growth = M * M * math.exp(2 * rho * T0)
    order = solution.order
    ctx = _Context(problem)
    sup_f = {a: float(np.max(np.sum(ctx.f[a][0] ** 2, axis=1))) for a in ctx.f}
    sup_df = {a: float(np.max(np.sum(ctx.f[a][1] ** 2, axis=1))) for a in ctx.f}
    G_const = C * _wsum(sup_f, p)
    Gp = C * _wsum(sup_df, p)
    Np = growth * _wsum(sup_f, p)
    gens = {a: problem.generator(a) for a in order}
    Q_k, Qp_k, Hp_k = [], [], []
    for i0, _ in solution.segments:
        v0 = {a: solution.u[a][i0] for a in order}
        Q_k.append(growth * _wsum({a: float(v @ v) for a, v in v0.items()}, p))
        Qp_k.append(growth * _wsum({a: float(np.sum((gens[a] @ v) ** 2)) for a, v in v0.items()}, p))
        Hp_k.append(K * K * Q_k[-1])
    Q, Qp, Hp = max(Q_k), max(Qp_k), max(Hp_k)
    sup_u = {a: float(np.max(np.sum(solution.u[a] ** 2, axis=1))) for a in order}
    sup_du = {a: float(np.max(np.sum(solution.du[a] ** 2, axis=1))) for a in order}
    lhs_sup = _wsum(sup_u, p)
    lhs_der = _wsum(sup_du, p)
    den_sup = 1.0 / 3.0 - C * K * K
    den_der = 1.0 / c - C * K * K
    pass_T0 = K == 0 or C < 1.0 / (c * K * K)
    if den_sup > 0:
        rhs_sup = (Q + G_const) / den_sup
        rhs_sup_seg = math.fsum((q + G_const) / den_sup for q in Q_k)
    else:
        rhs_sup = rhs_sup_seg = math.inf
    # time-dependent B adds the B' u summand, bounded through the sup estimate
    EB = C * K * K * rhs_sup if td else 0.0
    if den_der > 0:
        rhs_der = (Qp + Gp + Hp + Np + EB) / den_der
        rhs_der_seg = math.fsum((qp + Gp + hp + Np + EB) / den_der for qp, hp in zip(Qp_k, Hp_k))
    else:
        rhs_der = rhs_der_seg = math.inf
    ratio = 0.0
    times = np.linspace(0.0, T0, bound_samples + 1)[1:]
    for a in order:
        S = SemigroupProvider(problem.A[a])
        ratio = max(ratio, max(op_norm(S.propagator(t)) / (M * math.exp(w * t)) for t in times))
    if ratio > 1 + 1e-10:
        warnings.warn(f"declared bound M exp(wt) is exceeded by factor {ratio:.6g}", stacklevel=2)
    return ConvergenceCertificate(
        K=K, M=M, w=w, b0_norm=b0, C_T0=C, T0=T0, segments=len(solution.segments), c=c,
        Q=Q, G=G_const, Qp=Qp, Gp=Gp, Hp=Hp, Np=Np, EB=EB,
        lhs_sup=lhs_sup, rhs_sup=rhs_sup, lhs_der=lhs_der, rhs_der=rhs_der,
        rhs_sup_segmentwise=rhs_sup_seg, rhs_der_segmentwise=rhs_der_seg, semigroup_ratio=ratio,
        pass_T0=pass_T0, pass_sup=lhs_sup <= rhs_sup, pass_der=lhs_der <= rhs_der,
        Q_k=Q_k, Qp_k=Qp_k, Hp_k=Hp_k,
    )


def oracle_solve(problem: CauchyProblem, refine: int = 4, max_size: int = 5000) -> SolutionProcess:
    """Assemble the coupled block lower-triangular system and integrate it with classical RK4.

    The step is the grid step divided by ``refine``; forcing and
    time-dependent Wick members are evaluated at every stage time.
    """
    order = list(problem.truncation)
    d = problem.dim
    n = len(order) * d
    if n > max_size:
        raise ValueError(f"oracle system of size {n} exceeds the guard {max_size}")
    pos = {a: i for i, a in enumerate(order)}
    L0 = np.zeros((n, n))
    td_blocks = []
    for a in order:
        i = pos[a] * d
        L0[i:i + d, i:i + d] = problem.generator(a)
        for beta, op in problem.B.shifted():
            gamma = a.sub(beta)
            if gamma is None:
                continue
            j = pos[gamma] * d
            if isinstance(op, TimeDependentOp):
                td_blocks.append((i, j, op))
            else:
                L0[i:i + d, j:j + d] += op.matrix

    def lin(t):
        if not td_blocks:
            return L0
        L = L0.copy()
        for i, j, op in td_blocks:
            L[i:i + d, j:j + d] += op.value(t)
        return L

    def forcing(t):
        out = np.zeros(n)
        for a, ft in problem.F.items():
            out[pos[a] * d:(pos[a] + 1) * d] = np.asarray(ft.value(t), dtype=float).reshape(d)
        return out

    def rhs(t, y):
        return lin(t) @ y + forcing(t)

    grid = problem.grid
    h = (grid[1] - grid[0]) / refine
    y = np.concatenate([np.asarray(problem.U0[a], dtype=float) for a in order])
    ys = np.empty((len(grid), n))
    dys = np.empty((len(grid), n))
    ys[0] = y
    dys[0] = rhs(0.0, y)
    for k in range(len(grid) - 1):
        t = grid[k]
        for s in range(refine):
            ts = t + s * h
            k1 = rhs(ts, y)
            k2 = rhs(ts + h / 2, y + h / 2 * k1)
            k3 = rhs(ts + h / 2, y + h / 2 * k2)
            k4 = rhs(ts + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[k + 1] = y
        dys[k + 1] = rhs(grid[k + 1], y)
    u = {a: ys[:, pos[a] * d:(pos[a] + 1) * d] for a in order}
    du = {a: dys[:, pos[a] * d:(pos[a] + 1) * d] for a in order}
    return SolutionProcess(grid, u, du, order, [(0, len(grid) - 1)], "rk4", k_constant(problem.B, problem.p, grid),
                           problem.T)
