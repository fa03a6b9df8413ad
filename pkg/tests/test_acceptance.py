"""Acceptance checks.  Each test records one PASS/FAIL line, shown in the terminal summary."""
import math

import numpy as np
from scipy import integrate

from wickflow import cli
from wickflow import evolution as ev
from wickflow import stationary as stn
from wickflow.calculus import malliavin, ou_operator, r_to_skorokhod, skorokhod, wick_skorokhod_bridge
from wickflow.chaos import ChaosExpansion, hermite_fn, wick, wick_power
from wickflow.evolution import CauchyProblem, ForcingTerm
from wickflow.multiindex import MultiIndex, Truncation
from wickflow.operators import (CoordinatewiseFamily, LinearOp, WickFamily, wick_apply, wick_bound_minkowski,
                                wick_bound_shifted)
from wickflow.problems import BUILTINS, build, builtin_config, random_evolution, random_stationary

from conftest import ACCEPTANCE_LINES, random_scalar, random_vector, random_wick

T33 = Truncation(3, 3)


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def scale_of(F: ChaosExpansion) -> float:
    return max((float(np.max(np.abs(c))) for _, c in F.items()), default=1.0)


def test_wick_identities():
    exact = all(wick_power(ChaosExpansion.basis(MultiIndex.unit(k)), n) == ChaosExpansion.basis(MultiIndex.unit(k, n))
                for n in range(0, 7) for k in range(1, 7))
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        F, G, H = (random_scalar(rng, T33) for _ in range(3))
        left, right = wick(wick(F, G), H), wick(F, wick(G, H))
        worst = max(worst, left.max_abs_diff(right) / scale_of(left),
                    wick(F, G).max_abs_diff(wick(G, F)) / scale_of(wick(F, G)))
    record(1, exact and worst <= 1e-12, f"powers exact={exact}, worst relative assoc/comm error {worst:.2e}")


def test_skorokhod_of_malliavin():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        F = random_scalar(rng, Truncation(4, 4))
        worst = max(worst, skorokhod(malliavin(F)).max_abs_diff(ou_operator(F)) / scale_of(F))
    record(2, worst <= 1e-14, f"worst relative error {worst:.2e}")


def test_correspondences():
    rng = np.random.default_rng(3)
    worst_r = worst_b = 0.0
    for _ in range(50):
        d = int(rng.integers(1, 5))
        R = CoordinatewiseFamily({a: LinearOp(rng.normal(size=(d, d))) for a in T33}, truncation=T33)
        u = random_vector(rng, T33, d)
        u = u.like({a: c for a, c in u.items() if a})
        expected = u.like({a: R[a].apply(c) for a, c in u.items()})
        worst_r = max(worst_r, skorokhod(r_to_skorokhod(R, u)).max_abs_diff(expected) / scale_of(expected))
    for _ in range(50):
        d = int(rng.integers(1, 5))
        ms = [LinearOp(rng.normal(size=(d, d))) for _ in range(3)]
        u = random_vector(rng, T33, d)
        via_delta, via_wick = wick_skorokhod_bridge(ms, u)
        direct = wick_apply(WickFamily({MultiIndex.unit(k + 1): m for k, m in enumerate(ms)}, dim=d), u)
        worst_b = max(worst_b, via_delta.max_abs_diff(direct) / scale_of(direct),
                      via_wick.max_abs_diff(direct) / scale_of(direct))
    record(3, max(worst_r, worst_b) <= 1e-14, f"r_to_skorokhod {worst_r:.2e}, bridge {worst_b:.2e}")


def test_langevin_against_quadrature():
    modes = 16
    t = Truncation(1, modes)
    worst = 0.0
    for lam in (0.5, 1.0, 2.0):
        F = {MultiIndex.unit(k): ForcingTerm.hermite([1.0], k) for k in range(1, modes + 1)}
        A = CoordinatewiseFamily.simple(LinearOp.scalar(-lam, 1), truncation=t)
        prob = CauchyProblem(A, WickFamily.zero(1), ChaosExpansion(kind="vector", dim=1), F, T=1.0, p=1.0,
                             truncation=t, n_steps=2048)
        sol = ev.solve(prob)
        for k in range(1, modes + 1):
            u = sol.u[MultiIndex.unit(k)][:, 0]
            for i in range(128, 2049, 128):
                s_end = sol.grid[i]
                ref, _ = integrate.quad(lambda s: math.exp(-lam * (s_end - s)) * hermite_fn(k, s), 0, s_end,
                                        epsabs=1e-14, epsrel=1e-12, limit=200)
                worst = max(worst, abs(u[i] - ref) / abs(ref))
    record(4, worst <= 1e-6, f"worst relative error {worst:.2e} over lambda in (0.5, 1, 2), k <= 16")


def test_ou_heat():
    t = Truncation(4, 6)
    A = CoordinatewiseFamily.from_function(lambda a: LinearOp.scalar(-len(a), 2), truncation=t)
    rng = np.random.default_rng(5)
    U0 = ChaosExpansion({a: rng.normal(size=2) for a in t}, kind="vector", dim=2)
    prob = CauchyProblem(A, WickFamily.zero(2), U0, {}, T=1.0, p=1.0, truncation=t, n_steps=256)
    sol = ev.solve(prob)
    worst = max(float(np.max(np.abs(sol.u[a] - np.exp(-len(a) * sol.grid)[:, None] * U0[a]))) for a in sol.order)
    record(5, worst <= 1e-8, f"worst absolute error {worst:.2e} over {len(sol.order)} indices")


def test_oracle_equivalence():
    worst = 0.0
    for seed in range(20):
        prob = random_evolution(100 + seed, d=4, truncation=Truncation(3, 4), T=1.0)
        sol, ref = ev.solve(prob), ev.oracle_solve(prob)
        scale = max(np.max(np.abs(ref.u[a])) for a in ref.order)
        worst = max(worst, max(np.max(np.abs(sol.u[a] - ref.u[a])) for a in ref.order) / scale)
    record(6, worst <= 1e-6, f"worst sup-over-grid relative error {worst:.2e} on 20 problems")


def test_certificates():
    failures = []
    for name in BUILTINS:
        cfg = builtin_config(name)
        if cfg["type"] != "evolution":
            continue
        prob = build(cfg)
        if not ev.certificate(prob, ev.solve(prob)).passed:
            failures.append(name)
    for seed in range(50):
        prob = random_evolution(200 + seed, time_dependent=seed % 2 == 1)
        cert = ev.certificate(prob, ev.solve(prob))
        if not cert.passed or cert.c != (6 if seed % 2 else 5):
            failures.append(f"random-{200 + seed}")
    record(7, not failures, f"failures: {failures or 'none'}")


def test_wick_bounds():
    rng = np.random.default_rng(8)
    bad_shifted = bad_mink = 0
    for _ in range(100):
        d = int(rng.integers(1, 5))
        p, r, m = rng.choice([0.5, 1.0, 2.0]), rng.choice([0.0, 1.0, 2.5]), rng.choice([1.5, 2.0, 3.0])
        bad_shifted += not wick_bound_shifted(random_wick(rng, T33, d), random_vector(rng, T33, d), p, r, m).passed
    for _ in range(100):
        d = int(rng.integers(1, 5))
        r = rng.choice([0.5, 1.0, 2.0, 4.0])
        bad_mink += not wick_bound_minkowski(random_wick(rng, T33, d), random_vector(rng, T33, d), r).passed
    record(8, bad_shifted == 0 and bad_mink == 0, f"violations: shifted {bad_shifted}/100, minkowski {bad_mink}/100")


def test_stationary():
    worst, bound_failures = 0.0, 0
    for seed in range(20):
        prob = random_stationary(300 + seed, d=3, truncation=T33)
        sol, dense = stn.solve(prob), stn.dense_solve(prob)
        scale = max(np.max(np.abs(v)) for v in dense.values())
        worst = max(worst, max(np.max(np.abs(sol.u[a] - dense[a])) for a in dense) / scale)
        bound_failures += not stn.norm_bound(prob, sol).passed
    demo = stn.solve(build(builtin_config("fredholm_demo")))
    demo_err = abs(float(demo.u[MultiIndex.zero()][0]) - 0.5)
    ok = worst <= 1e-10 and bound_failures == 0 and demo_err <= 1e-12
    record(9, ok, f"dense relative error {worst:.2e}, norm-bound failures {bound_failures}, demo error {demo_err:.1e}")


def test_evolution_invariants():
    problems = []
    # triangularity: perturbing the data at beta leaves every index not above beta untouched
    prob = random_evolution(400)
    base = ev.solve(prob)
    beta = MultiIndex((1, 1))
    rng = np.random.default_rng(10)
    U0 = dict(prob.U0.items())
    U0[beta] = rng.normal(size=prob.dim)
    F = dict(prob.F)
    F[beta] = ForcingTerm.constant(rng.normal(size=prob.dim))
    pert = ev.solve(prob.replace(U0=prob.U0.like(U0), F=F))
    for a in base.order:
        if not beta <= a and np.max(np.abs(base.u[a] - pert.u[a])) > 1e-14:
            problems.append(f"triangularity at {a.serialize()}")
    # superposition in (U0, F)
    other = random_evolution(401)
    g = prob.grid
    q = prob.replace(U0=other.U0, F={a: ForcingTerm.from_samples(g, *f.sample(g)) for a, f in other.F.items()})
    s2 = ev.solve(q)
    combo_F = {}
    for a in set(prob.F) | set(q.F):
        v = np.zeros((len(g), prob.dim))
        dv = np.zeros_like(v)
        for coef, src in ((2.0, prob.F), (-3.0, q.F)):
            if a in src:
                x, dx = src[a].sample(g)
                v, dv = v + coef * x, dv + coef * dx
        combo_F[a] = ForcingTerm.from_samples(g, v, dv)
    combo = ev.solve(prob.replace(U0=2.0 * prob.U0 - 3.0 * q.U0, F=combo_F))
    for a in combo.order:
        expected = 2.0 * base.u[a] - 3.0 * s2.u[a]
        if np.max(np.abs(combo.u[a] - expected)) > 1e-10 * max(1.0, np.max(np.abs(expected))):
            problems.append(f"superposition at {a.serialize()}")
    # a forced restart at T/2 reproduces the single-pass solution
    prob = random_evolution(402, n_steps=256)
    single, split = ev.solve(prob, t0=prob.T), ev.solve(prob, t0=0.5)
    if len(split.segments) != 2:
        problems.append("restart did not split")
    for a in single.order:
        if np.max(np.abs(single.u[a] - split.u[a])) > 1e-8:
            problems.append(f"restart at {a.serialize()}")
    record(10, not problems, f"violations: {problems or 'none'}")


def test_builtin_determinism(tmp_path):
    differing = []
    for name in BUILTINS:
        cmd = "solve-evolution" if builtin_config(name)["type"] == "evolution" else "solve-stationary"
        outs = []
        for run in ("a", "b"):
            out = tmp_path / name / run
            if cli.main([cmd, "--builtin", name, "--out", str(out)]) != 0:
                differing.append(f"{name} exit")
            outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        if outs[0] != outs[1] or not outs[0]:
            differing.append(name)
    record(11, not differing, f"{len(BUILTINS)} builtins, differing: {differing or 'none'}")
