"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.  Every tolerance is pinned here; nothing is deferred.
"""

import time

import numpy as np
import pytest

from yosidalab.operators import (
    DelayGenerator,
    DenseMatrix,
    NonlinearMap,
    SpectralDiagonal,
    spectrum,
    vector,
)
from yosidalab.yosida import bounded_oracle_distance, yosida_distance
from yosidalab.semigroup import closeness_bound_check, time_one_map
from yosidalab.dichotomy import (
    check_hyperbolic,
    persistence_floor,
    roughness_sweep,
    spectral_split,
)
from yosidalab.errors import NotHyperbolic
from yosidalab.nonlinear import (
    SemilinearSystem,
    accretivity_certificate,
    crandall_liggett_evolve,
    lip_phi_estimate,
)
from yosidalab.manifolds import (
    build_context,
    compute_stable_manifold,
    compute_unstable_manifold,
    lip_shrink_study,
    random_lipschitz_graph,
)
from yosidalab.scenarios import build_system, run_scenario, scenario_document


class Criterion:
    def __init__(self, number, label, budget_s):
        self.number = number
        self.label = label
        self.budget = budget_s
        self.start = time.perf_counter()
        self.notes = []

    def note(self, text):
        self.notes.append(text)

    def finish(self, passed):
        elapsed = time.perf_counter() - self.start
        status = "PASS" if passed and elapsed <= self.budget else "FAIL"
        detail = "; ".join(self.notes)
        print(f"[{status}] criterion {self.number} ({self.label}): {elapsed:.1f}s <= {self.budget}s; {detail}")
        assert passed, f"criterion {self.number}: {detail}"
        assert elapsed <= self.budget, f"criterion {self.number} exceeded its runtime budget"


def test_criterion_1_bounded_oracle():
    crit = Criterion(1, "bounded-operator distance oracle", 60)
    rng = np.random.default_rng(1001)
    worst = 0.0
    for k in range(200):
        n = 2 + k % 7
        a = DenseMatrix(rng.uniform(-1, 1, (n, n)))
        b = DenseMatrix(rng.uniform(-1, 1, (n, n)))
        oracle = bounded_oracle_distance(a, b)
        est = yosida_distance(a, b).tail_sup
        worst = max(worst, abs(est - oracle) / (1.0 + oracle))
    crit.note(f"worst relative deviation {worst:.2e} <= 1e-4 over 200 pairs")
    crit.finish(worst <= 1e-4)


def test_criterion_2_bounded_perturbation_bound():
    crit = Criterion(2, "bounded-perturbation distance bound", 60)
    from yosidalab.yosida import bounded_perturbation_bound_check

    rng = np.random.default_rng(2002)
    violations = 0
    ratios = []
    for k in range(100):
        n = 4
        normal = k % 2 == 0
        if normal:
            q, _ = np.linalg.qr(rng.normal(size=(n, n)))
            a = DenseMatrix(q @ np.diag(rng.uniform(-2.0, 1.0, n)) @ q.T)
        else:
            a = DenseMatrix(np.triu(rng.uniform(-1.5, 1.5, (n, n))))
        c_mat = rng.uniform(-1, 1, (n, n))
        c_mat *= rng.uniform(0.01, 0.5) / np.linalg.norm(c_mat, 2)
        rep = bounded_perturbation_bound_check(a, DenseMatrix(c_mat))
        if not rep["pass"]:
            violations += 1
        if normal:
            ratios.append(rep["d_estimate"] / rep["c_norm"])
    ratio_ok = all(0.99 <= r <= 1.01 for r in ratios)
    crit.note(f"violations {violations}/100; normal ratios in [{min(ratios):.5f}, {max(ratios):.5f}]")
    crit.finish(violations == 0 and ratio_ok)


def test_criterion_3_delay_example():
    crit = Criterion(3, "delay-generator distance vs coefficient gap", 120)
    ok = True
    for a, b in ((1.0, 0.0), (0.5, -0.5), (2.0, 1.0)):
        est = yosida_distance(DelayGenerator(a, 256), DelayGenerator(b, 256)).tail_sup
        gap = abs(a - b)
        in_bracket = 0.9 * gap <= est <= 1.1 * gap
        under_claim = est <= 2.0 * gap * (1.0 + 1e-9)
        ok = ok and in_bracket and under_claim
        crit.note(f"({a},{b}): {est:.6f} in [0.9,1.1]*{gap} and <= {2*gap}")
    crit.finish(ok)


def test_criterion_4_semigroup_closeness():
    crit = Criterion(4, "semigroup closeness inequality", 60)
    a = DenseMatrix(np.diag([-1.0, 1.0]))
    b = DenseMatrix(np.diag([-1.0, 1.0]) + 0.1 * np.eye(2))
    rep = closeness_bound_check(a, b, 1.0)
    frozen = (np.exp(0.1) - 1.0) * np.exp(1.0)
    commuting_ok = abs(rep["lhs"] - frozen) <= 1e-9
    crit.note(f"commuting lhs {rep['lhs']:.12f} vs {frozen:.12f}")
    rng = np.random.default_rng(4004)
    violations = 0
    for _ in range(100):
        m = rng.uniform(-1, 1, (6, 6))
        gap = rng.uniform(-1, 1, (6, 6))
        gap *= rng.uniform(0.02, 1.0) * 0.2 / np.linalg.norm(gap, 2)
        pair = DenseMatrix(m), DenseMatrix(m + gap)
        for t in (0.5, 1.0):
            if not closeness_bound_check(pair[0], pair[1], t)["pass"]:
                violations += 1
    crit.note(f"violations {violations}/200 trials at t in {{0.5, 1}}")
    crit.finish(commuting_ok and violations == 0)


def test_criterion_5_hyperbolicity_and_roughness():
    crit = Criterion(5, "hyperbolicity oracle and roughness persistence", 120)
    rng = np.random.default_rng(5005)
    disagreements = 0
    for _ in range(500):
        m = rng.uniform(-1, 1, (6, 6)) * rng.uniform(0.3, 1.5)
        fast = check_hyperbolic(DenseMatrix(m), 1e-6)
        brute = bool(np.all(np.abs(np.abs(np.roots(np.poly(m))) - 1.0) > 1e-6))
        if fast != brute:
            disagreements += 1
    crit.note(f"oracle disagreements {disagreements}/500")

    min_prefix = None
    for _ in range(10):
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        base = DenseMatrix(q @ np.diag([-1.2, -0.6, 0.5, 1.1]) @ q.T)
        d = rng.uniform(-1, 1, (4, 4))
        d /= np.linalg.norm(d, 2)
        rep = roughness_sweep(base, DenseMatrix(d), [0.02, 0.05, 0.1, 0.15, 0.2])
        prefix = rep["persistent_prefix"]
        min_prefix = prefix if min_prefix is None else min(min_prefix, prefix)
    crit.note(f"min persistent prefix {min_prefix} >= 1 over 10 sweeps")

    a = DenseMatrix(np.diag([-1.0, 1.0]))
    gap = min(abs(abs(z) - 1.0) for z in spectrum(time_one_map(a)))
    floor = persistence_floor(1.0, 1.0, gap)
    survived = 0
    for _ in range(50):
        d = rng.uniform(-1, 1, (2, 2))
        d /= np.linalg.norm(d, 2)
        eps = rng.uniform(0.05, 0.95) * floor
        perturbed = DenseMatrix(np.diag([-1.0, 1.0]) + eps * d)
        if check_hyperbolic(time_one_map(perturbed), 1e-9):
            survived += 1
    crit.note(f"persistence floor survivals {survived}/50")
    crit.finish(disagreements == 0 and min_prefix >= 1 and survived == 50)


def test_criterion_6_crandall_liggett():
    crit = Criterion(6, "implicit-step nonlinear semigroup", 120)
    rec = crandall_liggett_evolve(SpectralDiagonal([-1.0]), 1.0, 10, vector([1.0]))
    scalar_err = abs(rec.final().coordinates[0] - (1.1) ** -10)
    crit.note(f"scalar linear error {scalar_err:.2e} <= 1e-12")

    cubic = NonlinearMap(
        evaluator=lambda u: -np.asarray(u, float) ** 3,
        jacobian=lambda u: (-3.0 * np.asarray(u, float) ** 2)[..., :, None] * np.eye(1),
        name="cubic",
    )
    exact = 3.0**-0.5
    ns = [8, 16, 32, 64, 128, 256, 512]
    errs = [
        abs(crandall_liggett_evolve(cubic, 1.0, n, vector([1.0])).final().coordinates[0] - exact)
        for n in ns
    ]
    order = -np.polyfit(np.log(ns), np.log(errs), 1)[0]
    crit.note(f"cubic observed order {order:.3f} >= 0.9")

    cert = accretivity_certificate(cubic, 0.0, 1000, 2.0, seed=6006)
    crit.note(f"certificate worst ratio {cert.worst_ratio:.9f}, pass={cert.passed}")
    crit.finish(scalar_err <= 1e-12 and order >= 0.9 and cert.passed)


def test_criterion_7_lipschitz_closeness():
    crit = Criterion(7, "phi Lipschitz closeness bound", 300)
    ok = True
    for name in ("saddle-quadratic", "heat-semilinear", "cubic-contraction"):
        doc = scenario_document(name)
        system = build_system(doc["system"])
        rep = lip_phi_estimate(system, 1.0, system.r0 / 2.0, n_pairs=12, seed=7007)
        strict = rep["lip_hat"] <= rep["bound"] * 1.05
        ok = ok and strict
        crit.note(f"{name}: lip_hat {rep['lip_hat']:.4e} <= 1.05*bound {rep['bound']:.4e}")
    crit.finish(ok)


def test_criterion_8_manifolds():
    crit = Criterion(8, "local invariant manifolds", 300)
    doc = scenario_document("saddle-quadratic")
    system = build_system(doc["system"])

    graph = compute_unstable_manifold(system, tol=1e-10, flow_steps=512)
    xi = graph.anchor_grid[:, 0]
    sup_err = float(np.max(np.abs(graph.values[:, 0] - xi**2 / 3.0)))
    crit.note(f"sup|Phi - x^2/3| = {sup_err:.2e} <= 1e-3 on |x| <= 0.25")
    resid_ok = graph.invariance_residual <= 1e-6
    crit.note(f"invariance residual {graph.invariance_residual:.2e} <= 1e-6")

    stable = compute_stable_manifold(system, tol=1e-10, flow_steps=512)
    psi_sup = float(np.max(np.abs(stable.values)))
    crit.note(f"stable graph sup {psi_sup:.2e} <= 1e-6")

    ctx = build_context(system, flow_steps=512)
    alt = compute_unstable_manifold(
        system, tol=1e-10, flow_steps=512, initial=random_lipschitz_graph(ctx, "KerP", 0.1, seed=8008)
    )
    uniq_gap = float(np.max(np.abs(graph.values - alt.values)))
    crit.note(f"uniqueness gap {uniq_gap:.2e} <= 1e-8")

    shrink = lip_shrink_study(system, [0.5, 0.25, 0.1, 0.04], flow_steps=512, lip_phi_pairs=6, seed=8009)
    lips = [row["lip_Phi"] for row in shrink["rows"]]
    monotone = all(lips[i + 1] <= lips[i] * 1.10 for i in range(len(lips) - 1))
    crit.note(f"lip_Phi rows {['%.4f' % v for v in lips]} nonincreasing within 10%")
    crit.finish(sup_err <= 1e-3 and resid_ok and psi_sup <= 1e-6 and uniq_gap <= 1e-8 and monotone)


def test_criterion_9_heat_scenario():
    crit = Criterion(9, "spectral heat model dichotomy classification", 30)
    outcomes = {}
    for a in (0.5, -2.5, -4.0):
        diag = SpectralDiagonal([-(n * n) - a for n in range(1, 9)])
        try:
            outcomes[a] = spectral_split(time_one_map(diag)).stable_dim
        except NotHyperbolic:
            outcomes[a] = "NotHyperbolic"
    crit.note(f"a=0.5 -> {outcomes[0.5]}; a=-2.5 -> {outcomes[-2.5]}; a=-4 -> {outcomes[-4.0]}")
    expected = {0.5: 8, -2.5: 7, -4.0: "NotHyperbolic"}
    scenario_fail = run_scenario(scenario_document("heat-semilinear", {"a": -4.0}))
    crit.note(f"resonant scenario overall_pass={scenario_fail.overall_pass} (expected False)")
    crit.finish(outcomes == expected and not scenario_fail.overall_pass)


def test_criterion_10_determinism():
    crit = Criterion(10, "byte-stable reports", 30)
    ok = True
    for name in ("delay-example", "cubic-contraction"):
        first = run_scenario(name).canonical_body().encode()
        second = run_scenario(name).canonical_body().encode()
        same = first == second
        ok = ok and same
        crit.note(f"{name}: {len(first)} canonical bytes, identical={same}")
    crit.finish(ok)
