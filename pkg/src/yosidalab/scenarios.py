"""Scenario catalog, named nonlinearities, and the verification check registry.

A scenario is one structured-text document: name, optional semilinear
system, explicit seeds, tolerances, and an ordered list of check ids.  Every
check draws randomness only from seeded substreams derived from the
scenario's master seed, so reports are byte-reproducible.
"""

from __future__ import annotations

import json
import time
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._util import canonical_json, substream
from .errors import NotHyperbolic, ScenarioParseError
from .operators import (
    DelayGenerator,
    DenseMatrix,
    NonlinearMap,
    SpectralDiagonal,
    delay_resolvent,
    apply as op_apply,
    from_document,
    operator_norm,
    spectrum,
    to_document,
    vector,
)
from .reports import VerificationReport
from .semigroup import closeness_bound_check, time_one_map
from .yosida import (
    bounded_oracle_distance,
    bounded_perturbation_bound_check,
    relative_bound_check,
    yosida_distance,
)
from .dichotomy import (
    check_hyperbolic,
    persistence_floor,
    roughness_sweep,
    spectral_split,
)
from .nonlinear import (
    SemilinearSystem,
    accretivity_certificate,
    crandall_liggett_evolve,
    lip_phi_estimate,
)
from .manifolds import (
    build_context,
    compute_stable_manifold,
    compute_unstable_manifold,
    lip_shrink_study,
    random_lipschitz_graph,
)

SCENARIO_SCHEMA = 1


# ---------------------------------------------------------------------------
# named nonlinearities


def _saddle_quadratic(_params):
    def ev(u):
        u = np.asarray(u, float)
        out = np.zeros_like(u)
        out[..., 1] = u[..., 0] ** 2
        return out

    def jac(u):
        u = np.asarray(u, float)
        if u.ndim == 1:
            j = np.zeros((2, 2))
            j[1, 0] = 2.0 * u[0]
            return j
        j = np.zeros((*u.shape, 2))
        j[..., 1, 0] = 2.0 * u[..., 0]
        return j

    return NonlinearMap(evaluator=ev, jacobian=jac, name="saddle_quadratic")


def _coupled_quadratic_3d(_params):
    def ev(u):
        u = np.asarray(u, float)
        out = np.zeros_like(u)
        out[..., 0] = 0.3 * u[..., 2] ** 2
        out[..., 1] = 0.2 * u[..., 0] * u[..., 2]
        return out

    def jac(u):
        u = np.asarray(u, float)
        j = np.zeros((*u.shape, 3))
        j[..., 0, 2] = 0.6 * u[..., 2]
        j[..., 1, 0] = 0.2 * u[..., 2]
        j[..., 1, 2] = 0.2 * u[..., 0]
        return j

    return NonlinearMap(evaluator=ev, jacobian=jac, name="coupled_quadratic_3d")


def _scalar_quadratic(params):
    c = float(params.get("c", 0.1))

    def ev(u):
        return c * np.asarray(u, float) ** 2

    def jac(u):
        u = np.asarray(u, float)
        if u.ndim == 1:
            return np.array([[2.0 * c * u[0]]])
        return (2.0 * c * u)[..., :, None] * np.eye(1)

    return NonlinearMap(evaluator=ev, jacobian=jac, lipschitz_hint=None, name=f"scalar_quadratic({c})")


def _sine_defect(params):
    gamma = float(params.get("gamma", 0.5))

    def ev(u):
        u = np.asarray(u, float)
        return gamma * (np.sin(u) - u)

    def jac(u):
        u = np.asarray(u, float)
        diag = gamma * (np.cos(u) - 1.0)
        if u.ndim == 1:
            return np.diag(diag)
        n = u.shape[-1]
        out = np.zeros((*u.shape, n))
        idx = np.arange(n)
        out[..., idx, idx] = diag
        return out

    return NonlinearMap(evaluator=ev, jacobian=jac, name=f"sine_defect({gamma})")


def _cubic_decay(_params):
    def ev(u):
        return -np.asarray(u, float) ** 3

    def jac(u):
        u = np.asarray(u, float)
        if u.ndim == 1:
            return np.array([[-3.0 * u[0] ** 2]])
        return (-3.0 * u**2)[..., :, None] * np.eye(1)

    return NonlinearMap(evaluator=ev, jacobian=jac, name="cubic_decay")


def _zero_map(params):
    def ev(u):
        return np.zeros_like(np.asarray(u, float))

    def jac(u):
        u = np.asarray(u, float)
        n = u.shape[-1]
        if u.ndim == 1:
            return np.zeros((n, n))
        return np.zeros((*u.shape, n))

    return NonlinearMap(evaluator=ev, jacobian=jac, lipschitz_hint=0.0, name="zero")


NONLINEARITIES = {
    "saddle_quadratic": _saddle_quadratic,
    "coupled_quadratic_3d": _coupled_quadratic_3d,
    "scalar_quadratic": _scalar_quadratic,
    "sine_defect": _sine_defect,
    "cubic_decay": _cubic_decay,
    "zero": _zero_map,
}


def resolve_nonlinearity(doc):
    if isinstance(doc, str):
        name, params = doc, {}
    else:
        name, params = doc.get("name"), doc.get("params", {})
    if name not in NONLINEARITIES:
        raise ScenarioParseError(f"unknown nonlinearity {name!r}")
    return NONLINEARITIES[name](params)


def build_system(doc: dict) -> SemilinearSystem:
    linear = from_document(doc["linear"])
    fmap = resolve_nonlinearity(doc["nonlinearity"])
    return SemilinearSystem(
        name=doc.get("name", "system"),
        linear=linear,
        nonlinearity=fmap,
        omega=float(doc["omega"]),
        r0=float(doc["r0"]),
    )


# ---------------------------------------------------------------------------
# check context and helpers


@dataclass
class CheckContext:
    doc: dict
    system: SemilinearSystem | None
    master_seed: int
    tolerances: dict

    def rng(self, tag: str) -> np.random.Generator:
        return substream(self.master_seed, zlib.crc32(tag.encode()))

    def seed(self, tag: str) -> int:
        return (self.master_seed * 1000003 + zlib.crc32(tag.encode())) % (2**31)

    def tol(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))


def _row(check, lhs, rhs, passed, **extra):
    row = {"check": check, "lhs": lhs, "rhs": rhs, "pass": bool(passed)}
    row.update(extra)
    return row


def _rand_matrix(rng, n, scale=1.0):
    return scale * rng.uniform(-1.0, 1.0, size=(n, n))


def _rand_orthogonal(rng, n):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return q


# ---------------------------------------------------------------------------
# checks: bounded-operator distance calculus


def check_bounded_oracle_random(ctx, params):
    trials = int(params.get("trials", 200))
    rng = ctx.rng("bounded-oracle")
    tol = ctx.tol("oracle_rel", 1e-4)
    worst = 0.0
    for k in range(trials):
        n = 2 + k % 7
        a = DenseMatrix(_rand_matrix(rng, n))
        b = DenseMatrix(_rand_matrix(rng, n))
        oracle = bounded_oracle_distance(a, b)
        est = yosida_distance(a, b).tail_sup
        worst = max(worst, abs(est - oracle) / (1.0 + oracle))
    return [_row("bounded_oracle_random", worst, tol, worst <= tol, trials=trials)]


def check_perturbation_bound_random(ctx, params):
    trials = int(params.get("trials", 100))
    rng = ctx.rng("perturbation-bound")
    violations = 0
    ratio_lo, ratio_hi = np.inf, -np.inf
    for k in range(trials):
        n = 4
        normal = k % 2 == 0
        if normal:
            q = _rand_orthogonal(rng, n)
            a = DenseMatrix(q @ np.diag(rng.uniform(-2.0, 1.0, n)) @ q.T)
        else:
            a = DenseMatrix(np.triu(_rand_matrix(rng, n, 1.5)))
        c_mat = _rand_matrix(rng, n)
        c_mat *= rng.uniform(0.01, 0.5) / np.linalg.norm(c_mat, 2)
        c = DenseMatrix(c_mat)
        rep = bounded_perturbation_bound_check(a, c)
        if not rep["pass"]:
            violations += 1
        if normal:
            ratio = rep["d_estimate"] / rep["c_norm"]
            ratio_lo, ratio_hi = min(ratio_lo, ratio), max(ratio_hi, ratio)
    rows = [_row("perturbation_bound_inequality", violations, 0, violations == 0, trials=trials)]
    band = max(abs(ratio_lo - 1.0), abs(ratio_hi - 1.0))
    rows.append(_row("perturbation_bound_normal_ratio", band, 0.01, band <= 0.01))
    return rows


def check_relative_bound(ctx, params):
    coef_a = float(params.get("coef_a", 0.05))
    coef_c = float(params.get("coef_c", 0.05))
    a = SpectralDiagonal([-float(n * n) for n in range(1, 9)])
    rep = relative_bound_check(a, coef_a, coef_c, seed=ctx.seed("relative-bound"))
    rows = [_row("relative_bound", rep["d_estimate"], rep["bound"], rep["pass"], k=rep["k"], m=rep["m"])]
    # exact scaling case C = 0.1 A (D = identity): oracle distance 0.1*||A||
    a3 = SpectralDiagonal([-1.0, -4.0, -9.0])
    pert = DenseMatrix(np.diag(a3.eigenvalues) * 1.1)
    d_exact = yosida_distance(a3, pert).tail_sup
    rows.append(_row("relative_bound_scaling", d_exact, 0.9, abs(d_exact - 0.9) <= 1e-3))
    return rows


def check_closeness_commuting(ctx, params):
    a = DenseMatrix(np.diag([-1.0, 1.0]))
    b = DenseMatrix(np.diag([-1.0, 1.0]) + 0.1 * np.eye(2))
    rep = closeness_bound_check(a, b, 1.0)
    frozen = (np.exp(0.1) - 1.0) * np.exp(1.0)
    tol = ctx.tol("commuting_abs", 1e-9)
    ok = abs(rep["lhs"] - frozen) <= tol and rep["pass"]
    return [_row("closeness_commuting", rep["lhs"], frozen, ok, bound=rep["rhs"])]


def check_closeness_random(ctx, params):
    trials = int(params.get("trials", 100))
    times = [float(t) for t in params.get("times", (0.5, 1.0))]
    rng = ctx.rng("closeness-random")
    violations = 0
    for _ in range(trials):
        n = 6
        a_mat = _rand_matrix(rng, n)
        gap = _rand_matrix(rng, n)
        gap *= rng.uniform(0.02, 0.2) / np.linalg.norm(gap, 2)
        a = DenseMatrix(a_mat)
        b = DenseMatrix(a_mat + gap)
        for t in times:
            if not closeness_bound_check(a, b, t)["pass"]:
                violations += 1
    return [_row("closeness_random", violations, 0, violations == 0, trials=trials)]


# ---------------------------------------------------------------------------
# checks: hyperbolicity and roughness


def check_hyperbolic_oracle_random(ctx, params):
    trials = int(params.get("trials", 500))
    rng = ctx.rng("hyperbolic-oracle")
    gap_tol = ctx.tol("gap_tol", 1e-6)
    disagreements = 0
    for _ in range(trials):
        m = _rand_matrix(rng, 6, scale=rng.uniform(0.3, 1.5))
        fast = check_hyperbolic(DenseMatrix(m), gap_tol)
        moduli = np.abs(np.roots(np.poly(m)))
        brute = bool(np.all(np.abs(moduli - 1.0) > gap_tol))
        if fast != brute:
            disagreements += 1
    return [_row("hyperbolic_oracle_random", disagreements, 0, disagreements == 0, trials=trials)]


def check_roughness_prefix(ctx, params):
    trials = int(params.get("trials", 10))
    rng = ctx.rng("roughness-prefix")
    eps_list = [0.02, 0.05, 0.1, 0.15, 0.2]
    min_prefix = None
    for _ in range(trials):
        n = 4
        exponents = np.concatenate(
            [rng.uniform(-1.5, -0.3, size=2), rng.uniform(0.3, 1.5, size=2)]
        )
        v = _rand_orthogonal(rng, n) + 0.2 * _rand_matrix(rng, n)
        base = DenseMatrix(v @ np.diag(exponents) @ np.linalg.inv(v))
        direction = _rand_matrix(rng, n)
        direction /= np.linalg.norm(direction, 2)
        rep = roughness_sweep(base, DenseMatrix(direction), eps_list)
        prefix = rep["persistent_prefix"]
        min_prefix = prefix if min_prefix is None else min(min_prefix, prefix)
    return [_row("roughness_prefix", min_prefix, 1, min_prefix >= 1, trials=trials)]


def check_persistence_floor(ctx, params):
    trials = int(params.get("trials", 50))
    rng = ctx.rng("persistence-floor")
    a = DenseMatrix(np.diag([-1.0, 1.0]))
    t1 = time_one_map(a)
    moduli = np.abs(np.asarray(spectrum(t1)))
    gap = float(np.min(np.abs(moduli - 1.0)))  # 1 - e^{-1}
    floor = persistence_floor(1.0, 1.0, gap)
    failures = 0
    for _ in range(trials):
        d_mat = _rand_matrix(rng, 2)
        d_mat /= np.linalg.norm(d_mat, 2)
        eps = rng.uniform(0.05, 0.95) * floor
        perturbed = DenseMatrix(np.diag([-1.0, 1.0]) + eps * d_mat)
        if not check_hyperbolic(time_one_map(perturbed), 1e-9):
            failures += 1
    return [_row("persistence_floor", failures, 0, failures == 0, floor=floor, trials=trials)]


# ---------------------------------------------------------------------------
# checks: delay example


def check_delay_golden_resolvent(ctx, params):
    a = float(params.get("a", 1.0))
    lam = float(params.get("lam", 5.0))
    n = int(params.get("n", 128))
    psi = vector(np.ones(n + 1), "sup")
    out = delay_resolvent(a, lam, psi)
    lhs = float(out.coordinates[-1])
    frozen = np.exp(lam) / (lam - a * np.exp(-lam)) - (np.exp(lam) - 1.0) / lam
    tol = ctx.tol("delay_golden_abs", 1e-10)
    return [_row("delay_golden_resolvent", lhs, float(frozen), abs(lhs - frozen) <= tol)]


def check_delay_roundtrip(ctx, params):
    a = float(params.get("a", 2.0))
    lam = float(params.get("lam", 5.0))
    n = int(params.get("n", 1024))
    op = DelayGenerator(a, n)
    psi = vector(np.ones(n + 1), "sup")
    x = delay_resolvent(a, lam, psi)
    ax = op_apply(op, x)
    residual = float(np.max(np.abs(lam * x.coordinates - ax.coordinates - psi.coordinates)))
    tol = ctx.tol("delay_roundtrip_sup", 1e-6)
    return [_row("delay_roundtrip", residual, tol, residual <= tol)]


def check_delay_distance_bracket(ctx, params):
    pairs = params.get("pairs", [[1.0, 0.0], [0.5, -0.5], [2.0, 1.0]])
    n = int(params.get("n", 256))
    rows = []
    for a, b in pairs:
        est = yosida_distance(DelayGenerator(a, n), DelayGenerator(b, n)).tail_sup
        gap = abs(a - b)
        ok = est <= 2.0 * gap * (1.0 + 1e-9) and 0.9 * gap <= est <= 1.1 * gap
        rows.append(_row(f"delay_distance({a},{b})", est, gap, ok, claim_bound=2.0 * gap))
    return rows


# ---------------------------------------------------------------------------
# checks: nonlinear semigroup


def check_cl_linear_scalar(ctx, params):
    t, n = float(params.get("t", 1.0)), int(params.get("n", 10))
    rec = crandall_liggett_evolve(SpectralDiagonal([-1.0]), t, n, vector([1.0]))
    lhs = float(rec.final().coordinates[0])
    frozen = (1.0 + t / n) ** (-n)
    tol = ctx.tol("cl_scalar_abs", 1e-12)
    return [_row("cl_linear_scalar", lhs, frozen, abs(lhs - frozen) <= tol)]


def check_cl_cubic_order(ctx, params):
    ns = params.get("ns", [8, 16, 32, 64, 128, 256, 512])
    cubic = NONLINEARITIES["cubic_decay"]({})
    exact = 3.0**-0.5
    errs = []
    for n in ns:
        rec = crandall_liggett_evolve(cubic, 1.0, int(n), vector([1.0]))
        errs.append(abs(float(rec.final().coordinates[0]) - exact))
    slope = -float(np.polyfit(np.log(ns), np.log(errs), 1)[0])
    rows = [_row("cl_cubic_order", slope, 0.9, slope >= 0.9)]
    rows.append(_row("cl_cubic_endpoint", errs[-1], 1e-2, errs[-1] <= 1e-2, n=int(ns[-1])))
    return rows


def check_accretivity_cubic_reference(ctx, params):
    n_samples = int(params.get("n_samples", 1000))
    cubic = NONLINEARITIES["cubic_decay"]({})
    cert = accretivity_certificate(cubic, 0.0, n_samples, 2.0, seed=ctx.seed("cubic-accretive"))
    return [
        _row(
            "accretivity_cubic_reference",
            cert.worst_ratio,
            1.0 + 1e-9,
            cert.passed,
            sample_pairs=cert.sample_pairs,
        )
    ]


def check_accretivity(ctx, params):
    if ctx.system is None:
        raise ScenarioParseError("accretivity check needs a system")
    n_samples = int(params.get("n_samples", 200))
    radius = float(params.get("radius", ctx.system.r0))
    cert = accretivity_certificate(
        ctx.system.operator(), ctx.system.omega, n_samples, radius, seed=ctx.seed("accretivity")
    )
    return [_row("accretivity", cert.worst_ratio, 1.0 + 1e-9, cert.passed, omega=cert.omega)]


def check_lip_phi(ctx, params):
    if ctx.system is None:
        raise ScenarioParseError("lip_phi check needs a system")
    t = float(params.get("t", 1.0))
    r = float(params.get("r", ctx.system.r0 / 2.0))
    n_pairs = int(params.get("n_pairs", 16))
    rep = lip_phi_estimate(ctx.system, t, r, n_pairs=n_pairs, seed=ctx.seed("lip-phi"))
    return [
        _row("lip_phi", rep["lip_hat"], rep["bound"] * 1.05, rep["pass"], modulus=rep["modulus"], r=r)
    ]


# ---------------------------------------------------------------------------
# checks: heat scenario dichotomy


def check_heat_dichotomy(ctx, params):
    a = float(params["a"])
    modes = int(params.get("modes", 8))
    expected = params.get("expected")  # int, or "not_hyperbolic"
    diag = SpectralDiagonal([-(n * n) - a for n in range(1, modes + 1)])
    t1 = time_one_map(diag)
    try:
        split = spectral_split(t1)
        lhs = split.stable_dim
        ok = expected == lhs
    except NotHyperbolic:
        lhs = "NotHyperbolic"
        ok = expected == "not_hyperbolic"
    return [_row("heat_dichotomy", lhs, expected, ok, a=a)]


# ---------------------------------------------------------------------------
# checks: manifolds


def check_manifold_unstable_quadratic(ctx, params):
    flow_steps = int(params.get("flow_steps", 512))
    tol = float(params.get("tol", 1e-10))
    graph = compute_unstable_manifold(ctx.system, tol=tol, flow_steps=flow_steps)
    xi = graph.anchor_grid[:, 0]
    sup_err = float(np.max(np.abs(graph.values[:, 0] - xi**2 / 3.0)))
    rows = [
        _row("manifold_unstable_accuracy", sup_err, ctx.tol("manifold_sup", 1e-3), sup_err <= ctx.tol("manifold_sup", 1e-3)),
        _row(
            "manifold_invariance_residual",
            graph.invariance_residual,
            ctx.tol("manifold_residual", 1e-6),
            graph.invariance_residual <= ctx.tol("manifold_residual", 1e-6),
        ),
    ]
    return rows


def check_manifold_stable_zero(ctx, params):
    flow_steps = int(params.get("flow_steps", 512))
    graph = compute_stable_manifold(ctx.system, tol=float(params.get("tol", 1e-10)), flow_steps=flow_steps)
    sup_psi = float(np.max(np.abs(graph.values)))
    rows = [
        _row("manifold_stable_zero", sup_psi, 1e-6, sup_psi <= 1e-6),
        _row("manifold_stable_membership", int(graph.meta["membership_ok"]), 1, graph.meta["membership_ok"]),
    ]
    # off-graph point: perturb in the unstable direction; must not decay
    ctx_u = build_context(ctx.system, "ImP", flow_steps=flow_steps)
    mid = graph.anchor_grid.shape[0] // 4
    point = ctx_u.points_from(graph.anchor_grid[mid : mid + 1], graph.values[mid : mid + 1])
    point = point + 0.05 * ctx_u.basis_comp[:, 0]
    norm0 = float(np.linalg.norm(point))
    cur = point
    min_ratio = np.inf
    for _ in range(6):
        cur = ctx_u.flow(cur)
        min_ratio = min(min_ratio, float(np.linalg.norm(cur) / norm0))
    rows.append(_row("manifold_offgraph_growth", min_ratio, 0.5, min_ratio >= 0.5))
    return rows


def check_manifold_uniqueness(ctx, params):
    flow_steps = int(params.get("flow_steps", 512))
    tol = float(params.get("tol", 1e-10))
    gctx = build_context(ctx.system, flow_steps=flow_steps)
    g0 = compute_unstable_manifold(ctx.system, tol=tol, flow_steps=flow_steps)
    g1 = compute_unstable_manifold(
        ctx.system,
        tol=tol,
        flow_steps=flow_steps,
        initial=random_lipschitz_graph(gctx, "KerP", 0.1, seed=ctx.seed("uniqueness")),
    )
    gap = float(np.max(np.abs(g0.values - g1.values)))
    bound = 100.0 * tol
    return [_row("manifold_uniqueness", gap, bound, gap <= bound)]


def check_lip_shrink(ctx, params):
    radii = params.get("radii", [0.5, 0.25, 0.1, 0.04])
    flow_steps = int(params.get("flow_steps", 512))
    rep = lip_shrink_study(ctx.system, radii, flow_steps=flow_steps, seed=ctx.seed("lip-shrink"))
    first, last = rep["rows"][0]["lip_Phi"], rep["rows"][-1]["lip_Phi"]
    return [
        _row("lip_shrink_monotone", int(rep["monotone_ok"]), 1, rep["monotone_ok"], rows=rep["rows"]),
        _row("lip_shrink_final", last, 0.1 * first * 1.05, rep["shrink_ok"]),
    ]


# ---------------------------------------------------------------------------
# determinism


def check_determinism_selfcheck(ctx, params):
    sub = [("delay_golden_resolvent", {}), ("cl_linear_scalar", {})]
    bodies = []
    for _ in range(2):
        rows = []
        for cid, p in sub:
            rows.extend(CHECKS[cid](ctx, p))
        bodies.append(canonical_json(rows))
    same = bodies[0] == bodies[1]
    return [_row("determinism_selfcheck", int(same), 1, same)]


CHECKS = {
    "bounded_oracle_random": check_bounded_oracle_random,
    "perturbation_bound_random": check_perturbation_bound_random,
    "relative_bound": check_relative_bound,
    "closeness_commuting": check_closeness_commuting,
    "closeness_random": check_closeness_random,
    "hyperbolic_oracle_random": check_hyperbolic_oracle_random,
    "roughness_prefix": check_roughness_prefix,
    "persistence_floor": check_persistence_floor,
    "delay_golden_resolvent": check_delay_golden_resolvent,
    "delay_roundtrip": check_delay_roundtrip,
    "delay_distance_bracket": check_delay_distance_bracket,
    "cl_linear_scalar": check_cl_linear_scalar,
    "cl_cubic_order": check_cl_cubic_order,
    "accretivity_cubic_reference": check_accretivity_cubic_reference,
    "accretivity": check_accretivity,
    "lip_phi": check_lip_phi,
    "heat_dichotomy": check_heat_dichotomy,
    "manifold_unstable_quadratic": check_manifold_unstable_quadratic,
    "manifold_stable_zero": check_manifold_stable_zero,
    "manifold_uniqueness": check_manifold_uniqueness,
    "lip_shrink": check_lip_shrink,
    "determinism_selfcheck": check_determinism_selfcheck,
}


# ---------------------------------------------------------------------------
# shipped catalog


def _heat_expected(a: float, modes: int):
    # the claimed stable dimension; a resonant value (some -n^2 - a == 0)
    # makes the dichotomy check fail with a NotHyperbolic citation
    eigs = np.array([-(n * n) - a for n in range(1, modes + 1)])
    return int(np.sum(eigs < 0))


def scenario_document(name: str, params: dict | None = None) -> dict:
    """Build a shipped scenario document; ``params`` override defaults."""
    params = dict(params or {})
    if name == "matrix-suite":
        return {
            "schema": SCENARIO_SCHEMA,
            "name": "matrix-suite",
            "system": None,
            "seeds": {"master": int(params.get("seed", 7))},
            "tolerances": {},
            "checks": [
                {"id": "bounded_oracle_random", "params": {"trials": 200}},
                {"id": "perturbation_bound_random", "params": {"trials": 100}},
                {"id": "relative_bound", "params": {"coef_a": 0.05, "coef_c": 0.05}},
                {"id": "closeness_commuting", "params": {}},
                {"id": "closeness_random", "params": {"trials": 100, "times": [0.5, 1.0]}},
                {"id": "hyperbolic_oracle_random", "params": {"trials": 500}},
                {"id": "roughness_prefix", "params": {"trials": 10}},
                {"id": "persistence_floor", "params": {"trials": 50}},
                {"id": "determinism_selfcheck", "params": {}},
            ],
        }
    if name == "delay-example":
        n = int(params.get("n", 256))
        return {
            "schema": SCENARIO_SCHEMA,
            "name": "delay-example",
            "system": None,
            "seeds": {"master": int(params.get("seed", 11))},
            "tolerances": {},
            "checks": [
                {"id": "delay_golden_resolvent", "params": {"a": 1.0, "lam": 5.0, "n": 128}},
                {"id": "delay_roundtrip", "params": {"a": 2.0, "lam": 5.0, "n": 1024}},
                {
                    "id": "delay_distance_bracket",
                    "params": {"pairs": [[1.0, 0.0], [0.5, -0.5], [2.0, 1.0]], "n": n},
                },
            ],
        }
    if name == "heat-semilinear":
        a = float(params.get("a", 0.5))
        modes = int(params.get("modes", 8))
        full = bool(params.get("full", a == 0.5))
        checks = [
            {
                "id": "heat_dichotomy",
                "params": {"a": a, "modes": modes, "expected": _heat_expected(a, modes)},
            }
        ]
        if full:
            checks += [
                {"id": "accretivity", "params": {"n_samples": 200, "radius": 0.5}},
                {"id": "lip_phi", "params": {"t": 1.0, "r": 0.25, "n_pairs": 12}},
            ]
        return {
            "schema": SCENARIO_SCHEMA,
            "name": "heat-semilinear",
            "system": {
                "name": "heat-semilinear",
                "linear": to_document(SpectralDiagonal([-(n * n) - a for n in range(1, modes + 1)])),
                "nonlinearity": {"name": "sine_defect", "params": {"gamma": 0.5}},
                "omega": float(params.get("omega", 0.05 if a >= -1.0 else 2.0)),
                "r0": 0.5,
            },
            "seeds": {"master": int(params.get("seed", 23))},
            "tolerances": {},
            "checks": checks,
        }
    if name == "saddle-quadratic":
        r0 = float(params.get("r0", 0.5))
        flow_steps = int(params.get("flow_steps", 512))
        return {
            "schema": SCENARIO_SCHEMA,
            "name": "saddle-quadratic",
            "system": {
                "name": "saddle-quadratic",
                "linear": to_document(DenseMatrix(np.diag([1.0, -1.0]))),
                "nonlinearity": {"name": "saddle_quadratic", "params": {}},
                "omega": 3.0,
                "r0": r0,
            },
            "seeds": {"master": int(params.get("seed", 42))},
            "tolerances": {},
            "checks": [
                {"id": "accretivity", "params": {"n_samples": 150, "radius": 0.4}},
                {"id": "lip_phi", "params": {"t": 1.0, "r": 0.25, "n_pairs": 12}},
                {"id": "manifold_unstable_quadratic", "params": {"flow_steps": flow_steps}},
                {"id": "manifold_stable_zero", "params": {"flow_steps": flow_steps}},
                {"id": "manifold_uniqueness", "params": {"flow_steps": flow_steps}},
                {"id": "lip_shrink", "params": {"radii": [0.5, 0.25, 0.1, 0.04], "flow_steps": flow_steps}},
            ],
        }
    if name == "cubic-contraction":
        return {
            "schema": SCENARIO_SCHEMA,
            "name": "cubic-contraction",
            "system": {
                "name": "cubic-contraction",
                "linear": to_document(SpectralDiagonal([-1.0])),
                "nonlinearity": {"name": "scalar_quadratic", "params": {"c": 0.1}},
                "omega": 0.4,
                "r0": 1.0,
            },
            "seeds": {"master": int(params.get("seed", 5))},
            "tolerances": {},
            "checks": [
                {"id": "cl_linear_scalar", "params": {}},
                {"id": "cl_cubic_order", "params": {}},
                {"id": "accretivity_cubic_reference", "params": {"n_samples": 1000}},
                {"id": "accretivity", "params": {"n_samples": 300, "radius": 1.0}},
                {"id": "lip_phi", "params": {"t": 1.0, "r": 0.5, "n_pairs": 16}},
            ],
        }
    raise ScenarioParseError(f"unknown scenario {name!r}")


CATALOG = ("matrix-suite", "delay-example", "heat-semilinear", "saddle-quadratic", "cubic-contraction")


# ---------------------------------------------------------------------------
# runner


def load_scenario(source) -> dict:
    """Accept a catalog name, a path to a JSON document, or a dict."""
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if text in CATALOG:
            doc = scenario_document(text)
        else:
            path = Path(text)
            if not path.exists():
                raise ScenarioParseError(f"scenario {text!r} is neither a catalog name nor a file")
            try:
                doc = json.loads(path.read_text())
            except json.JSONDecodeError as exc:
                raise ScenarioParseError(f"invalid scenario JSON: {exc}") from exc
    validate_scenario(doc)
    return doc


def validate_scenario(doc: dict) -> None:
    if not isinstance(doc, dict):
        raise ScenarioParseError("scenario document must be an object")
    if "name" not in doc or not isinstance(doc["name"], str):
        raise ScenarioParseError("scenario needs a string name")
    seeds = doc.get("seeds")
    if not isinstance(seeds, dict) or "master" not in seeds:
        raise ScenarioParseError("scenario needs explicit seeds.master")
    checks = doc.get("checks")
    if not isinstance(checks, list) or not checks:
        raise ScenarioParseError("scenario needs a nonempty check list")
    for item in checks:
        cid = item.get("id") if isinstance(item, dict) else None
        if cid not in CHECKS:
            raise ScenarioParseError(f"unknown check id {cid!r}")
    if doc.get("system") is not None:
        sys_doc = doc["system"]
        for key in ("linear", "nonlinearity", "omega", "r0"):
            if key not in sys_doc:
                raise ScenarioParseError(f"system document missing {key!r}")
        nl = sys_doc["nonlinearity"]
        name = nl if isinstance(nl, str) else nl.get("name")
        if name not in NONLINEARITIES:
            raise ScenarioParseError(f"unknown nonlinearity {name!r}")


def run_scenario(source) -> VerificationReport:
    """Execute a scenario's checks in order and assemble the report."""
    doc = load_scenario(source)
    system = build_system(doc["system"]) if doc.get("system") else None
    ctx = CheckContext(
        doc=doc,
        system=system,
        master_seed=int(doc["seeds"]["master"]),
        tolerances=doc.get("tolerances", {}),
    )
    report = VerificationReport(scenario=doc["name"])
    for item in doc["checks"]:
        fn = CHECKS[item["id"]]
        start = time.perf_counter()
        rows = fn(ctx, item.get("params", {}))
        elapsed = time.perf_counter() - start
        for row in rows:
            row["runtime"] = round(elapsed, 6)
        report.rows.extend(rows)
    return report
