import numpy as np
import pytest

from yosidalab.operators import DenseMatrix, NonlinearMap
from yosidalab.nonlinear import SemilinearSystem
from yosidalab.manifolds import (
    build_context,
    compute_stable_manifold,
    compute_unstable_manifold,
    graph_transform_step,
    lip_shrink_study,
    random_lipschitz_graph,
    _zero_graph,
)


def saddle_map():
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


def zero_map(dim):
    def jac(u):
        u = np.asarray(u, float)
        if u.ndim == 1:
            return np.zeros((dim, dim))
        return np.zeros((*u.shape, dim))

    return NonlinearMap(
        evaluator=lambda u: np.zeros_like(np.asarray(u, float)), jacobian=jac, name="zero"
    )


def saddle_system(r0=0.5):
    return SemilinearSystem(
        "saddle-quadratic", DenseMatrix(np.diag([1.0, -1.0])), saddle_map(), omega=3.0, r0=r0
    )


def coupled_3d_system(r0=0.3):
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

    return SemilinearSystem(
        "coupled-3d",
        DenseMatrix(np.diag([-1.0, -2.0, 1.0])),
        NonlinearMap(evaluator=ev, jacobian=jac, name="coupled_quadratic_3d"),
        omega=2.0,
        r0=r0,
    )


class TestGraphTransformStep:
    def test_linear_zero_graph_is_fixed(self):
        sys_lin = SemilinearSystem(
            "lin", DenseMatrix(np.diag([1.0, -1.0])), zero_map(2), omega=1.0, r0=0.5
        )
        ctx = build_context(sys_lin, flow_steps=128)
        g0 = _zero_graph(ctx, "KerP")
        g1, _ = graph_transform_step(g0, ctx)
        assert np.max(np.abs(g1.values)) <= 1e-9

    def test_one_step_sign_matches_invariant_curve(self):
        ctx = build_context(saddle_system(), flow_steps=256)
        g0 = _zero_graph(ctx, "KerP")
        g1, _ = graph_transform_step(g0, ctx)
        xi = g1.anchor_grid[:, 0]
        interior = np.abs(xi) > 0.05
        assert np.all(g1.values[interior, 0] * (xi[interior] ** 2) > 0.0)

    def test_step_contracts_lipschitz(self):
        ctx = build_context(saddle_system(), flow_steps=256)
        graph = random_lipschitz_graph(ctx, "KerP", 0.1, seed=3)
        lips = [graph.lip_estimate if graph.lip_estimate else 0.1]
        for _ in range(4):
            graph, _ = graph_transform_step(graph, ctx)
            lips.append(graph.lip_estimate)
        # convergent iteration: Lipschitz constants settle near the fixed
        # point's slope instead of growing
        assert lips[-1] <= 0.25


class TestUnstableManifold:
    def test_linear_system_trivial_graph(self):
        sys_lin = SemilinearSystem(
            "lin", DenseMatrix(np.diag([1.0, -1.0])), zero_map(2), omega=1.0, r0=0.5
        )
        graph = compute_unstable_manifold(sys_lin, tol=1e-10, flow_steps=128)
        assert graph.converged
        assert graph.iterations == 1
        assert np.max(np.abs(graph.values)) <= 1e-9

    def test_saddle_quadratic_curve(self):
        graph = compute_unstable_manifold(saddle_system(), tol=1e-10, flow_steps=512)
        assert graph.converged
        xi = graph.anchor_grid[:, 0]
        assert np.max(np.abs(xi)) == pytest.approx(0.25)
        sup_err = np.max(np.abs(graph.values[:, 0] - xi**2 / 3.0))
        assert sup_err <= 1e-3
        assert graph.invariance_residual <= 1e-6
        mid = len(xi) // 2
        assert abs(graph.values[mid, 0]) <= 1e-8

    def test_fixed_point_extra_step(self):
        graph = compute_unstable_manifold(saddle_system(), tol=1e-10, flow_steps=256)
        assert graph.invariance_residual <= 10.0 * 1e-10 * (1.0 + graph.lip_estimate)

    def test_three_dimensional_coupling(self):
        graph = compute_unstable_manifold(coupled_3d_system(), tol=1e-10, flow_steps=256)
        assert graph.converged
        assert graph.anchor_grid.shape[1] == 1
        assert graph.values.shape[1] == 2
        assert graph.invariance_residual <= 1e-6

    def test_tangency_surrogate(self):
        graph = compute_unstable_manifold(saddle_system(), tol=1e-10, flow_steps=256)
        xi = graph.anchor_grid[:, 0]
        inner = np.abs(xi) <= 0.5 / 8.0
        da = xi[inner][:, None] - xi[inner][None, :]
        dv = graph.values[inner, 0][:, None] - graph.values[inner, 0][None, :]
        mask = np.abs(da) > 1e-14
        lip_inner = np.max(np.abs(dv[mask] / da[mask]))
        assert lip_inner <= graph.lip_estimate + 1e-12

    def test_uniqueness_of_fixed_point(self):
        ctx = build_context(saddle_system(), flow_steps=256)
        tol = 1e-10
        g0 = compute_unstable_manifold(saddle_system(), tol=tol, flow_steps=256)
        g1 = compute_unstable_manifold(
            saddle_system(),
            tol=tol,
            flow_steps=256,
            initial=random_lipschitz_graph(ctx, "KerP", 0.1, seed=9),
        )
        assert np.max(np.abs(g0.values - g1.values)) <= 100.0 * tol

    def test_advisory_gap_threshold_recorded(self):
        graph = compute_unstable_manifold(saddle_system(), tol=1e-8, flow_steps=128)
        assert "threshold_satisfied" in graph.meta
        assert "kappa_history" in graph.meta
        kappas = graph.meta["kappa_history"]
        assert kappas and max(kappas) < 1.0


class TestStableManifold:
    def test_linear_system(self):
        sys_lin = SemilinearSystem(
            "lin", DenseMatrix(np.diag([1.0, -1.0])), zero_map(2), omega=1.0, r0=0.5
        )
        graph = compute_stable_manifold(sys_lin, tol=1e-10, flow_steps=128)
        assert np.max(np.abs(graph.values)) <= 1e-9

    def test_saddle_stable_axis(self):
        graph = compute_stable_manifold(saddle_system(), tol=1e-10, flow_steps=512)
        assert graph.converged
        assert np.max(np.abs(graph.values)) <= 1e-6
        assert graph.meta["membership_ok"]

    def test_off_graph_point_escapes(self):
        ctx = build_context(saddle_system(), "ImP", flow_steps=256)
        graph = compute_stable_manifold(saddle_system(), tol=1e-10, flow_steps=256)
        idx = graph.anchor_grid.shape[0] // 4
        point = ctx.points_from(graph.anchor_grid[idx : idx + 1], graph.values[idx : idx + 1])
        point = point + 0.05 * ctx.basis_comp[:, 0]
        norm0 = np.linalg.norm(point)
        cur = point
        for _ in range(6):
            cur = ctx.flow(cur)
            assert np.linalg.norm(cur) >= 0.5 * norm0


class TestLipShrink:
    def test_linear_all_zero(self):
        sys_lin = SemilinearSystem(
            "lin", DenseMatrix(np.diag([1.0, -1.0])), zero_map(2), omega=1.0, r0=0.5
        )
        rep = lip_shrink_study(sys_lin, [0.5, 0.25], flow_steps=128, lip_phi_pairs=4)
        assert all(r["lip_Phi"] <= 1e-9 for r in rep["rows"])
        assert rep["monotone_ok"]

    def test_saddle_slopes_track_radius(self):
        rep = lip_shrink_study(saddle_system(), [0.5, 0.25, 0.1, 0.05], flow_steps=256, lip_phi_pairs=6)
        rows = rep["rows"]
        # slope of the exact curve at the grid edge is about r0/3
        for row in rows:
            assert row["lip_Phi"] == pytest.approx(row["r0"] / 3.0, rel=0.08)
        assert rep["monotone_ok"]

    def test_shrink_flag_with_shipped_radii(self):
        rep = lip_shrink_study(saddle_system(), [0.5, 0.25, 0.1, 0.04], flow_steps=256, lip_phi_pairs=6)
        assert rep["monotone_ok"]
        assert rep["shrink_ok"]


class TestExports:
    def test_csv_and_summary(self):
        graph = compute_unstable_manifold(saddle_system(), tol=1e-8, flow_steps=128)
        rows = graph.csv_rows()
        assert rows[0] == "base0,value0"
        assert len(rows) == graph.anchor_grid.shape[0] + 1
        summary = graph.summary()
        assert set(summary) == {
            "base_subspace",
            "lip_estimate",
            "invariance_residual",
            "iterations",
            "converged",
        }
