"""Hyperbolicity of the time-1 map, spectral splitting, and roughness sweeps.

The splitting projection comes from an ordered real Schur form: eigenvalues
inside the unit circle are moved to the leading block and the projection is
assembled through the block-coupling Sylvester equation, which is exact at
machine precision for the sizes handled here.  A contour-quadrature
projection is kept as a cross-check oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur, solve_sylvester

from .errors import BaseNotHyperbolic, IllConditionedSplit, NotHyperbolic
from .operators import (
    DenseMatrix,
    OperatorModel,
    as_matrix,
    operator_norm,
    spectrum,
)
from .semigroup import time_one_map
from .yosida import yosida_distance

DEFAULT_GAP_TOL = 1e-6
_POWER_SAMPLES = 8


@dataclass(frozen=True)
class DichotomySplit:
    projection: np.ndarray
    n_constant: float
    beta: float
    inner_radius: float
    outer_radius: float
    stable_dim: int

    def to_document(self) -> dict:
        return {
            "n_constant": float(self.n_constant),
            "beta": float(self.beta),
            "inner_radius": float(self.inner_radius),
            "outer_radius": float(self.outer_radius),
            "stable_dim": int(self.stable_dim),
        }


def check_hyperbolic(t1: OperatorModel, gap_tol: float = DEFAULT_GAP_TOL) -> bool:
    """True iff every eigenvalue modulus of T(1) is farther than gap_tol from 1."""
    if not 0 < gap_tol < 0.5:
        raise ValueError("gap tolerance must lie in (0, 0.5)")
    moduli = np.abs(np.asarray(spectrum(t1)))
    return bool(np.all(np.abs(moduli - 1.0) > gap_tol))


def _ordered_stable_basis(m: np.ndarray):
    """Schur vectors ordered with the inside-unit-circle block leading."""
    t, z, sdim = schur(m, output="real", sort="iuc")
    return t, z, int(sdim)


def riesz_projection_schur(m: np.ndarray):
    """Spectral projection onto the stable (inside unit circle) subspace."""
    t, z, sdim = _ordered_stable_basis(m)
    n = m.shape[0]
    if sdim == 0:
        return np.zeros((n, n)), 0
    if sdim == n:
        return np.eye(n), n
    t11 = t[:sdim, :sdim]
    t12 = t[:sdim, sdim:]
    t22 = t[sdim:, sdim:]
    coupling = solve_sylvester(t11, -t22, t12)
    block = np.zeros((n, n))
    block[:sdim, :sdim] = np.eye(sdim)
    block[:sdim, sdim:] = coupling
    return z @ block @ z.T, sdim


def riesz_projection_contour(m: np.ndarray, radius: float, nodes: int = 64) -> np.ndarray:
    """Trapezoid contour quadrature of the resolvent on |z| = radius.

    Cross-check oracle for the Schur-based projection; exact up to the
    spectral gap's geometric convergence factor.
    """
    n = m.shape[0]
    acc = np.zeros((n, n), dtype=complex)
    for k in range(nodes):
        theta = 2.0 * np.pi * k / nodes
        z = radius * np.exp(1j * theta)
        acc += z * np.linalg.inv(z * np.eye(n) - m)
    return (acc / nodes).real


def spectral_split(t1: OperatorModel, gap_tol: float = DEFAULT_GAP_TOL) -> DichotomySplit:
    """Dichotomy data of a hyperbolic time-1 map.

    beta is the decay rate read off the closest eigenvalue moduli to the unit
    circle; the prefactor is fitted from operator-level norms of the first
    eight powers restricted to each invariant subspace, so the decay
    estimates hold for every unit vector of the subspace, not just sampled
    ones.
    """
    if not check_hyperbolic(t1, gap_tol):
        raise NotHyperbolic("time-1 map has spectrum within gap_tol of the unit circle")
    m = as_matrix(t1)
    n = m.shape[0]
    p, sdim = riesz_projection_schur(m)
    if np.linalg.norm(p, 2) > 1e8:
        raise IllConditionedSplit("projection norm exceeds 1e8; blocks are nearly inseparable")

    moduli = np.abs(np.asarray(spectrum(t1)))
    inner = float(np.max(moduli[moduli < 1.0])) if sdim > 0 else 0.0
    outer = float(np.min(moduli[moduli > 1.0])) if sdim < n else float("inf")
    rates = []
    if sdim > 0:
        rates.append(inner)
    if sdim < n:
        rates.append(1.0 / outer)
    beta = float(-np.log(max(rates)))

    n_fit = 1.0
    if sdim > 0:
        _, z, k = _ordered_stable_basis(m)
        basis_s = z[:, :k]
        power = np.eye(n)
        for j in range(1, _POWER_SAMPLES + 1):
            power = power @ m
            n_fit = max(n_fit, float(np.linalg.norm(power @ basis_s, 2)) * np.exp(beta * j))
    if sdim < n:
        t_u, z_u, k_u = schur(m, output="real", sort="ouc")
        t11u = t_u[:k_u, :k_u]
        inv_u = np.linalg.inv(t11u)
        power = np.eye(k_u)
        for j in range(1, _POWER_SAMPLES + 1):
            power = power @ inv_u
            n_fit = max(n_fit, float(np.linalg.norm(power, 2)) * np.exp(beta * j))
    return DichotomySplit(
        projection=p,
        n_constant=n_fit,
        beta=beta,
        inner_radius=inner,
        outer_radius=outer,
        stable_dim=sdim,
    )


def roughness_sweep(a: OperatorModel, direction: OperatorModel, eps_list, gap_tol: float = DEFAULT_GAP_TOL, grid=None) -> dict:
    """Perturb A by eps * direction and record dichotomy survival per eps.

    Base and direction must be bounded-materializable; rows appear in the
    order given.  ``persistent_prefix`` counts the leading run of hyperbolic
    rows once eps is sorted ascending.
    """
    base_t1 = time_one_map(a)
    if not check_hyperbolic(base_t1, gap_tol):
        raise BaseNotHyperbolic("roughness sweep requires a hyperbolic base")
    a_mat = as_matrix(a)
    d_mat = as_matrix(direction)
    d_norm = operator_norm(direction)
    rows = []
    for eps in eps_list:
        perturbed = DenseMatrix(a_mat + float(eps) * d_mat, a.norm_kind)
        dist = yosida_distance(a, perturbed, grid)
        t1 = time_one_map(perturbed)
        hyperbolic = check_hyperbolic(t1, gap_tol)
        moduli = np.abs(np.asarray(spectrum(t1)))
        inner = moduli[moduli < 1.0 - gap_tol]
        outer = moduli[moduli > 1.0 + gap_tol]
        rows.append(
            {
                "eps": float(eps),
                "d_y": float(dist.tail_sup),
                "hyperbolic": bool(hyperbolic),
                "gap_inner": float(inner.max()) if inner.size else 0.0,
                "gap_outer": float(outer.min()) if outer.size else float("inf"),
                "stable_dim": int(np.sum(moduli < 1.0)),
                "direction_norm": float(d_norm),
            }
        )
    ordered = sorted(rows, key=lambda r: r["eps"])
    prefix = 0
    for row in ordered:
        if not row["hyperbolic"]:
            break
        prefix += 1
    return {"rows": rows, "persistent_prefix": prefix}


def sweep_csv_rows(report: dict) -> list[str]:
    rows = ["eps,d_y,hyperbolic,gap_inner,gap_outer,stable_dim"]
    for r in report["rows"]:
        outer = r["gap_outer"]
        outer_txt = "inf" if np.isinf(outer) else repr(float(outer))
        rows.append(
            f"{r['eps']!r},{r['d_y']!r},{int(r['hyperbolic'])},{r['gap_inner']!r},{outer_txt},{r['stable_dim']}"
        )
    return rows


def persistence_floor(m: float, omega: float, gap: float, t: float = 1.0) -> float:
    """Largest distance budget that the closeness chain converts into survival.

    Chains the semigroup closeness inequality at time t with a spectral gap
    of the unperturbed time-1 map: perturbations with distance below
    gap / (t M^2 e^{4 omega t}) keep the spectrum off the unit circle.
    """
    return gap / (t * m * m * np.exp(4.0 * omega * t))
