"""Operator models and the primitive operations every other module consumes.

Four model kinds share one calling convention:

* ``DenseMatrix``      -- explicit n x n array, euclidean or sup norm space
* ``SpectralDiagonal`` -- real eigenvalues, descending, euclidean space
* ``DelayGenerator``   -- generator of the semigroup of x'(t) = a*x(t-1) on
  C([-1,0],R), collocated on a uniform grid of N+1 points, sup norm space
* ``SemilinearComposite`` -- bounded linear part plus a nonlinear map

The delay model is deliberately resolvent-driven: its resolvent is evaluated
from the explicit integral formula (exactly, for piecewise-linear data), so
accuracy does not depend on the stiff differentiation stencils used by
``apply``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import (
    DimensionMismatch,
    LambdaInSpectrum,
    NonFiniteResult,
    SingularPrefactor,
    UnboundedModel,
)

EUCLIDEAN = "euclidean"
SUP = "sup"

_PIVOT_TOL = 1e-12


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class VectorState:
    coordinates: np.ndarray
    norm_kind: str = EUCLIDEAN

    def __post_init__(self):
        coords = np.atleast_1d(np.asarray(self.coordinates))
        if coords.ndim != 1:
            raise DimensionMismatch("state coordinates must be 1-D")
        if not np.all(np.isfinite(coords)):
            raise NonFiniteResult("state has non-finite coordinates")
        if self.norm_kind not in (EUCLIDEAN, SUP):
            raise ValueError(f"unknown norm kind {self.norm_kind!r}")
        object.__setattr__(self, "coordinates", coords)

    @property
    def dimension(self) -> int:
        return self.coordinates.shape[0]


def vector(values, norm_kind=EUCLIDEAN) -> VectorState:
    return VectorState(np.asarray(values, dtype=float), norm_kind)


def state_norm(x: VectorState) -> float:
    if x.norm_kind == SUP:
        return float(np.max(np.abs(x.coordinates)))
    return float(np.linalg.norm(x.coordinates))


def vector_norm(values, norm_kind=EUCLIDEAN) -> float:
    v = np.asarray(values)
    if norm_kind == SUP:
        return float(np.max(np.abs(v))) if v.size else 0.0
    return float(np.linalg.norm(v))


# ---------------------------------------------------------------------------
# nonlinear maps


@dataclass(frozen=True)
class NonlinearMap:
    """Deterministic vector map with an optional analytic Jacobian."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    lipschitz_hint: Optional[float] = None
    name: str = "anonymous"

    def __call__(self, x) -> np.ndarray:
        out = np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)
        if not np.all(np.isfinite(out)):
            raise NonFiniteResult(f"nonlinearity {self.name!r} produced non-finite values")
        return out


def fd_jacobian(f: Callable, x: np.ndarray, step: float | None = None) -> np.ndarray:
    """Central finite-difference Jacobian of ``f`` at ``x``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    h = step if step is not None else 1e-6 * (1.0 + float(np.linalg.norm(x)))
    cols = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2.0 * h))
    return np.column_stack(cols)


def map_jacobian(f: NonlinearMap, x: np.ndarray) -> np.ndarray:
    if f.jacobian is not None:
        return np.asarray(f.jacobian(np.asarray(x, dtype=float)), dtype=float)
    jac = fd_jacobian(f, x)
    if not np.all(np.isfinite(jac)):
        from .errors import JacobianUnavailable

        raise JacobianUnavailable("finite-difference Jacobian is non-finite")
    return jac


# ---------------------------------------------------------------------------
# operator models


class OperatorModel:
    """Base tag; concrete models carry their own parameters."""

    dimension: int
    norm_kind: str


@dataclass(frozen=True)
class DenseMatrix(OperatorModel):
    entries: np.ndarray
    norm_kind: str = EUCLIDEAN

    def __post_init__(self):
        m = np.asarray(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch("dense model requires a square matrix")
        if not np.all(np.isfinite(m)):
            raise NonFiniteResult("matrix has non-finite entries")
        object.__setattr__(self, "entries", m)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class SpectralDiagonal(OperatorModel):
    eigenvalues: np.ndarray
    norm_kind: str = field(default=EUCLIDEAN, init=False)

    def __post_init__(self):
        vals = np.sort(np.asarray(self.eigenvalues, dtype=float))[::-1].copy()
        if vals.ndim != 1 or vals.size < 1:
            raise DimensionMismatch("need at least one eigenvalue")
        if not np.all(np.isfinite(vals)):
            raise NonFiniteResult("eigenvalues must be finite")
        object.__setattr__(self, "eigenvalues", vals)

    @property
    def dimension(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True)
class DelayGenerator(OperatorModel):
    coefficient: float
    grid_size: int
    norm_kind: str = field(default=SUP, init=False)

    def __post_init__(self):
        if self.grid_size < 8:
            raise DimensionMismatch("delay grid needs at least 8 panels")
        object.__setattr__(self, "coefficient", float(self.coefficient))
        object.__setattr__(self, "grid_size", int(self.grid_size))

    @property
    def dimension(self) -> int:
        return self.grid_size + 1

    def grid(self) -> np.ndarray:
        return np.linspace(-1.0, 0.0, self.grid_size + 1)


@dataclass(frozen=True)
class SemilinearComposite(OperatorModel):
    linear: OperatorModel
    nonlinearity: NonlinearMap

    def __post_init__(self):
        if isinstance(self.linear, (DelayGenerator, SemilinearComposite)):
            raise UnboundedModel("semilinear linear part must be a bounded model")

    @property
    def dimension(self) -> int:
        return self.linear.dimension

    @property
    def norm_kind(self) -> str:
        return self.linear.norm_kind


# ---------------------------------------------------------------------------
# materialization and arithmetic on bounded models


def as_matrix(op: OperatorModel) -> np.ndarray:
    """Dense array of a bounded model; UnboundedModel otherwise."""
    if isinstance(op, DenseMatrix):
        return np.array(op.entries)
    if isinstance(op, SpectralDiagonal):
        return np.diag(op.eigenvalues)
    raise UnboundedModel(f"{type(op).__name__} cannot be materialized")


def _merge_kind(a: OperatorModel, b: OperatorModel) -> str:
    if a.norm_kind != b.norm_kind:
        raise DimensionMismatch("operators live in different norm spaces")
    return a.norm_kind


def add_models(a: OperatorModel, b: OperatorModel) -> DenseMatrix:
    if a.dimension != b.dimension:
        raise DimensionMismatch("dimension mismatch in operator sum")
    return DenseMatrix(as_matrix(a) + as_matrix(b), _merge_kind(a, b))


def subtract_models(a: OperatorModel, b: OperatorModel) -> DenseMatrix:
    if a.dimension != b.dimension:
        raise DimensionMismatch("dimension mismatch in operator difference")
    return DenseMatrix(as_matrix(a) - as_matrix(b), _merge_kind(a, b))


def scale_model(op: OperatorModel, c: float) -> DenseMatrix:
    return DenseMatrix(c * as_matrix(op), op.norm_kind)


# ---------------------------------------------------------------------------
# apply


_D1_LEFT0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_D1_LEFT1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0
_D1_RIGHT1 = np.array([-1.0, 6.0, -18.0, 10.0, 3.0]) / 12.0


def _delay_derivative(values: np.ndarray, n_panels: int) -> np.ndarray:
    """Fourth-order first derivative on the uniform grid, rows 0..N-1."""
    h = 1.0 / n_panels
    v = values
    d = np.empty(n_panels)
    d[0] = _D1_LEFT0 @ v[:5]
    d[1] = _D1_LEFT1 @ v[:5]
    # centered interior rows 2..N-2
    d[2 : n_panels - 1] = (
        v[0 : n_panels - 3] - 8.0 * v[1 : n_panels - 2] + 8.0 * v[3 : n_panels] - v[4 : n_panels + 1]
    ) / 12.0
    d[n_panels - 1] = _D1_RIGHT1 @ v[n_panels - 4 : n_panels + 1]
    return d / h


def apply(op: OperatorModel, x: VectorState) -> VectorState:
    """Image ``A x`` under the model's action."""
    if x.dimension != op.dimension:
        raise DimensionMismatch(
            f"operator dim {op.dimension} vs state dim {x.dimension}"
        )
    v = x.coordinates
    if isinstance(op, DenseMatrix):
        out = op.entries @ v
    elif isinstance(op, SpectralDiagonal):
        out = op.eigenvalues * v
    elif isinstance(op, DelayGenerator):
        out = np.empty(op.dimension)
        out[:-1] = _delay_derivative(v, op.grid_size)
        out[-1] = op.coefficient * v[0]
    elif isinstance(op, SemilinearComposite):
        out = as_matrix(op.linear) @ v + op.nonlinearity(v)
    else:
        raise UnboundedModel(f"cannot apply {type(op).__name__}")
    if not np.all(np.isfinite(out)):
        raise NonFiniteResult("operator application overflowed")
    return VectorState(out, op.norm_kind)


# ---------------------------------------------------------------------------
# resolvents


def _panel_weights(lam: float, h: float):
    """Exact integrals of e^{-lam v} * {1, v/h} over one panel [0, h].

    Closed forms are rearranged around expm1 so small and large lam*h are
    both safe; a short series covers the cancellation-prone region.
    """
    x = lam * h
    e0 = -np.expm1(-x) / lam
    if x < 1e-3:
        f = x * x / 2.0 - x**3 / 3.0 + x**4 / 8.0 - x**5 / 30.0 + x**6 / 144.0
    else:
        f = -np.expm1(-x) - x * np.exp(-x)
    e1 = f / (lam * lam * h)
    return float(e0), float(e1)


def _delay_prefactor(a: float, lam: float) -> float:
    denom = lam - a * np.exp(-lam)
    if abs(denom) < 1e-12:
        raise SingularPrefactor(f"lambda - a*e^-lambda = {denom:.3e} is singular")
    return float(denom)


def delay_resolvent(a: float, lam: float, psi: VectorState) -> VectorState:
    """Resolvent of the delay generator from its explicit integral formula.

    The formula is rearranged so every exponential has a nonpositive
    exponent, and the integrals are product-integrated exactly against the
    piecewise-linear interpolant of ``psi``: the result is exact for
    piecewise-linear inputs and stable for arbitrarily large ``lam``.
    """
    if lam <= abs(a):
        raise LambdaInSpectrum(f"need lambda > |a|, got lambda={lam}, a={a}")
    denom = _delay_prefactor(a, lam)
    vals = psi.coordinates if isinstance(psi, VectorState) else np.asarray(psi, dtype=float)
    n = vals.shape[0] - 1
    h = 1.0 / n
    e0, e1 = _panel_weights(lam, h)
    q = vals[:-1] * (e0 - e1) + vals[1:] * e1  # per-panel integral, kernel at panel start
    decay = np.exp(-lam * h)
    # G_i = sum_{j>=i} decay^(j-i) q_j  (tail of a geometric convolution)
    g = np.empty(n + 1)
    g[n] = 0.0
    for i in range(n - 1, -1, -1):
        g[i] = q[i] + decay * g[i + 1]
    w = float(np.exp(-lam * h * np.arange(n)) @ q)
    t = np.linspace(-1.0, 0.0, n + 1)
    out = g + np.exp(lam * t) * (vals[-1] + a * w) / denom
    return VectorState(out, SUP)


def delay_resolvent_matrix(a: float, lam: float, n_panels: int) -> np.ndarray:
    """Resolvent materialized on the grid: column j is the image of hat_j.

    Product integration is exact on hat functions, so this matrix equals
    ``delay_resolvent`` applied to each basis hat, computed in one shot.
    """
    if lam <= abs(a):
        raise LambdaInSpectrum(f"need lambda > |a|, got lambda={lam}, a={a}")
    denom = _delay_prefactor(a, lam)
    n = n_panels
    h = 1.0 / n
    e0, e1 = _panel_weights(lam, h)
    idx = np.arange(n + 1)
    # K[i, k] = exp(-lam h (k - i)) for panel k >= i, else 0
    diff = np.subtract.outer(np.arange(n), idx).T  # (n+1, n): panel minus row
    K = np.where(diff >= 0, np.exp(-lam * h * np.clip(diff, 0, None)), 0.0)
    B = np.zeros((n + 1, n + 1))
    B[:, :n] += (e0 - e1) * K
    B[:, 1:] += e1 * K
    w = np.zeros(n + 1)
    w[:n] += (e0 - e1) * np.exp(-lam * h * np.arange(n))
    w[1:] += e1 * np.exp(-lam * h * np.arange(n))
    row = np.zeros(n + 1)
    row[-1] = 1.0
    g = np.exp(lam * np.linspace(-1.0, 0.0, n + 1))
    return B + np.outer(g, row + a * w) / denom


def resolvent(op: OperatorModel, lam: float, y: VectorState) -> VectorState:
    """Solve (lam*I - A) x = y for the model's linear action."""
    if y.dimension != op.dimension:
        raise DimensionMismatch(
            f"operator dim {op.dimension} vs state dim {y.dimension}"
        )
    if isinstance(op, SpectralDiagonal):
        shifts = lam - op.eigenvalues
        if np.min(np.abs(shifts)) < _PIVOT_TOL * max(1.0, abs(lam)):
            raise LambdaInSpectrum(f"lambda={lam} hits the diagonal spectrum")
        return VectorState(y.coordinates / shifts, op.norm_kind)
    if isinstance(op, DenseMatrix):
        system = lam * np.eye(op.dimension) - op.entries
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LinAlgWarning)
            lu, piv = lu_factor(system)
        pivots = np.abs(np.diag(lu))
        if pivots.min() < _PIVOT_TOL * max(1.0, pivots.max()):
            raise LambdaInSpectrum(f"solve at lambda={lam} is singular to tolerance")
        return VectorState(lu_solve((lu, piv), y.coordinates), op.norm_kind)
    if isinstance(op, DelayGenerator):
        return delay_resolvent(op.coefficient, lam, y)
    raise UnboundedModel("linear resolvent undefined for semilinear models; use nonlinear_resolvent")


def resolvent_matrix(op: OperatorModel, lam: float) -> np.ndarray:
    """Materialized resolvent (lam*I - A)^{-1} on the model's grid/basis."""
    if isinstance(op, SpectralDiagonal):
        shifts = lam - op.eigenvalues
        if np.min(np.abs(shifts)) < _PIVOT_TOL * max(1.0, abs(lam)):
            raise LambdaInSpectrum(f"lambda={lam} hits the diagonal spectrum")
        return np.diag(1.0 / shifts)
    if isinstance(op, DenseMatrix):
        system = lam * np.eye(op.dimension) - op.entries
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LinAlgWarning)
            lu, piv = lu_factor(system)
        pivots = np.abs(np.diag(lu))
        if pivots.min() < _PIVOT_TOL * max(1.0, pivots.max()):
            raise LambdaInSpectrum(f"solve at lambda={lam} is singular to tolerance")
        return lu_solve((lu, piv), np.eye(op.dimension))
    if isinstance(op, DelayGenerator):
        return delay_resolvent_matrix(op.coefficient, lam, op.grid_size)
    raise UnboundedModel("resolvent matrix undefined for semilinear models")


# ---------------------------------------------------------------------------
# norms and spectra


def operator_norm(op: OperatorModel) -> float:
    """Euclidean models: largest singular value; sup models: max abs row sum."""
    if isinstance(op, SpectralDiagonal):
        return float(np.max(np.abs(op.eigenvalues)))
    if isinstance(op, DenseMatrix):
        if op.norm_kind == SUP:
            return float(np.linalg.norm(op.entries, np.inf))
        return float(np.linalg.norm(op.entries, 2))
    raise UnboundedModel(f"no finite operator norm for raw {type(op).__name__}")


def _spectrum_sort(values: np.ndarray) -> list[complex]:
    order = np.lexsort((-values.imag, -values.real, -np.abs(values)))
    return [complex(values[i]) for i in order]


def spectrum(op: OperatorModel) -> list[complex]:
    """Eigenvalues sorted by modulus descending, then real part."""
    if isinstance(op, SpectralDiagonal):
        return _spectrum_sort(op.eigenvalues.astype(complex))
    if isinstance(op, DenseMatrix):
        return _spectrum_sort(np.linalg.eigvals(op.entries))
    raise UnboundedModel(f"spectrum unavailable for {type(op).__name__}")


# ---------------------------------------------------------------------------
# structured-text serialization


def to_document(op: OperatorModel) -> dict:
    if isinstance(op, DenseMatrix):
        return {
            "kind": "dense_matrix",
            "dimension": op.dimension,
            "parameters": {
                "entries": [[float(v) for v in row] for row in np.asarray(op.entries, dtype=float)],
                "norm": op.norm_kind,
            },
        }
    if isinstance(op, SpectralDiagonal):
        return {
            "kind": "spectral_diagonal",
            "dimension": op.dimension,
            "parameters": {"eigenvalues": [float(v) for v in op.eigenvalues]},
        }
    if isinstance(op, DelayGenerator):
        return {
            "kind": "delay_generator",
            "dimension": op.dimension,
            "parameters": {"coefficient": op.coefficient, "grid_size": op.grid_size},
        }
    if isinstance(op, SemilinearComposite):
        return {
            "kind": "semilinear",
            "dimension": op.dimension,
            "parameters": {
                "linear": to_document(op.linear),
                "nonlinearity": op.nonlinearity.name,
            },
        }
    raise UnboundedModel(f"cannot serialize {type(op).__name__}")


def from_document(doc: dict, nonlinearity_resolver=None) -> OperatorModel:
    kind = doc.get("kind")
    params = doc.get("parameters", {})
    if kind == "dense_matrix":
        return DenseMatrix(np.asarray(params["entries"], dtype=float), params.get("norm", EUCLIDEAN))
    if kind == "spectral_diagonal":
        return SpectralDiagonal(np.asarray(params["eigenvalues"], dtype=float))
    if kind == "delay_generator":
        return DelayGenerator(params["coefficient"], params["grid_size"])
    if kind == "semilinear":
        if nonlinearity_resolver is None:
            raise ValueError("semilinear documents need a nonlinearity resolver")
        linear = from_document(params["linear"])
        return SemilinearComposite(linear, nonlinearity_resolver(params["nonlinearity"]))
    raise ValueError(f"unknown operator kind {kind!r}")
