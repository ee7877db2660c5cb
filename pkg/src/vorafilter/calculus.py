"""Analytic gradient and Hessian of the filtered Vora-Value.

Everything here differentiates ``value(f) = trace(P{FQ} P{X}) / 3`` with
respect to the filter vector ``f``, where ``F = diag(f)``, ``Q`` holds the
camera sensitivities and ``P{X}`` projects onto the observer space.

Writing ``A = P{X}``, ``B = P{FQ}`` and ``C = F^-1``, the closed forms are

    grad(f)    = (2/3) * ediag(C B A (I - B))
    hessian(f) = (2/3) * [ -2 (CB) o ((I - 2B) A B C)
                           +  (CBC) o ((I - 2B) A)
                           -  (C B A B C) o I ]

with ``o`` the elementwise product. The Hessian expression is already
symmetric in exact arithmetic; assembly asymmetry beyond round-off is
treated as a hard error rather than silently averaged away.

Central-difference oracles (:func:`fd_gradient`, :func:`fd_hessian`) are
provided so every closed form can be verified independently; they are the
acceptance authority for both derivative orders.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .errors import BadBasisSpec, NonPositiveFilter, StepTooLarge
from .projectors import _orthonormal_columns_unchecked, orthonormal_columns
from .spectral import FilterSpectrum, SensorSet, WavelengthGrid, numerical_rank
from .vora import _require_same_grid

# Assembly asymmetry above this is a bug in the closed form, not round-off.
HESSIAN_ASYMMETRY_TOL = 1e-9
# Validation bound for the symmetrized result stored in HessianMatrix.
HESSIAN_SYMMETRY_TOL = 1e-10

# Central-difference steps balancing truncation against round-off for
# unit-scale filters.
FD_GRADIENT_STEP = 1e-6
FD_HESSIAN_STEP = 1e-5

BASIS_KINDS = ("cosine", "gaussian", "identity")


@dataclass(frozen=True, eq=False)
class GradientVector:
    """Derivative of the filtered Vora-Value w.r.t. each transmittance."""

    grid: WavelengthGrid
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.shape != (self.grid.count,):
            raise ValueError(f"gradient must have length {self.grid.count}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("gradient entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __array__(self, dtype=None, copy=None) -> NDArray[np.float64]:
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True, eq=False)
class HessianMatrix:
    """Second derivative matrix; symmetric by construction."""

    matrix: NDArray[np.float64]

    def __post_init__(self) -> None:
        arr = np.array(self.matrix, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"hessian must be square, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("hessian entries must be finite")
        if np.max(np.abs(arr - arr.T)) > HESSIAN_SYMMETRY_TOL:
            raise ValueError("hessian is not symmetric")
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    def __array__(self, dtype=None, copy=None) -> NDArray[np.float64]:
        return np.asarray(self.matrix, dtype=dtype)


@dataclass(frozen=True, eq=False)
class BasisSet:
    """Columns spanning the subspace in which a smooth filter is expressed."""

    grid: WavelengthGrid
    basis: NDArray[np.float64]
    kind: str = "custom"

    def __post_init__(self) -> None:
        arr = np.array(self.basis, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] != self.grid.count:
            raise ValueError(
                f"basis must be {self.grid.count} x k, got {arr.shape}"
            )
        if not (1 <= arr.shape[1] <= self.grid.count):
            raise BadBasisSpec(f"basis size k={arr.shape[1]} outside [1, n]")
        if numerical_rank(arr) < arr.shape[1]:
            raise BadBasisSpec("basis columns are not linearly independent")
        arr.setflags(write=False)
        object.__setattr__(self, "basis", arr)

    @property
    def size(self) -> int:
        return int(self.basis.shape[1])


def make_basis(kind: str, k: int, grid: WavelengthGrid) -> BasisSet:
    """Construct a named basis family.

    cosine    column j samples cos(pi * j * (i + 1/2) / n); j = 0 is constant
    gaussian  k bumps, centers evenly spaced over the grid, sigma = span / k
    identity  first k columns of the identity (no smoothing)
    """
    if kind not in BASIS_KINDS:
        raise BadBasisSpec(f"unknown basis kind {kind!r}; choose from {BASIS_KINDS}")
    n = grid.count
    if not (1 <= k <= n):
        raise BadBasisSpec(f"basis size k={k} outside [1, {n}]")
    if kind == "identity":
        cols = np.eye(n)[:, :k]
    elif kind == "cosine":
        i = np.arange(n, dtype=np.float64)
        cols = np.column_stack(
            [np.cos(np.pi * j * (i + 0.5) / n) for j in range(k)]
        )
    else:
        lam = grid.wavelengths
        centers = np.linspace(grid.start_nm, grid.end_nm, k)
        sigma = (grid.end_nm - grid.start_nm) / k
        cols = np.column_stack(
            [np.exp(-0.5 * ((lam - c) / sigma) ** 2) for c in centers]
        )
    return BasisSet(grid=grid, basis=cols, kind=kind)


def _diag_of_product(m: NDArray[np.float64],
                     n: NDArray[np.float64]) -> NDArray[np.float64]:
    # ediag(M N) without forming M N
    return np.einsum("ij,ji->i", m, n)


def _filtered_projector(camera_responses: NDArray[np.float64],
                        f: NDArray[np.float64]) -> NDArray[np.float64]:
    # Positive f times rank-3 responses is rank 3 by construction.
    w = _orthonormal_columns_unchecked(f[:, None] * camera_responses)
    return w @ w.T


def _vora_gradient_core(b: NDArray[np.float64], a: NDArray[np.float64],
                        f: NDArray[np.float64]) -> NDArray[np.float64]:
    ab = a @ b
    return (2.0 / 3.0) * (_diag_of_product(b, a) - _diag_of_product(b, ab)) / f


def _vora_hessian_raw(b: NDArray[np.float64], a: NDArray[np.float64],
                      f: NDArray[np.float64]) -> NDArray[np.float64]:
    """Unsymmetrized Hessian assembly (symmetric up to round-off)."""
    ab = a @ b
    bab = b @ ab
    cb = b / f[:, None]
    cbc = cb / f[None, :]
    term1 = -2.0 * cb * ((ab - 2.0 * bab) / f[None, :])
    term2 = cbc * (a - 2.0 * ab.T)
    diag3 = _diag_of_product(b, ab) / (f * f)
    h = (2.0 / 3.0) * (term1 + term2)
    h[np.diag_indices_from(h)] -= (2.0 / 3.0) * diag3
    return h


def _observer_projector(observer: SensorSet) -> NDArray[np.float64]:
    v = orthonormal_columns(observer.responses)
    return v @ v.T


def _as_filter_values(filt: FilterSpectrum | NDArray[np.float64]) -> NDArray[np.float64]:
    if isinstance(filt, FilterSpectrum):
        return filt.transmittance
    arr = np.asarray(filt, dtype=np.float64)
    if np.any(arr <= 0.0):
        raise NonPositiveFilter("filter values must be strictly positive")
    return arr


def gradient(camera: SensorSet, observer: SensorSet,
             filt: FilterSpectrum) -> GradientVector:
    """Analytic gradient of the filtered Vora-Value at ``filt``."""
    _require_same_grid(camera.grid, observer.grid, filt.grid)
    f = filt.transmittance
    a = _observer_projector(observer)
    b = _filtered_projector(camera.responses, f)
    return GradientVector(grid=filt.grid, values=_vora_gradient_core(b, a, f))


def gradient_in_basis(camera: SensorSet, observer: SensorSet,
                      basis: BasisSet, coeffs: NDArray[np.float64]) -> NDArray[np.float64]:
    """Chain-rule gradient w.r.t. basis coefficients ``c``, where ``f = B c``."""
    _require_same_grid(camera.grid, observer.grid, basis.grid)
    c = np.asarray(coeffs, dtype=np.float64)
    if c.shape != (basis.size,):
        raise ValueError(f"coeffs must have length {basis.size}, got {c.shape}")
    f = basis.basis @ c
    if np.any(f <= 0.0):
        raise NonPositiveFilter("basis combination has nonpositive transmittance")
    a = _observer_projector(observer)
    b = _filtered_projector(camera.responses, f)
    return basis.basis.T @ _vora_gradient_core(b, a, f)


def hessian(camera: SensorSet, observer: SensorSet, filt: FilterSpectrum,
            alpha: float = 0.0) -> HessianMatrix:
    """Analytic Hessian of the filtered Vora-Value, plus ``alpha * I``.

    With ``alpha = 0`` this is the plain second derivative; a positive
    ``alpha`` gives the regularized-objective Hessian used by the Newton
    optimizer.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    _require_same_grid(camera.grid, observer.grid, filt.grid)
    f = filt.transmittance
    a = _observer_projector(observer)
    b = _filtered_projector(camera.responses, f)
    raw = _vora_hessian_raw(b, a, f)
    asym = float(np.max(np.abs(raw - raw.T)))
    if asym > HESSIAN_ASYMMETRY_TOL:
        raise ArithmeticError(
            f"hessian assembly asymmetry {asym:.3e} exceeds {HESSIAN_ASYMMETRY_TOL:g}"
        )
    sym = 0.5 * (raw + raw.T)
    if alpha:
        sym[np.diag_indices_from(sym)] += alpha
    return HessianMatrix(matrix=sym)


def hessian_in_basis(camera: SensorSet, observer: SensorSet, basis: BasisSet,
                     coeffs: NDArray[np.float64], alpha: float = 0.0) -> NDArray[np.float64]:
    """Hessian w.r.t. basis coefficients: ``B^T (H + alpha I) B``."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    _require_same_grid(camera.grid, observer.grid, basis.grid)
    c = np.asarray(coeffs, dtype=np.float64)
    f = basis.basis @ c
    if np.any(f <= 0.0):
        raise NonPositiveFilter("basis combination has nonpositive transmittance")
    a = _observer_projector(observer)
    b = _filtered_projector(camera.responses, f)
    raw = _vora_hessian_raw(b, a, f)
    h = 0.5 * (raw + raw.T)
    if alpha:
        h[np.diag_indices_from(h)] += alpha
    return basis.basis.T @ h @ basis.basis


def fd_gradient(objective: Callable[[NDArray[np.float64]], float],
                filt: FilterSpectrum | NDArray[np.float64],
                h: float = FD_GRADIENT_STEP) -> NDArray[np.float64]:
    """Central-difference gradient of a scalar objective at a filter point.

    Independent of every closed form in this module; used to verify them.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    f = _as_filter_values(filt)
    if float(f.min()) - h <= 0.0:
        raise StepTooLarge(f"step {h:g} leaves the positive region at min(f)={f.min():g}")
    g = np.empty_like(f)
    for i in range(f.size):
        fp = f.copy()
        fm = f.copy()
        fp[i] += h
        fm[i] -= h
        g[i] = (objective(fp) - objective(fm)) / (2.0 * h)
    return g


def fd_hessian(gradient_fn: Callable[[NDArray[np.float64]], NDArray[np.float64]],
               filt: FilterSpectrum | NDArray[np.float64],
               h: float = FD_HESSIAN_STEP) -> NDArray[np.float64]:
    """Central-difference Jacobian of a gradient function at a filter point."""
    if h <= 0:
        raise ValueError("h must be positive")
    f = _as_filter_values(filt)
    if float(f.min()) - h <= 0.0:
        raise StepTooLarge(f"step {h:g} leaves the positive region at min(f)={f.min():g}")
    n = f.size
    out = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        fp = f.copy()
        fm = f.copy()
        fp[i] += h
        fm[i] -= h
        out[:, i] = (np.asarray(gradient_fn(fp)) - np.asarray(gradient_fn(fm))) / (2.0 * h)
    return out
