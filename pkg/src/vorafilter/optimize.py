"""Filter optimization: projected gradient ascent and regularized Newton.

Both methods maximize the filtered Vora-Value over the box
``[tau_min, tau_max]^n``. Because the objective is invariant to rescaling
the filter, iterates are kept in a fixed gauge (maximum transmittance equal
to ``tau_max``); the gauge step never changes the objective.

The Newton direction solves ``(H + alpha I) d = -(g + alpha f)`` on the
components not pinned at an active bound. A positive ``alpha`` is required:
at ``alpha = 0`` the step collapses onto the current filter itself and
carries no search information. Every candidate step must strictly increase
the objective, so reported traces are monotone by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .calculus import (
    BasisSet,
    _filtered_projector,
    _vora_gradient_core,
    _vora_hessian_raw,
)
from .errors import NoAscent, NonPositiveFilter, SingularSystem
from .projectors import _orthonormal_columns_unchecked, orthonormal_columns
from .spectral import FilterSpectrum, SensorSet
from .vora import _require_same_grid

_METHODS = ("grad", "newton")
_INITS = ("ones", "random")

# Tolerance for deciding a component sits on a box bound.
_BOUND_EPS = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs for :func:`optimize`; defaults suit the 31-sample visible grid."""

    method: str = "grad"
    alpha: float = 1e-4
    max_iters: int = 5000
    tol_obj: float = 1e-12
    tol_grad: float = 1e-8
    tau_min: float = 1e-4
    tau_max: float = 1.0
    init: str = "ones"
    seed: int = 0
    basis: BasisSet | None = None
    shrink: float = 0.5
    max_backtracks: int = 50

    def __post_init__(self) -> None:
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}")
        if self.init not in _INITS:
            raise ValueError(f"init must be one of {_INITS}")
        if not (0.0 < self.tau_min < self.tau_max <= 1.0):
            raise ValueError("need 0 < tau_min < tau_max <= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.method == "newton" and self.alpha <= 0:
            raise ValueError("newton method requires alpha > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not (0.0 < self.shrink < 1.0):
            raise ValueError("shrink must be in (0, 1)")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be at least 1")
        if self.tol_obj < 0 or self.tol_grad < 0:
            raise ValueError("tolerances must be nonnegative")


@dataclass(frozen=True)
class IterationRecord:
    """One accepted step. ``step_len`` is the 2-norm of the raw step t*d."""

    iteration: int
    vora: float
    mu: float
    step_len: float
    grad_inf_norm: float
    backtracks: int


@dataclass(frozen=True, eq=False)
class OptimizationReport:
    """Trace and outcome of one optimization run."""

    iterations: tuple[IterationRecord, ...]
    final_filter: FilterSpectrum
    normalized_filter: NDArray[np.float64]
    initial_vora: float
    final_vora: float
    termination: str
    coefficients: NDArray[np.float64] | None = None

    @property
    def accepted_steps(self) -> int:
        return self.iterations[-1].iteration if self.iterations else 0


def project_to_box(values: NDArray[np.float64], tau_min: float,
                   tau_max: float) -> NDArray[np.float64]:
    """Componentwise clamp into [tau_min, tau_max]."""
    return np.clip(np.asarray(values, dtype=np.float64), tau_min, tau_max)


def newton_step(camera: SensorSet, observer: SensorSet, filt: FilterSpectrum,
                alpha: float) -> NDArray[np.float64]:
    """Regularized Newton step ``-(H + alpha I)^-1 (g + alpha f)``.

    Solved as a symmetric linear system; no explicit inverse is formed.
    ``alpha`` must be positive: without regularization the step degenerates
    to the current filter and the search learns nothing.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive for a Newton step")
    _require_same_grid(camera.grid, observer.grid, filt.grid)
    f = filt.transmittance
    v = orthonormal_columns(observer.responses)
    a = v @ v.T
    b = _filtered_projector(camera.responses, f)
    g = _vora_gradient_core(b, a, f)
    raw = _vora_hessian_raw(b, a, f)
    h = 0.5 * (raw + raw.T)
    h[np.diag_indices_from(h)] += alpha
    try:
        return np.linalg.solve(h, -(g + alpha * f))
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"Newton system is singular (alpha={alpha:g})") from exc


class _RunState:
    """Innards of one optimization run (full-space or basis mode)."""

    def __init__(self, camera: SensorSet, observer: SensorSet,
                 config: OptimizerConfig,
                 initial_filter: FilterSpectrum | None) -> None:
        _require_same_grid(camera.grid, observer.grid)
        if config.basis is not None:
            _require_same_grid(camera.grid, config.basis.grid)
        self.config = config
        self.grid = camera.grid
        self.q = camera.responses
        self.v = orthonormal_columns(observer.responses)
        self.a = self.v @ self.v.T
        self.basis = config.basis.basis if config.basis is not None else None
        self.coeffs: NDArray[np.float64] | None = None
        f0 = self._initial_values(initial_filter)
        if self.basis is not None:
            fit, *_ = np.linalg.lstsq(self.basis, f0, rcond=None)
            self.coeffs, self.f = self._feasible_coeffs(fit)
        else:
            self.f = self._gauge_full(f0)
        self.value = self.vora(self.f)

    def _initial_values(self, initial_filter: FilterSpectrum | None) -> NDArray[np.float64]:
        cfg = self.config
        if initial_filter is not None:
            _require_same_grid(self.grid, initial_filter.grid)
            return initial_filter.transmittance.copy()
        if cfg.init == "ones":
            return np.ones(self.grid.count)
        rng = np.random.default_rng(cfg.seed)
        return rng.uniform(cfg.tau_min, cfg.tau_max, self.grid.count)

    def _feasible_coeffs(
        self, fit: NDArray[np.float64]
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        # Blend toward the constant-filter fit until the combination is a
        # valid (positive, in-box after gauging) filter.
        ones_fit, *_ = np.linalg.lstsq(self.basis, np.ones(self.grid.count),
                                       rcond=None)
        blend = 1.0
        for _ in range(60):
            gauged = self._gauge_coeffs(ones_fit + blend * (fit - ones_fit))
            if gauged is not None:
                return gauged
            blend *= 0.5
        raise NonPositiveFilter("could not find a feasible basis start point")

    # -- gauge + feasibility --------------------------------------------

    def _gauge_full(self, values: NDArray[np.float64]) -> NDArray[np.float64]:
        scaled = values * (self.config.tau_max / values.max())
        return project_to_box(scaled, self.config.tau_min, self.config.tau_max)

    def _gauge_coeffs(
        self, coeffs: NDArray[np.float64]
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]] | None:
        """Rescale coefficients into the gauge; returns (coeffs, filter).

        The filter is recomputed from the scaled coefficients so the
        feasibility check sees exactly the vector later code will use
        (scaling f and scaling c differ by an ulp).
        """
        cfg = self.config
        c = coeffs
        f = self.basis @ c
        peak = f.max()
        if not np.isfinite(peak) or peak <= 0.0:
            return None
        for _ in range(4):
            c = c * (cfg.tau_max / peak)
            f = self.basis @ c
            peak = f.max()
            if peak <= cfg.tau_max:
                break
        else:
            return None
        if np.any(f < cfg.tau_min):
            return None
        return c, f

    # -- objective and derivatives ---------------------------------------

    def vora(self, f: NDArray[np.float64]) -> float:
        w = _orthonormal_columns_unchecked(f[:, None] * self.q)
        return float(np.sum((w.T @ self.v) ** 2) / 3.0)

    def mu(self, f: NDArray[np.float64]) -> float:
        return self.vora(f) + 0.5 * self.config.alpha * float(f @ f)

    def derivatives(self) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
        """Filtered projector, gradient, and box-projected gradient at self.f."""
        b = _filtered_projector(self.q, self.f)
        g = _vora_gradient_core(b, self.a, self.f)
        cfg = self.config
        gp = g.copy()
        gp[(self.f >= cfg.tau_max - _BOUND_EPS) & (g > 0)] = 0.0
        gp[(self.f <= cfg.tau_min + _BOUND_EPS) & (g < 0)] = 0.0
        return b, g, gp

    def newton_direction(self, b: NDArray[np.float64],
                         g: NDArray[np.float64]) -> NDArray[np.float64] | None:
        """Regularized Newton direction, frozen on the active lower bound.

        Only the tau_min bound is treated as active: the upper bound is a
        gauge artifact (rescaling relaxes it), so components riding it stay
        in the solve.
        """
        cfg = self.config
        raw = _vora_hessian_raw(b, self.a, self.f)
        h = 0.5 * (raw + raw.T)
        h[np.diag_indices_from(h)] += cfg.alpha
        rhs = -(g + cfg.alpha * self.f)
        if self.basis is not None:
            hb = self.basis.T @ h @ self.basis
            try:
                return np.linalg.solve(hb, self.basis.T @ rhs)
            except np.linalg.LinAlgError:
                return None
        free = ~((self.f <= cfg.tau_min + _BOUND_EPS) & (g < 0.0))
        if not free.any():
            return None
        d = np.zeros_like(self.f)
        try:
            if free.all():
                d = np.linalg.solve(h, rhs)
            else:
                d[free] = np.linalg.solve(h[np.ix_(free, free)], rhs[free])
        except np.linalg.LinAlgError:
            return None
        return d

    # -- line search -------------------------------------------------------

    def line_search(self, direction: NDArray[np.float64]):
        """First backtracked step that strictly increases the objective.

        Returns (new_f, new_coeffs, value, step_len, backtracks) or None.
        """
        cfg = self.config
        d_norm = float(np.linalg.norm(direction))
        if d_norm == 0.0 or not np.isfinite(d_norm):
            return None
        t = 1.0
        for bt in range(cfg.max_backtracks):
            if self.basis is not None:
                gauged = self._gauge_coeffs(self.coeffs + t * direction)
                if gauged is not None:
                    c_t, f_t = gauged
                    v_t = self.vora(f_t)
                    if v_t > self.value:
                        return f_t, c_t, v_t, t * d_norm, bt
            else:
                f_t = self.f + t * direction
                if f_t.max() > 0.0:
                    f_t = self._gauge_full(f_t)
                    v_t = self.vora(f_t)
                    if v_t > self.value:
                        return f_t, None, v_t, t * d_norm, bt
            t *= cfg.shrink
        return None


def optimize(camera: SensorSet, observer: SensorSet,
             config: OptimizerConfig | None = None,
             initial_filter: FilterSpectrum | None = None) -> OptimizationReport:
    """Maximize the filtered Vora-Value; returns the per-iteration trace.

    Termination labels:

    converged_grad  projected gradient inf-norm below ``tol_grad``
    converged_obj   accepted improvements below ``tol_obj`` three in a row
    stalled         no improving step found after the first iteration
    max_iters       iteration budget exhausted

    Raises :class:`NoAscent` if the very first line search fails while the
    gradient is still meaningfully nonzero.
    """
    cfg = config if config is not None else OptimizerConfig()
    state = _RunState(camera, observer, cfg, initial_filter)
    initial_vora = state.value
    rows: list[IterationRecord] = []
    small_steps = 0
    termination = "max_iters"

    for it in range(1, cfg.max_iters + 1):
        b, g, gp = state.derivatives()
        g_steer = state.basis.T @ g if state.basis is not None else gp
        grad_norm = float(np.max(np.abs(g_steer)))
        if it == 1:
            rows.append(IterationRecord(0, state.value, state.mu(state.f),
                                        0.0, grad_norm, 0))
        if grad_norm < cfg.tol_grad:
            termination = "converged_grad"
            break

        best = None
        if cfg.method == "newton":
            d_newton = state.newton_direction(b, g)
            if d_newton is not None:
                best = state.line_search(d_newton)
            # Race the plain ascent direction; near the optimum the damped
            # Newton system can go quiet while the gradient still climbs.
            res_g = state.line_search(g_steer)
            if res_g is not None and (best is None or res_g[2] > best[2]):
                best = res_g
        else:
            best = state.line_search(g_steer)

        if best is None:
            if it == 1:
                raise NoAscent("line search found no improving step at iteration 1")
            termination = "stalled"
            break

        f_new, c_new, v_new, step_len, backtracks = best
        gain = v_new - state.value
        state.f, state.value = f_new, v_new
        if c_new is not None:
            state.coeffs = c_new
        rows.append(IterationRecord(it, state.value, state.mu(state.f),
                                    step_len, grad_norm, backtracks))
        small_steps = small_steps + 1 if gain < cfg.tol_obj else 0
        if small_steps >= 3:
            termination = "converged_obj"
            break

    final = FilterSpectrum(grid=state.grid, transmittance=state.f,
                           tau_min=cfg.tau_min, tau_max=cfg.tau_max)
    return OptimizationReport(
        iterations=tuple(rows),
        final_filter=final,
        normalized_filter=state.f / float(state.f.max()),
        initial_vora=initial_vora,
        final_vora=state.value,
        termination=termination,
        coefficients=None if state.coeffs is None else state.coeffs.copy(),
    )
