"""The Vora-Value and its filtered and regularized variants.

The Vora-Value measures how similarly two trichromatic sensor sets sample
spectra: it is the mean squared cosine of the principal angles between their
column spaces, a number in [0, 1]. A value of 1 means the camera responses
are an exact linear transform of the observer's tristimulus values.

Evaluation goes through orthonormal bases W and V of the two spaces:

    value = trace(W W^T V V^T) / 3 = ||W^T V||_F^2 / 3

which is algebraically identical to the normal-equations formula
``trace(Q (Q^T Q)^-1 Q^T X (X^T X)^-1 X^T) / 3`` but numerically stable for
ill-conditioned sensor matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import GridMismatch
from .projectors import orthonormal_columns
from .spectral import FilterSpectrum, SensorSet

# Slack for the [0, 1] range check; violations beyond this indicate a bug,
# not round-off.
RANGE_TOL = 1e-12


@dataclass(frozen=True)
class VoraValue:
    """Raw metric value plus a clamped view for reporting.

    Tests and numerics should use ``raw``; user-facing output uses ``value``
    so that harmless round-off like 1+2e-16 prints as 1.0.
    """

    raw: float

    def __post_init__(self) -> None:
        if not (-RANGE_TOL <= self.raw <= 1.0 + RANGE_TOL):
            raise ValueError(f"Vora-Value {self.raw!r} outside [0, 1] tolerance")

    @property
    def value(self) -> float:
        return min(max(self.raw, 0.0), 1.0)

    def __float__(self) -> float:
        return self.raw


def _require_same_grid(*grids) -> None:
    first = grids[0]
    for g in grids[1:]:
        if g != first:
            raise GridMismatch(f"wavelength grids differ: {g} vs {first}")


def _vora_of_matrices(camera_like: NDArray[np.float64],
                      observer_like: NDArray[np.float64]) -> float:
    w = orthonormal_columns(camera_like)
    v = orthonormal_columns(observer_like)
    return float(np.sum((w.T @ v) ** 2) / 3.0)


def vora_value(camera: SensorSet, observer: SensorSet) -> VoraValue:
    """Similarity of the camera and observer sensor spaces, in [0, 1]."""
    _require_same_grid(camera.grid, observer.grid)
    return VoraValue(_vora_of_matrices(camera.responses, observer.responses))


def filtered_vora_value(camera: SensorSet, observer: SensorSet,
                        filt: FilterSpectrum) -> VoraValue:
    """Vora-Value of the effective camera seen through a transmissive filter.

    The effective sensitivities are the camera's, scaled per wavelength by
    the filter transmittance. A unit filter reproduces :func:`vora_value`
    through the identical code path.
    """
    _require_same_grid(camera.grid, observer.grid, filt.grid)
    effective = filt.transmittance[:, None] * camera.responses
    return VoraValue(_vora_of_matrices(effective, observer.responses))


def regularized_objective(camera: SensorSet, observer: SensorSet,
                          filt: FilterSpectrum, alpha: float) -> float:
    """Filtered Vora-Value plus the quadratic penalty ``alpha/2 * ||f||^2``.

    This is the primitive whose gradient is the filtered-value gradient plus
    ``alpha * f`` and whose Hessian gains ``alpha * I``; the penalty is what
    makes Newton steps informative (see the optimizer module).
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    nu = filtered_vora_value(camera, observer, filt).raw
    f = filt.transmittance
    return nu + 0.5 * alpha * float(f @ f)
