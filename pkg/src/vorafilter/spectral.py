"""Spectral data containers, CSV ingestion, and grid resampling.

All downstream math operates on a shared :class:`WavelengthGrid`. Input
tables may come at any (sorted, duplicate-free) wavelength spacing; they are
linearly interpolated onto the grid at load time. Wavelengths outside the
grid are discarded, never extrapolated. Containers are immutable after
construction and safe to share between threads.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from .errors import (
    DuplicateWavelength,
    InsufficientCoverage,
    MalformedCsv,
    NonPositiveFilter,
    RankDeficient,
    UnsortedWavelength,
)

# Physical transmittance box used when a filter does not carry its own.
DEFAULT_TAU_MIN = 1e-4
DEFAULT_TAU_MAX = 1.0

# Slack for "source range covers the grid" comparisons, in nanometers.
_COVERAGE_EPS = 1e-9


def _readonly(arr: NDArray[np.float64]) -> NDArray[np.float64]:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class WavelengthGrid:
    """Uniform sampling lattice: ``count`` samples from ``start_nm`` in steps of ``step_nm``."""

    start_nm: float = 400.0
    step_nm: float = 10.0
    count: int = 31

    def __post_init__(self) -> None:
        if not (self.step_nm > 0):
            raise ValueError("step_nm must be positive")
        if self.count < 4:
            raise ValueError("count must be at least 4")

    @property
    def end_nm(self) -> float:
        return self.start_nm + self.step_nm * (self.count - 1)

    @property
    def wavelengths(self) -> NDArray[np.float64]:
        """Sample positions in nanometers (fresh array on every access)."""
        return self.start_nm + self.step_nm * np.arange(self.count, dtype=np.float64)


DEFAULT_GRID = WavelengthGrid()


def numerical_rank(matrix: NDArray[np.float64]) -> int:
    """Rank from singular values with threshold ``sigma_1 * n * eps * 1e3``.

    The 1e3 safety margin keeps measured (noisy) sensor data from being
    declared full rank on the strength of pure round-off.
    """
    m = np.asarray(matrix, dtype=np.float64)
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    tol = s[0] * max(m.shape) * np.finfo(np.float64).eps * 1e3
    return int(np.sum(s > tol))


@dataclass(frozen=True, eq=False)
class SensorSet:
    """Three-channel sensor responses sampled on a wavelength grid.

    ``responses`` is n-by-3 with one column per channel; entries may be
    negative (color matching functions obtained by linear transform are).
    The matrix must have full column rank: a rank-deficient sensor set spans
    a degenerate color space and every projector built from it is undefined.
    """

    grid: WavelengthGrid
    responses: NDArray[np.float64]
    channel_names: tuple[str, str, str] = ("c1", "c2", "c3")

    def __post_init__(self) -> None:
        arr = np.array(self.responses, dtype=np.float64, copy=True)
        if arr.shape != (self.grid.count, 3):
            raise ValueError(
                f"responses must be {self.grid.count}x3, got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("responses must be finite")
        if numerical_rank(arr) < 3:
            raise RankDeficient("sensor responses have numerical rank < 3")
        names = tuple(str(n) for n in self.channel_names)
        if len(names) != 3:
            raise ValueError("exactly three channel names required")
        object.__setattr__(self, "responses", _readonly(arr))
        object.__setattr__(self, "channel_names", names)


@dataclass(frozen=True, eq=False)
class FilterSpectrum:
    """Per-wavelength transmittance, boxed to a physical range.

    Strict positivity is mandatory: the math places the filter on the
    diagonal of a matrix that must stay invertible.
    """

    grid: WavelengthGrid
    transmittance: NDArray[np.float64]
    tau_min: float = DEFAULT_TAU_MIN
    tau_max: float = DEFAULT_TAU_MAX

    def __post_init__(self) -> None:
        if not (0.0 < self.tau_min <= self.tau_max):
            raise ValueError("need 0 < tau_min <= tau_max")
        arr = np.array(self.transmittance, dtype=np.float64, copy=True)
        if arr.shape != (self.grid.count,):
            raise ValueError(
                f"transmittance must have length {self.grid.count}, got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("transmittance must be finite")
        if np.any(arr <= 0.0):
            raise NonPositiveFilter("filter transmittance must be strictly positive")
        if np.any(arr < self.tau_min) or np.any(arr > self.tau_max):
            raise ValueError(
                f"transmittance outside [{self.tau_min}, {self.tau_max}]"
            )
        object.__setattr__(self, "transmittance", _readonly(arr))

    @classmethod
    def ones(cls, grid: WavelengthGrid, tau_min: float = DEFAULT_TAU_MIN,
             tau_max: float = DEFAULT_TAU_MAX) -> "FilterSpectrum":
        """The neutral filter (transmits everything)."""
        return cls(grid, np.ones(grid.count), tau_min=tau_min, tau_max=tau_max)

    @property
    def normalized(self) -> NDArray[np.float64]:
        """Transmittance rescaled so its maximum is 1 (the scale gauge)."""
        return self.transmittance / float(self.transmittance.max())


class SpectralTable(NamedTuple):
    """Raw parsed CSV content, exactly as given (not resampled)."""

    wavelengths: NDArray[np.float64]
    values: NDArray[np.float64]
    channel_names: tuple[str, ...]


def parse_spectral_csv(text: str, expected_channels: int) -> SpectralTable:
    """Parse a spectral CSV with header ``wavelength,<c1>[,<c2>,...]``.

    Comment lines starting with ``#`` and blank lines are skipped. Rows must
    be sorted ascending by wavelength with no duplicates. Returns the raw
    samples without resampling.
    """
    header: list[str] | None = None
    wavelengths: list[float] = []
    rows: list[list[float]] = []
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if header is None:
            if len(fields) != expected_channels + 1:
                raise MalformedCsv(
                    f"line {lineno}: header has {len(fields)} columns, "
                    f"expected {expected_channels + 1}"
                )
            if fields[0].lower() != "wavelength":
                raise MalformedCsv(
                    f"line {lineno}: first header column must be 'wavelength', "
                    f"got {fields[0]!r}"
                )
            header = fields
            continue
        if len(fields) != expected_channels + 1:
            raise MalformedCsv(
                f"line {lineno}: row has {len(fields)} columns, "
                f"expected {expected_channels + 1}"
            )
        try:
            numbers = [float(f) for f in fields]
        except ValueError as exc:
            raise MalformedCsv(f"line {lineno}: non-numeric cell ({exc})") from None
        if not all(np.isfinite(numbers)):
            raise MalformedCsv(f"line {lineno}: non-finite value")
        if wavelengths:
            if numbers[0] == wavelengths[-1]:
                raise DuplicateWavelength(
                    f"line {lineno}: duplicate wavelength {numbers[0]:g}"
                )
            if numbers[0] < wavelengths[-1]:
                raise UnsortedWavelength(
                    f"line {lineno}: wavelength {numbers[0]:g} after {wavelengths[-1]:g}"
                )
        wavelengths.append(numbers[0])
        rows.append(numbers[1:])
    if header is None:
        raise MalformedCsv("no header row found")
    if not rows:
        raise MalformedCsv("no data rows found")
    return SpectralTable(
        wavelengths=_readonly(np.asarray(wavelengths, dtype=np.float64)),
        values=_readonly(np.asarray(rows, dtype=np.float64)),
        channel_names=tuple(header[1:]),
    )


def format_spectral_csv(
    wavelengths: NDArray[np.float64],
    values: NDArray[np.float64],
    channel_names: tuple[str, ...] | list[str],
) -> str:
    """Render a spectral table as CSV text; numeric round trip is exact.

    Values are written with 17 significant digits, which reproduces every
    float64 bit-for-bit when parsed back.
    """
    w = np.asarray(wavelengths, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[0] != w.shape[0]:
        raise ValueError("values rows must match wavelengths")
    lines = ["wavelength," + ",".join(channel_names)]
    for i in range(w.shape[0]):
        cells = [f"{w[i]:.17g}"] + [f"{x:.17g}" for x in v[i]]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def resample_to_grid(
    wavelengths: NDArray[np.float64],
    values: NDArray[np.float64],
    grid: WavelengthGrid,
) -> NDArray[np.float64]:
    """Linearly interpolate columns of ``values`` onto the grid.

    Source samples that coincide with grid points pass through exactly.
    Raises :class:`InsufficientCoverage` if the grid extends beyond the
    source range; data outside the grid is simply unused.
    """
    w = np.asarray(wavelengths, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    if w.ndim != 1 or v.shape[0] != w.shape[0]:
        raise ValueError("values rows must match wavelengths")
    if np.any(np.diff(w) <= 0):
        raise UnsortedWavelength("source wavelengths must be strictly increasing")
    if grid.start_nm < w[0] - _COVERAGE_EPS or grid.end_nm > w[-1] + _COVERAGE_EPS:
        raise InsufficientCoverage(
            f"grid [{grid.start_nm:g}, {grid.end_nm:g}] nm not covered by "
            f"source [{w[0]:g}, {w[-1]:g}] nm"
        )
    targets = grid.wavelengths
    out = np.empty((grid.count, v.shape[1]), dtype=np.float64)
    for j in range(v.shape[1]):
        out[:, j] = np.interp(targets, w, v[:, j])
    return out


def load_sensor_set(path: str | os.PathLike[str],
                    grid: WavelengthGrid = DEFAULT_GRID) -> SensorSet:
    """Read a three-channel spectral CSV and resample it onto ``grid``."""
    with open(path, "r", encoding="utf-8") as fh:
        table = parse_spectral_csv(fh.read(), expected_channels=3)
    resampled = resample_to_grid(table.wavelengths, table.values, grid)
    names = table.channel_names
    return SensorSet(grid=grid, responses=resampled,
                     channel_names=(names[0], names[1], names[2]))


def load_filter_spectrum(path: str | os.PathLike[str],
                         grid: WavelengthGrid = DEFAULT_GRID,
                         tau_min: float = DEFAULT_TAU_MIN,
                         tau_max: float = DEFAULT_TAU_MAX) -> FilterSpectrum:
    """Read a ``wavelength,transmittance`` CSV and resample it onto ``grid``."""
    with open(path, "r", encoding="utf-8") as fh:
        table = parse_spectral_csv(fh.read(), expected_channels=1)
    resampled = resample_to_grid(table.wavelengths, table.values, grid)
    return FilterSpectrum(grid=grid, transmittance=resampled[:, 0],
                          tau_min=tau_min, tau_max=tau_max)


def write_filter_csv(path: str | os.PathLike[str], filt: FilterSpectrum) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_spectral_csv(filt.grid.wavelengths, filt.transmittance,
                                     ("transmittance",)))


def gaussian_camera(grid: WavelengthGrid = DEFAULT_GRID,
                    peaks_nm: tuple[float, float, float] = (450.0, 550.0, 600.0),
                    sigma_nm: float = 30.0,
                    channel_names: tuple[str, str, str] = ("b", "g", "r")) -> SensorSet:
    """Synthetic camera with one Gaussian sensitivity lobe per channel."""
    lam = grid.wavelengths
    cols = [np.exp(-0.5 * ((lam - mu) / sigma_nm) ** 2) for mu in peaks_nm]
    return SensorSet(grid=grid, responses=np.column_stack(cols),
                     channel_names=channel_names)
