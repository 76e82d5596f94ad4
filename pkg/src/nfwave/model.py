"""Domain types shared by the waveform design pipeline.

Conventions used throughout the package:

* a waveform is an (N, M) complex matrix: N code samples per antenna,
  M antennas, column m holding antenna m's sequence;
* ``vec`` is column-major, so ``vec(X)`` stacks the antenna columns and
  ``(I_M kron Q) vec(X) == vec(Q X)``;
* lag weights run over lags ``-N+1 .. N-1`` and are stored as a flat array
  of length ``2N-1``; entry ``k + N - 1`` is the weight of lag ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299792458.0

UNIMODULAR_TOL = 1e-12


def vec(matrix: np.ndarray) -> np.ndarray:
    """Stack the columns of a matrix into one vector."""
    return np.asarray(matrix).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec` for a ``rows x cols`` matrix."""
    v = np.asarray(v)
    if v.size != rows * cols:
        raise ValueError(f"vector of length {v.size} cannot fill a {rows}x{cols} matrix")
    return v.reshape((rows, cols), order="F")


def apply_commutation(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Permute ``vec(V)`` into ``vec(V.T)`` for ``V`` of shape (rows, cols).

    Implemented as an index shuffle; the permutation matrix itself is never
    materialized. Applying the map again with swapped dimensions undoes it.
    """
    return vec(unvec(v, rows, cols).T)


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform linear array and signal parameters.

    ``spacing`` defaults to half the wavelength of the highest in-band
    frequency, ``wave_speed / (2 (carrier + bandwidth/2))``, which avoids
    grating lobes. ``range_scale`` is the physical length (meters) of one
    unit of normalized range, so that normalized grid ranges and ``spacing``
    enter steering phases in consistent units; leave it at 1.0 to treat
    normalized ranges as meters.
    """

    num_antennas: int
    code_length: int
    carrier_freq_hz: float
    bandwidth_hz: float
    wave_speed: float = SPEED_OF_LIGHT
    spacing: float | None = None
    range_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.num_antennas < 1:
            raise ValueError("num_antennas must be >= 1")
        if self.code_length < 1:
            raise ValueError("code_length must be >= 1")
        if self.carrier_freq_hz <= 0:
            raise ValueError("carrier_freq_hz must be positive")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")
        if self.wave_speed <= 0:
            raise ValueError("wave_speed must be positive")
        if self.range_scale <= 0:
            raise ValueError("range_scale must be positive")
        if self.spacing is None:
            default = self.wave_speed / (2.0 * (self.carrier_freq_hz + self.bandwidth_hz / 2.0))
            object.__setattr__(self, "spacing", default)
        elif self.spacing <= 0:
            raise ValueError("spacing must be positive")

    @property
    def sample_interval(self) -> float:
        """Nyquist sampling interval 1/B in seconds."""
        return 1.0 / self.bandwidth_hz

    @property
    def wavelength(self) -> float:
        return self.wave_speed / self.carrier_freq_hz

    @property
    def aperture(self) -> float:
        """Array aperture (num_antennas - 1) * spacing in meters."""
        return (self.num_antennas - 1) * self.spacing


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Discrete angle x range x frequency evaluation lattice.

    Angle nodes are ``phi_k = pi (k / K1 - 1/2)`` for ``k = 1..K1`` (so
    ``theta = sin(phi)`` sweeps ``(-1, 1]``), normalized range nodes are
    ``p_k = k / K2`` in ``(0, 1]`` and the frequency axis holds the N DFT
    bin indices.
    """

    num_angles: int
    num_ranges: int
    num_bins: int
    phi: np.ndarray
    theta: np.ndarray
    ranges: np.ndarray
    bins: np.ndarray

    @property
    def num_cells(self) -> int:
        return self.num_angles * self.num_ranges * self.num_bins


def build_grid(num_angles: int, num_ranges: int, num_bins: int) -> GridSpec:
    """Construct the evaluation lattice; all three sizes must be >= 1."""
    if num_angles < 1 or num_ranges < 1 or num_bins < 1:
        raise ValueError("grid sizes must all be >= 1")
    k1 = np.arange(1, num_angles + 1, dtype=float)
    phi = np.pi * (k1 / num_angles - 0.5)
    theta = np.sin(phi)
    ranges = np.arange(1, num_ranges + 1, dtype=float) / num_ranges
    bins = np.arange(num_bins)
    for arr in (phi, theta, ranges, bins):
        arr.setflags(write=False)
    return GridSpec(num_angles, num_ranges, num_bins, phi, theta, ranges, bins)


@dataclass(frozen=True, eq=False)
class WaveformMatrix:
    """(N, M) matrix of unit-modulus code samples.

    Entries are validated to lie on the complex unit circle within
    ``UNIMODULAR_TOL`` and the storage is frozen after construction.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.complex128)
        if vals.ndim != 2 or vals.size == 0:
            raise ValueError("waveform must be a non-empty 2-D matrix")
        deviation = float(np.abs(np.abs(vals) - 1.0).max())
        if deviation > UNIMODULAR_TOL:
            raise ValueError(f"waveform entries must be unimodular (worst deviation {deviation:.3e})")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def num_samples(self) -> int:
        return self.values.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.values.shape[1]

    def vec(self) -> np.ndarray:
        return vec(self.values)

    def phases(self) -> np.ndarray:
        """Entry phases wrapped to [0, 2*pi)."""
        ph = np.mod(np.angle(self.values), 2.0 * np.pi)
        ph[ph >= 2.0 * np.pi] = 0.0
        return ph

    @classmethod
    def from_phases(cls, phases: np.ndarray) -> "WaveformMatrix":
        return cls(np.exp(1j * np.asarray(phases, dtype=float)))

    @classmethod
    def from_vec(cls, v: np.ndarray, num_samples: int, num_antennas: int) -> "WaveformMatrix":
        return cls(unvec(v, num_samples, num_antennas))


@dataclass(frozen=True, eq=False)
class DesiredBeampattern:
    """Nonnegative target power over the (angle, range, bin) lattice."""

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 3:
            raise ValueError("desired beampattern must be a 3-D (angle, range, bin) array")
        if vals.size and vals.min() < 0:
            raise ValueError("desired beampattern must be nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def delta(
        cls,
        grid: GridSpec,
        angle_index: int,
        range_index: int,
        peak: float = 1.0,
    ) -> "DesiredBeampattern":
        """Zero everywhere except ``peak`` at one (angle, range) cell for every bin.

        Indices are 0-based.
        """
        if not 0 <= angle_index < grid.num_angles:
            raise ValueError(f"angle_index {angle_index} outside [0, {grid.num_angles})")
        if not 0 <= range_index < grid.num_ranges:
            raise ValueError(f"range_index {range_index} outside [0, {grid.num_ranges})")
        if peak < 0:
            raise ValueError("peak must be nonnegative")
        vals = np.zeros((grid.num_angles, grid.num_ranges, grid.num_bins))
        vals[angle_index, range_index, :] = peak
        return cls(vals)


@dataclass(frozen=True, eq=False)
class WislProfile:
    """Lag weights plus the derived weight matrix and half-bin harmonics.

    ``weights[k + N - 1]`` is the weight of lag ``k``; ``weight_matrix[i, j]``
    equals the weight of lag ``j - i`` (a Toeplitz matrix); ``harmonics[k - 1]``
    is the length-N unit-modulus vector sampling frequency ``(k - 1) / (2N)``
    for ``k = 1..2N``.
    """

    code_length: int
    weights: np.ndarray
    weight_matrix: np.ndarray
    harmonics: np.ndarray

    @classmethod
    def uniform(cls, code_length: int) -> "WislProfile":
        """All lag weights equal to one (plain ISL)."""
        return build_wisl_profile(np.ones(2 * code_length - 1), code_length)

    def weight(self, lag: int) -> float:
        n = self.code_length
        if not -n < lag < n:
            raise ValueError(f"lag {lag} outside [-{n - 1}, {n - 1}]")
        return float(self.weights[lag + n - 1])


def build_wisl_profile(weights: np.ndarray, code_length: int) -> WislProfile:
    """Assemble a :class:`WislProfile` from ``2N - 1`` lag weights."""
    n = code_length
    if n < 1:
        raise ValueError("code_length must be >= 1")
    w = np.array(weights, dtype=float).ravel()
    if w.size != 2 * n - 1:
        raise ValueError(f"need {2 * n - 1} lag weights, got {w.size}")
    idx = np.arange(n)
    weight_matrix = w[(idx[None, :] - idx[:, None]) + n - 1]
    harmonics = np.exp(1j * np.pi * np.outer(np.arange(2 * n), np.arange(n)) / n)
    for arr in (w, weight_matrix, harmonics):
        arr.setflags(write=False)
    return WislProfile(n, w, weight_matrix, harmonics)
