"""Time-domain correlation diagnostics and the WISL figure of merit.

Direct O(N^2) lag sums, deliberately independent of the frequency-domain
operator machinery so the two formulations can cross-check each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import WaveformMatrix, WislProfile

DB_FLOOR = -300.0


def cross_correlation(waveform: WaveformMatrix, m: int, m_prime: int, lag: int) -> complex:
    """Aperiodic correlation ``r_{m m'}(k) = sum_l x_m(l) conj(x_m'(l + k))``.

    Antenna indices are 0-based. Negative lags follow the Hermitian pair
    identity ``r_{m m'}(-k) = conj(r_{m' m}(k))``.
    """
    n = waveform.num_samples
    if not (0 <= m < waveform.num_antennas and 0 <= m_prime < waveform.num_antennas):
        raise IndexError("antenna index out of range")
    if abs(lag) >= n:
        raise ValueError(f"lag {lag} outside [-{n - 1}, {n - 1}]")
    if lag < 0:
        return complex(np.conj(cross_correlation(waveform, m_prime, m, -lag)))
    x = waveform.values
    return complex(np.sum(x[: n - lag, m] * np.conj(x[lag:, m_prime])))


def correlation_matrix(waveform: WaveformMatrix) -> np.ndarray:
    """All pairwise correlations; entry ``[m, m', k + N - 1]`` is ``r_{m m'}(k)``."""
    x = waveform.values
    n, m = x.shape
    r = np.empty((m, m, 2 * n - 1), dtype=np.complex128)
    for k in range(n):
        prod = x[: n - k].T @ np.conj(x[k:])
        r[:, :, n - 1 + k] = prod
        if k:
            r[:, :, n - 1 - k] = np.conj(prod.T)
    return r


def wisl(waveform: WaveformMatrix, profile: WislProfile) -> float:
    """Weighted integrated sidelobe level.

    Squared-weighted autocorrelation sidelobes (all lags except zero) plus
    squared-weighted cross-correlations at every lag including zero.
    """
    if profile.code_length != waveform.num_samples:
        raise ValueError("profile code length does not match the waveform")
    r = correlation_matrix(waveform)
    energy = profile.weights[None, None, :] ** 2 * np.abs(r) ** 2
    total = float(energy.sum())
    m = waveform.num_antennas
    diag_zero_lag = energy[np.arange(m), np.arange(m), waveform.num_samples - 1]
    return total - float(diag_zero_lag.sum())


def isl(waveform: WaveformMatrix) -> float:
    """Integrated sidelobe level (uniform lag weights)."""
    return wisl(waveform, WislProfile.uniform(waveform.num_samples))


@dataclass(frozen=True, eq=False)
class CorrelationSet:
    """Full correlation lattice with its scalar sidelobe summaries."""

    values: np.ndarray  # (M, M, 2N-1)
    isl: float
    wisl: float


def correlation_set(waveform: WaveformMatrix, profile: WislProfile | None = None) -> CorrelationSet:
    if profile is None:
        profile = WislProfile.uniform(waveform.num_samples)
    return CorrelationSet(correlation_matrix(waveform), isl(waveform), wisl(waveform, profile))


def correlation_level_db(waveform: WaveformMatrix) -> np.ndarray:
    """Correlation magnitudes in dB relative to the zero-lag mainlobe ``N``.

    Exact zeros are clamped to ``DB_FLOOR``.
    """
    mag = np.abs(correlation_matrix(waveform)) / waveform.num_samples
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag)
    return np.maximum(db, DB_FLOOR)
