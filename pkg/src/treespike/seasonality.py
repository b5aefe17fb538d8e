"""Offline seasonality analysis: DFT magnitude spectrum for dominant periods,
undecimated B3-spline wavelet details for confirmation, and the mixing weight
between daily and weekly seasonal factors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

B3_KERNEL = np.array([1.0 / 16, 1.0 / 4, 3.0 / 8, 1.0 / 4, 1.0 / 16])


class DegenerateSeries(ValueError):
    """The series is constant; it has no spectrum to analyze."""


class SeriesTooShort(ValueError):
    """The series is too short for the requested number of wavelet scales."""


@dataclass(frozen=True)
class Spectrum:
    """Positive-frequency magnitudes normalized by the maximum magnitude."""

    frequencies: np.ndarray  # cycles per timeunit, ascending, DC excluded
    magnitudes: np.ndarray   # in [0, 1]

    def magnitude_at(self, frequency: float) -> float:
        """Magnitude of the bin nearest the given frequency."""
        idx = int(np.argmin(np.abs(self.frequencies - frequency)))
        return float(self.magnitudes[idx])


@dataclass(frozen=True)
class WaveletDecomposition:
    """Smoothed approximations c_j, details d_j = c_{j-1} - c_j, per-scale energies."""

    approximations: list[np.ndarray]  # c_1 .. c_J
    details: list[np.ndarray]         # d_1 .. d_J
    energies: np.ndarray              # sum of squared detail per scale


def dft_magnitude(series) -> Spectrum:
    """Magnitude spectrum of the mean-removed series, normalized by its peak.

    The mean is removed first so the DC term cannot mask seasonal peaks.
    """
    x = np.asarray(series, dtype=float)
    if x.size < 2:
        raise ValueError("series must have at least two samples")
    x = x - x.mean()
    if not np.any(np.abs(x) > 0):
        raise DegenerateSeries("constant series has no seasonal structure")
    mags = np.abs(np.fft.rfft(x))[1:]
    freqs = np.fft.rfftfreq(x.size)[1:]
    return Spectrum(freqs, mags / mags.max())


def dominant_periods(spectrum: Spectrum, k: int) -> list[float]:
    """Top-k local spectral maxima converted to periods, strongest first."""
    if k < 1:
        raise ValueError("k must be at least 1")
    m = spectrum.magnitudes
    peaks = []
    for i in range(m.size):
        left_ok = i == 0 or m[i] > m[i - 1]
        right_ok = i == m.size - 1 or m[i] > m[i + 1]
        if left_ok and right_ok:
            peaks.append(i)
    peaks.sort(key=lambda i: m[i], reverse=True)
    return [1.0 / spectrum.frequencies[i] for i in peaks[:k]]


def _dilated_kernel(scale: int) -> np.ndarray:
    """B3 kernel with 2^(scale-1) - 1 zeros inserted between taps."""
    step = 2 ** (scale - 1)
    kernel = np.zeros(4 * step + 1)
    kernel[::step] = B3_KERNEL
    return kernel


def atrous_decompose(series, scales: int) -> WaveletDecomposition:
    """Undecimated wavelet transform via the dilated low-pass B3 spline filter.

    c_0 is the input; c_j convolves c_{j-1} with the kernel dilated by holes,
    boundaries handled by symmetric reflection. Details are successive
    differences, so the input reconstructs as c_J plus the summed details.
    """
    x = np.asarray(series, dtype=float)
    if scales < 1:
        raise ValueError("need at least one scale")
    if x.size <= (2 ** scales) * 4:
        raise SeriesTooShort(
            f"series of length {x.size} supports fewer than {scales} scales"
        )
    approximations = []
    details = []
    c = x
    for j in range(1, scales + 1):
        kernel = _dilated_kernel(j)
        half = 2 ** (j - 1) * 2
        padded = np.pad(c, half, mode="symmetric")
        smoothed = np.convolve(padded, kernel, mode="valid")
        details.append(c - smoothed)
        approximations.append(smoothed)
        c = smoothed
    energies = np.array([float(np.sum(d * d)) for d in details])
    return WaveletDecomposition(approximations, details, energies)


def seasonal_weight(spectrum: Spectrum, period_day: float, period_week: float) -> float:
    """Convex mixing weight between the daily and weekly seasonal factors.

    Uses the normalized spectral magnitudes at the two periods:
    weight = m_day / (m_day + m_week). When the weekly magnitude sits below
    the noise floor (three times the median magnitude), the weekly factor is
    dropped entirely and the weight is 1.
    """
    for p in (period_day, period_week):
        if not 2.0 <= p <= 1.0 / spectrum.frequencies[0]:
            raise ValueError(f"period {p} outside the spectrum's support")
    m_day = spectrum.magnitude_at(1.0 / period_day)
    m_week = spectrum.magnitude_at(1.0 / period_week)
    floor = 3.0 * float(np.median(spectrum.magnitudes))
    if m_week < floor:
        return 1.0
    xi = m_day / (m_day + m_week)
    return min(max(xi, np.finfo(float).tiny), 1.0)
