"""Signal conditioning for sensed respiration traces.

Forward moving average, least-squares polynomial detrending and the
magnitude spectrum used by the feature extractors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_WINDOW = 50
DEFAULT_ORDER = 5
DEFAULT_SEARCH = (1, 100)


class ParameterError(ValueError):
    """Raised when a processing parameter is outside its valid range."""


@dataclass(frozen=True)
class Spectrum:
    """One-sided DFT magnitudes of a real trace.

    ``magnitudes[k]`` holds ``|Z[k]|`` for ``k = 0 .. L // 2`` where ``L`` is
    the length of the transformed trace.
    """

    magnitudes: np.ndarray
    sample_rate: float
    length: int

    @property
    def bin_to_bpm(self) -> float:
        return 60.0 * self.sample_rate / self.length

    def __len__(self) -> int:
        return len(self.magnitudes)


def _as_trace(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ParameterError("trace must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("trace contains non-finite values")
    return arr


def moving_average(x, k: int = DEFAULT_WINDOW) -> np.ndarray:
    """Forward ``k``-point moving average with a shrinking tail window.

    ``y[n]`` is the mean of ``x[n : n + k]``. Within the last ``k - 1``
    samples fewer than ``k`` points remain and the mean is taken over what is
    left, so the output has the same length as the input.
    """
    x = _as_trace(x)
    k = int(k)
    if k < 1 or k > x.size:
        raise ParameterError(f"window k={k} must satisfy 1 <= k <= {x.size}")
    if k == 1:
        return x.copy()
    csum = np.concatenate(([0.0], np.cumsum(x)))
    start = np.arange(x.size)
    stop = np.minimum(start + k, x.size)
    return (csum[stop] - csum[start]) / (stop - start)


def _fit_axis(n: int) -> np.ndarray:
    if n == 1:
        return np.zeros(1)
    return np.arange(n) / (n - 1)


def polyfit_detrend(y, p: int = DEFAULT_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Subtract the least-squares polynomial of order ``p``.

    The polynomial is fitted against the normalised sample index
    ``n / (L - 1)``; at ``L = 6000`` and ``p = 5`` the raw index would make
    the Vandermonde matrix hopelessly ill-conditioned.

    Returns
    -------
    detrended : ndarray
        ``y - w_p``.
    coefficients : ndarray
        ``p + 1`` coefficients, highest power first, in the normalised basis.
    """
    y = _as_trace(y)
    p = int(p)
    if p < 0:
        raise ParameterError("polynomial order must be >= 0")
    if y.size <= p:
        raise ParameterError(
            f"underdetermined fit: {y.size} samples for order {p}"
        )
    u = _fit_axis(y.size)
    vander = np.vander(u, p + 1)
    coef, *_ = np.linalg.lstsq(vander, y, rcond=None)
    return y - vander @ coef, coef


def dft_magnitudes(z, sample_rate: float = 100.0) -> Spectrum:
    """Magnitudes ``|sum_n z[n] exp(-2j pi k n / L)|`` for ``k = 0 .. L//2``."""
    z = _as_trace(z)
    return Spectrum(np.abs(np.fft.rfft(z)), float(sample_rate), z.size)


def peak_bin(spectrum: Spectrum, search_range=DEFAULT_SEARCH) -> tuple[int, float]:
    """Bin with the largest magnitude inside ``search_range`` (inclusive).

    The range is clipped to the available bins. Ties resolve to the lowest
    bin index.
    """
    lo, hi = int(search_range[0]), int(search_range[1])
    hi = min(hi, len(spectrum) - 1)
    if lo < 0 or lo > hi:
        raise ParameterError(f"empty search range {search_range!r}")
    window = spectrum.magnitudes[lo : hi + 1]
    k = int(np.argmax(window))
    return lo + k, float(window[k])
