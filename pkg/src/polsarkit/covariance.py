"""Covariance estimation and intensity derivation for dual-pol SLC data.

The per-pixel 2x2 covariance is the boxcar mean of the scattering-vector
outer product k k^H; windows are clamped (shrunk) at raster borders so the
output keeps the input dimensions.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .types import (
    BASES,
    CovarianceField,
    SlcImage,
    ValidationError,
    check_odd_window,
)

DB_CLAMP_DEFAULT = (-35.0, 5.0)
DB_FLOOR_POWER = 1e-10

_SQRT2_INV = 1.0 / np.sqrt(2.0)


def _boxcar_mean(arr: np.ndarray, window: int) -> np.ndarray:
    """Mean over a window x window box, clamped at the borders.

    Uses an integral image, so the cost is independent of window size and
    the result is bit-reproducible regardless of worker count.
    """
    h, w = arr.shape
    r = window // 2
    s = np.zeros((h + 1, w + 1), dtype=np.complex128 if np.iscomplexobj(arr) else np.float64)
    np.cumsum(arr, axis=0, out=s[1:, 1:])
    np.cumsum(s[1:, 1:], axis=1, out=s[1:, 1:])

    rows = np.arange(h)
    cols = np.arange(w)
    y0 = np.clip(rows - r, 0, h)
    y1 = np.clip(rows + r + 1, 0, h)
    x0 = np.clip(cols - r, 0, w)
    x1 = np.clip(cols + r + 1, 0, w)

    total = (
        s[y1[:, None], x1[None, :]]
        - s[y0[:, None], x1[None, :]]
        - s[y1[:, None], x0[None, :]]
        + s[y0[:, None], x0[None, :]]
    )
    counts = (y1 - y0)[:, None] * (x1 - x0)[None, :]
    return total / counts


def scattering_vector(slc: SlcImage, basis: str) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel scattering vector components in the requested basis."""
    if basis == "lexicographic":
        return slc.hh.astype(np.complex128), slc.vv.astype(np.complex128)
    if basis == "pauli":
        hh = slc.hh.astype(np.complex128)
        vv = slc.vv.astype(np.complex128)
        return (hh + vv) * _SQRT2_INV, (hh - vv) * _SQRT2_INV
    raise ValidationError(f"basis must be one of {BASES}, got {basis!r}")


def compute_covariance(slc: SlcImage, window: int = 7, basis: str = "pauli") -> CovarianceField:
    """Boxcar estimate of the per-pixel 2x2 covariance of the scattering vector."""
    check_odd_window(window, slc.height, slc.width)
    k1, k2 = scattering_vector(slc, basis)
    c11 = _boxcar_mean((k1 * np.conj(k1)).real, window)
    c22 = _boxcar_mean((k2 * np.conj(k2)).real, window)
    c12 = _boxcar_mean(k1 * np.conj(k2), window)
    # Averaged outer products are PSD; clip the tiny negative rounding drift.
    np.maximum(c11, 0.0, out=c11)
    np.maximum(c22, 0.0, out=c22)
    return CovarianceField(
        c11=c11, c22=c22, c12=c12, looks=window * window, basis=basis, meta=slc.meta
    )


def intensity_channels(
    cov: CovarianceField, db_clamp: tuple[float, float] = DB_CLAMP_DEFAULT
) -> dict[str, np.ndarray]:
    """Linear-power diagonals plus their dB-normalized [0, 1] variants.

    dB variant: clamp(10*log10(max(p, 1e-10)), lo, hi) rescaled affinely
    onto [0, 1].
    """
    lo, hi = db_clamp
    if not lo < hi:
        raise ValidationError(f"db_clamp range must satisfy lo < hi, got {db_clamp}")

    def to_db(p: np.ndarray) -> np.ndarray:
        db = 10.0 * np.log10(np.maximum(p, DB_FLOOR_POWER))
        np.clip(db, lo, hi, out=db)
        return (db - lo) / (hi - lo)

    return {
        "c11": cov.c11.copy(),
        "c22": cov.c22.copy(),
        "c11_db": to_db(cov.c11),
        "c22_db": to_db(cov.c22),
    }


def _pauli_congruence(
    c11: np.ndarray, c22: np.ndarray, c12: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Map cells by U C U^H with U = (1/sqrt(2)) [[1, 1], [1, -1]].

    U is real, symmetric and involutory, so the same congruence converts in
    both directions between the lexicographic and Pauli bases.
    """
    re12 = c12.real
    t11 = 0.5 * (c11 + c22) + re12
    t22 = 0.5 * (c11 + c22) - re12
    t12 = 0.5 * (c11 - c22) - 1j * c12.imag
    return t11, t22, t12


def change_basis(cov: CovarianceField, target: str) -> CovarianceField:
    """Convert a covariance field between lexicographic and Pauli bases."""
    if target not in BASES:
        raise ValidationError(f"target basis must be one of {BASES}, got {target!r}")
    if target == cov.basis:
        return CovarianceField(
            c11=cov.c11.copy(), c22=cov.c22.copy(), c12=cov.c12.copy(),
            looks=cov.looks, basis=cov.basis, meta=cov.meta,
        )
    t11, t22, t12 = _pauli_congruence(cov.c11, cov.c22, cov.c12)
    np.maximum(t11, 0.0, out=t11)
    np.maximum(t22, 0.0, out=t22)
    return CovarianceField(
        c11=t11, c22=t22, c12=t12, looks=cov.looks, basis=target, meta=cov.meta
    )


class CovarianceEstimator(BaseEstimator, TransformerMixin):
    """Boxcar covariance estimator with a scikit-learn transformer surface.

    Parameters
    ----------
    window : int
        Odd boxcar side length; the look count is window**2.
    basis : str
        "pauli" or "lexicographic" scattering-vector basis.
    """

    def __init__(self, window: int = 7, basis: str = "pauli"):
        self.window = window
        self.basis = basis

    def fit(self, X: SlcImage, y=None) -> "CovarianceEstimator":
        check_odd_window(self.window, X.height, X.width)
        return self

    def transform(self, X: SlcImage) -> CovarianceField:
        return compute_covariance(X, window=self.window, basis=self.basis)


__all__ = [
    "DB_CLAMP_DEFAULT",
    "scattering_vector",
    "compute_covariance",
    "intensity_channels",
    "change_basis",
    "CovarianceEstimator",
]
