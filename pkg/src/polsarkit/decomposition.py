"""Closed-form 2x2 eigendecomposition, dual-pol H/alpha, and zone segmentation.

Eigenvalues come from the trace/determinant quadratic; eigenvector first
components are taken by magnitude so results are invariant to eigenvector
phase. Alpha follows the scattering-mechanism convention on the Pauli
basis: 0 deg = surface, 90 deg = double bounce.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .pfr import SPAN_UNDERFLOW
from .types import (
    ClassMap,
    CovarianceField,
    EigenPair2,
    HAlphaField,
    Herm2,
    IGNORE_LABEL,
    ValidationError,
    ZoneMap,
)

# Relative eigenvalue gap below which a matrix is treated as isotropic
# (degenerate spectrum convention: e1_abs_first = 1, e2_abs_first = 0).
ISO_GAP = 1e-12


def _eigen_arrays(
    c11: np.ndarray, c22: np.ndarray, c12: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized eigen2; returns (lambda1, lambda2, e1_abs_first, e2_abs_first)."""
    tr = c11 + c22
    det = c11 * c22 - np.abs(c12) ** 2
    disc = np.sqrt(np.maximum(tr * tr - 4.0 * det, 0.0))
    lam1 = 0.5 * (tr + disc)
    lam2 = 0.5 * (tr - disc)
    np.maximum(lam2, 0.0, out=lam2)

    a = np.abs(c12)
    # Two equivalent eigenvector forms exist for each eigenvalue:
    # [c12, lambda - c11] and [lambda - c22, conj(c12)]. Near-diagonal
    # matrices cancel one of the residuals to rounding noise, so pick per
    # pixel the form whose residual is bounded away from zero: lambda1
    # stays >= both diagonals and lambda2 <= both, which makes
    # (lambda1 - c22, lambda2 - c11) safe when c11 >= c22 and the mirrored
    # pair safe otherwise.
    first_dominant = c11 >= c22
    asq = a * a
    with np.errstate(invalid="ignore", divide="ignore"):
        e1 = np.where(
            first_dominant,
            np.abs(lam1 - c22) / np.sqrt((lam1 - c22) ** 2 + asq),
            a / np.sqrt(asq + (lam1 - c11) ** 2),
        )
        e2 = np.where(
            first_dominant,
            a / np.sqrt(asq + (lam2 - c11) ** 2),
            np.abs(lam2 - c22) / np.sqrt((lam2 - c22) ** 2 + asq),
        )

    # A vanishing denominator only happens for a degenerate spectrum, which
    # the isotropic convention overrides anyway.
    iso = disc <= ISO_GAP * tr
    e1 = np.where(iso | ~np.isfinite(e1), 1.0, e1)
    e2 = np.where(iso | ~np.isfinite(e2), 0.0, e2)
    return lam1, lam2, np.clip(e1, 0.0, 1.0), np.clip(e2, 0.0, 1.0)


def eigen2(m: Herm2) -> EigenPair2:
    """Closed-form eigendecomposition of a single 2x2 Hermitian matrix."""
    c11 = np.asarray([[m.c11]], dtype=np.float64)
    c22 = np.asarray([[m.c22]], dtype=np.float64)
    c12 = np.asarray([[m.c12]], dtype=np.complex128)
    lam1, lam2, e1, e2 = _eigen_arrays(c11, c22, c12)
    return EigenPair2(
        lambda1=float(lam1[0, 0]),
        lambda2=float(lam2[0, 0]),
        e1_abs_first=float(e1[0, 0]),
        e2_abs_first=float(e2[0, 0]),
    )


def _h_alpha_arrays(
    lam1: np.ndarray, lam2: np.ndarray, e1: np.ndarray, e2: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Entropy and mean alpha from eigen arrays; returns (H, alpha_deg, valid)."""
    span = lam1 + lam2
    valid = span > SPAN_UNDERFLOW
    safe = np.where(valid, span, 1.0)
    p1 = lam1 / safe
    p2 = lam2 / safe

    ent = np.zeros_like(span)
    for p in (p1, p2):
        mask = p > 0.0
        ent[mask] -= p[mask] * np.log2(p[mask])
    np.clip(ent, 0.0, 1.0, out=ent)

    alpha1 = np.degrees(np.arccos(e1))
    alpha2 = np.degrees(np.arccos(e2))
    alpha = p1 * alpha1 + p2 * alpha2
    np.clip(alpha, 0.0, 90.0, out=alpha)

    ent[~valid] = 0.0
    alpha[~valid] = 0.0
    return ent, alpha, valid


def h_alpha(m: Herm2) -> tuple[float, float]:
    """Entropy H in [0, 1] and mean alpha in degrees for one matrix.

    Returns (0, 0) when the total power underflows.
    """
    e = eigen2(m)
    lam1 = np.asarray([[e.lambda1]])
    lam2 = np.asarray([[e.lambda2]])
    e1 = np.asarray([[e.e1_abs_first]])
    e2 = np.asarray([[e.e2_abs_first]])
    ent, alpha, _ = _h_alpha_arrays(lam1, lam2, e1, e2)
    return float(ent[0, 0]), float(alpha[0, 0])


def h_alpha_field(cov: CovarianceField) -> HAlphaField:
    """Per-pixel H/alpha over a Pauli-basis covariance field."""
    if cov.basis != "pauli":
        raise ValidationError(
            "h_alpha expects a pauli-basis field so alpha maps to scattering "
            "mechanisms; convert with change_basis(cov, 'pauli') first"
        )
    lam1, lam2, e1, e2 = _eigen_arrays(cov.c11, cov.c22, cov.c12)
    ent, alpha, valid = _h_alpha_arrays(lam1, lam2, e1, e2)
    return HAlphaField(H=ent, alpha=alpha, lambda1=lam1, lambda2=lam2, valid=valid)


# Zone threshold table on the (H, alpha) plane. Bands close on the left
# (boundary values fall to the lower-numbered alpha band / lower H band).
# H <= 0.5: alpha 42.5 / 47.5; 0.5 < H <= 0.9: alpha 40 / 50;
# H > 0.9: alpha 55 splits Z2 / Z1 (the low-alpha cell keeps label 2; the
# infeasible zone 3 is never produced).
_H_LOW = 0.5
_H_MID = 0.9


def zone_classify(H, alpha):
    """Zone ids for (H, alpha) points; scalars or same-shape arrays."""
    h = np.asarray(H, dtype=np.float64)
    a = np.asarray(alpha, dtype=np.float64)
    if np.any((h < 0.0) | (h > 1.0)) or np.any((a < 0.0) | (a > 90.0)):
        raise ValidationError("H must lie in [0, 1] and alpha in [0, 90] degrees")

    zones = np.empty(np.broadcast(h, a).shape, dtype=np.uint8)
    low = h <= _H_LOW
    mid = (h > _H_LOW) & (h <= _H_MID)
    high = h > _H_MID

    zones[low] = np.where(a[low] <= 42.5, 9, np.where(a[low] <= 47.5, 8, 7))
    zones[mid] = np.where(a[mid] <= 40.0, 6, np.where(a[mid] <= 50.0, 5, 4))
    zones[high] = np.where(a[high] <= 55.0, 2, 1)

    if zones.ndim == 0:
        return int(zones)
    return zones


def zone_map(field: HAlphaField) -> ZoneMap:
    """Zone segmentation of an H/alpha field; invalid pixels become 255."""
    zones = zone_classify(field.H, field.alpha)
    zones = np.where(field.valid, zones, IGNORE_LABEL).astype(np.uint8)
    return ZoneMap(labels=zones)


def export_halpha_density(
    field: HAlphaField,
    out: "str | Path",
    mask: ClassMap | None = None,
    bins_h: int = 20,
    bins_alpha: int = 18,
) -> list[Path]:
    """Write per-class (or overall) H/alpha plane histograms as CSV.

    One file per class label present in the mask; rows are
    (h_bin_center, alpha_bin_center, count) with zero bins omitted.
    """
    if bins_h < 2 or bins_alpha < 2:
        raise ValidationError("need at least 2 bins per axis")
    out = Path(out)

    if mask is None:
        groups = {None: field.valid}
    else:
        if mask.labels.shape != field.H.shape:
            raise ValidationError("mask dimensions must match the field")
        groups = {}
        for label in np.unique(mask.labels[mask.labels != IGNORE_LABEL]):
            groups[int(label)] = field.valid & (mask.labels == label)

    h_edges = np.linspace(0.0, 1.0, bins_h + 1)
    a_edges = np.linspace(0.0, 90.0, bins_alpha + 1)
    h_centers = 0.5 * (h_edges[:-1] + h_edges[1:])
    a_centers = 0.5 * (a_edges[:-1] + a_edges[1:])

    written: list[Path] = []
    for label, sel in sorted(groups.items(), key=lambda kv: (kv[0] is not None, kv[0])):
        if label is None:
            path = out
        else:
            name = (
                mask.class_names[label]
                if mask is not None and label < len(mask.class_names)
                else f"class{label}"
            )
            path = out.with_name(f"{out.stem}_{name}{out.suffix or '.csv'}")
        hist, _, _ = np.histogram2d(
            field.H[sel], field.alpha[sel], bins=[h_edges, a_edges]
        )
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["h", "alpha", "count"])
            for i in range(bins_h):
                for j in range(bins_alpha):
                    n = int(hist[i, j])
                    if n:
                        writer.writerow([f"{h_centers[i]:.6g}", f"{a_centers[j]:.6g}", n])
        written.append(path)
    return written


class HAlphaDecomposer(BaseEstimator, TransformerMixin):
    """Transformer mapping a Pauli covariance field to its H/alpha field."""

    def fit(self, X: CovarianceField, y=None) -> "HAlphaDecomposer":
        return self

    def transform(self, X: CovarianceField) -> HAlphaField:
        return h_alpha_field(X)


class ZoneClassifier(BaseEstimator):
    """Stateless zone segmenter over H/alpha fields (predict-only)."""

    def fit(self, X: HAlphaField, y=None) -> "ZoneClassifier":
        return self

    def predict(self, X: HAlphaField) -> ZoneMap:
        return zone_map(X)


# Test-support variant: full eigenvectors, used to check eigenprojector
# reconstruction; production code only ever needs the first-component
# magnitudes above.
def eigen2_full(m: Herm2) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and eigenvector columns of a Herm2."""
    w, v = np.linalg.eigh(m.as_array())
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


__all__ = [
    "ISO_GAP",
    "eigen2",
    "eigen2_full",
    "h_alpha",
    "h_alpha_field",
    "zone_classify",
    "zone_map",
    "export_halpha_density",
    "HAlphaDecomposer",
    "ZoneClassifier",
]
