"""Synthetic dual-pol scene generation with known per-class covariances.

Speckle model: per pixel, k = L z with z two independent standard circular
complex Gaussians and L the Cholesky factor of the class's lexicographic
covariance (single-look, no spatial correlation).

Randomness comes from a counter-based stream so output is bit-identical
regardless of traversal or worker count: each pixel's four standard
normals derive from splitmix64 applied to a key mixed from
(seed, row, column), pushed through Box-Muller. No library RNG is used.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .covariance import _pauli_congruence
from .decomposition import h_alpha
from .types import (
    AcquisitionMeta,
    ClassMap,
    ClassSpec,
    Herm2,
    SceneSpec,
    SlcImage,
    ValidationError,
)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_ROW_SALT = np.uint64(0xD1B54A32D192ED03)
_COL_SALT = np.uint64(0x8CB92BA72F3D8DD7)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = (x + _GOLDEN).astype(np.uint64)
    x = (x ^ (x >> np.uint64(30))) * _MIX1
    x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


def _uniform01(bits: np.ndarray) -> np.ndarray:
    # 53-bit mantissa, offset by half an ulp so the result never hits 0 or 1
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * (2.0 ** -53)


def _pixel_keys(seed: int, height: int, width: int) -> np.ndarray:
    rows = np.arange(height, dtype=np.uint64)[:, None]
    cols = np.arange(width, dtype=np.uint64)[None, :]
    row_key = _splitmix64(np.uint64(seed) ^ (rows * _ROW_SALT))
    return _splitmix64(row_key ^ (cols * _COL_SALT))


def standard_normal_fields(seed: int, height: int, width: int, count: int = 4) -> list[np.ndarray]:
    """count (height, width) standard-normal rasters keyed by (seed, row, col)."""
    if count % 2:
        raise ValidationError("normals are generated in Box-Muller pairs")
    keys = _pixel_keys(seed, height, width)
    out: list[np.ndarray] = []
    for pair in range(count // 2):
        u1 = _uniform01(_splitmix64(keys + np.uint64(2 * pair + 1)))
        u2 = _uniform01(_splitmix64(keys + np.uint64(2 * pair + 2)))
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * np.pi) * u2
        out.append(r * np.cos(theta))
        out.append(r * np.sin(theta))
    return out


def _cholesky(spec: ClassSpec) -> tuple[float, complex, float]:
    rho = spec.rho
    l11 = float(np.sqrt(spec.sigma_hh))
    l21 = complex(np.conj(rho) * np.sqrt(spec.sigma_vv))
    radicand = spec.sigma_vv * (1.0 - spec.rho_mag**2)
    if radicand < 0.0:
        raise ValidationError(f"class {spec.name!r} implies a non-PSD covariance")
    return l11, l21, float(np.sqrt(radicand))


def layout_labels(spec: SceneSpec) -> np.ndarray:
    """Class-id raster for the scene layout (deterministic in the seed)."""
    h, w, n = spec.height, spec.width, len(spec.classes)
    if spec.layout == "stripes":
        rows = np.arange(h)
        labels = (rows * n) // h
        return np.broadcast_to(labels[:, None], (h, w)).astype(np.uint8)
    if spec.layout == "rectangles":
        g = int(np.ceil(np.sqrt(n))) + 1
        gy = (np.arange(h) * g) // h
        gx = (np.arange(w) * g) // w
        cells = gy[:, None] * g + gx[None, :]
        return (cells % n).astype(np.uint8)
    # voronoi: seed points from the counter stream, nearest-point labels
    k = spec.voronoi_seeds
    idx = np.arange(k, dtype=np.uint64)
    py = _uniform01(_splitmix64(np.uint64(spec.seed) ^ _splitmix64(idx * np.uint64(2) + np.uint64(1)))) * h
    px = _uniform01(_splitmix64(np.uint64(spec.seed) ^ _splitmix64(idx * np.uint64(2) + np.uint64(2)))) * w
    rows = np.arange(h, dtype=np.float64)[:, None, None]
    cols = np.arange(w, dtype=np.float64)[None, :, None]
    d2 = (rows - py[None, None, :]) ** 2 + (cols - px[None, None, :]) ** 2
    nearest = np.argmin(d2, axis=2)
    return (nearest % n).astype(np.uint8)


def generate_scene(spec: SceneSpec) -> tuple[SlcImage, ClassMap]:
    """Simulate a dual-pol SLC plus its ground-truth class map."""
    for cls in spec.classes:
        _cholesky(cls)  # raises on a non-PSD spec

    labels = layout_labels(spec)
    n1, n2, n3, n4 = standard_normal_fields(spec.seed, spec.height, spec.width, 4)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    z1 = (n1 + 1j * n2) * inv_sqrt2
    z2 = (n3 + 1j * n4) * inv_sqrt2

    hh = np.zeros((spec.height, spec.width), dtype=np.complex128)
    vv = np.zeros_like(hh)
    for idx, cls in enumerate(spec.classes):
        sel = labels == idx
        l11, l21, l22 = _cholesky(cls)
        hh[sel] = l11 * z1[sel]
        vv[sel] = l21 * z1[sel] + l22 * z2[sel]

    meta = AcquisitionMeta(
        platform_kind="synthetic",
        scene_id=f"synthetic-{spec.seed}",
    )
    slc = SlcImage(hh=hh.astype(np.complex64), vv=vv.astype(np.complex64), meta=meta)
    truth = ClassMap(labels=labels, class_names=spec.class_names)
    return slc, truth


def default_presets() -> list[ClassSpec]:
    """Five land-cover class presets.

    Chosen so the Pauli-basis H/alpha signatures rank as expected:
    built-up has high alpha (double bounce via the pi co-pol phase),
    vegetation high entropy (weak co-pol correlation), water and roads
    low entropy and low alpha, separated from each other by power.
    """
    return [
        ClassSpec(name="water", sigma_hh=0.02, sigma_vv=0.02, rho_mag=0.98, rho_phase=0.0),
        ClassSpec(name="roads", sigma_hh=0.01, sigma_vv=0.01, rho_mag=0.95, rho_phase=0.0),
        ClassSpec(name="bare_soil", sigma_hh=0.10, sigma_vv=0.08, rho_mag=0.90, rho_phase=0.0),
        ClassSpec(name="vegetation", sigma_hh=0.15, sigma_vv=0.15, rho_mag=0.30, rho_phase=0.0),
        ClassSpec(name="built_up", sigma_hh=0.50, sigma_vv=0.40, rho_mag=0.80, rho_phase=np.pi),
    ]


def analytic_truth(spec: ClassSpec) -> dict:
    """Exact covariance matrices and H/alpha for one class spec."""
    c12 = spec.rho * np.sqrt(spec.sigma_hh * spec.sigma_vv)
    c2 = np.array(
        [[spec.sigma_hh, c12], [np.conj(c12), spec.sigma_vv]], dtype=complex
    )
    t11, t22, t12 = _pauli_congruence(
        np.float64(spec.sigma_hh), np.float64(spec.sigma_vv), np.complex128(c12)
    )
    t2 = np.array([[t11, t12], [np.conj(t12), t22]], dtype=complex)
    H, alpha = h_alpha(Herm2(c11=float(max(t11, 0.0)), c22=float(max(t22, 0.0)), c12=complex(t12)))
    return {"name": spec.name, "C2": c2, "T2": t2, "H": H, "alpha": alpha}


def scene_spec_from_json(obj: "dict | str | Path") -> SceneSpec:
    """Parse a SceneSpec from a JSON object, file path or JSON string."""
    if isinstance(obj, (str, Path)):
        p = Path(obj)
        text = p.read_text(encoding="utf-8") if p.exists() else str(obj)
        obj = json.loads(text)
    if not isinstance(obj, dict):
        raise ValidationError("scene spec must be a JSON object")
    classes_field = obj.get("classes", "presets")
    if classes_field == "presets":
        classes = default_presets()
    else:
        classes = [
            ClassSpec(
                name=c["name"],
                sigma_hh=float(c["sigma_hh"]),
                sigma_vv=float(c["sigma_vv"]),
                rho_mag=float(c["rho_mag"]),
                rho_phase=float(c.get("rho_phase", 0.0)),
            )
            for c in classes_field
        ]
    return SceneSpec(
        height=int(obj["height"]),
        width=int(obj["width"]),
        classes=classes,
        layout=obj.get("layout", "stripes"),
        seed=int(obj.get("seed", 0)),
        voronoi_seeds=int(obj.get("voronoi_seeds", 16)),
    )


def truth_json(classes: list[ClassSpec]) -> dict:
    """JSON-serializable analytic truth for a class list."""
    entries = []
    for cls in classes:
        t = analytic_truth(cls)
        entries.append(
            {
                "name": t["name"],
                "C2": [[_c(v) for v in row] for row in t["C2"]],
                "T2": [[_c(v) for v in row] for row in t["T2"]],
                "H": t["H"],
                "alpha": t["alpha"],
            }
        )
    return {"classes": entries}


def _c(v: complex) -> list[float]:
    return [float(np.real(v)), float(np.imag(v))]


__all__ = [
    "standard_normal_fields",
    "layout_labels",
    "generate_scene",
    "default_presets",
    "analytic_truth",
    "scene_spec_from_json",
    "truth_json",
]
