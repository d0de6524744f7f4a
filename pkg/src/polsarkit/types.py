"""Domain containers for dual-pol SAR rasters.

Complex rasters are stored channel-per-array (numpy), 2x2 Hermitian
fields as three aligned arrays (c11, c22 real; c12 complex) so that
per-pixel matrix arithmetic vectorizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

IGNORE_LABEL = 255

PLATFORM_KINDS = ("spaceborne", "airborne", "synthetic")
BASES = ("lexicographic", "pauli")

# Feasible H/alpha-plane zones for dual-pol data (zone 3 is the infeasible
# high-entropy / low-alpha cell and is never emitted).
FEASIBLE_ZONES = (1, 2, 4, 5, 6, 7, 8, 9)


class ValidationError(ValueError):
    """Invalid argument or inconsistent container state."""


class FormatError(ValidationError):
    """Malformed raster file or sidecar."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def _require_finite(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)) or (
        np.iscomplexobj(arr) and not np.all(np.isfinite(arr.imag))
    ):
        raise ValidationError(f"{name} contains non-finite values")


@dataclass(frozen=True)
class AcquisitionMeta:
    """Acquisition geometry and provenance for one scene."""

    platform_kind: str = "synthetic"
    incidence_near: float = 0.0
    incidence_far: float = 0.0
    range_spacing: float = 1.0
    azimuth_spacing: float = 1.0
    scene_id: str = ""

    def __post_init__(self) -> None:
        _require(
            self.platform_kind in PLATFORM_KINDS,
            f"platform_kind must be one of {PLATFORM_KINDS}, got {self.platform_kind!r}",
        )
        _require(
            0.0 <= self.incidence_near <= self.incidence_far <= 90.0,
            "incidence angles must satisfy 0 <= near <= far <= 90",
        )
        _require(
            self.range_spacing > 0 and self.azimuth_spacing > 0,
            "pixel spacings must be positive",
        )

    def to_dict(self) -> dict:
        return {
            "platform_kind": self.platform_kind,
            "incidence_near": self.incidence_near,
            "incidence_far": self.incidence_far,
            "range_spacing": self.range_spacing,
            "azimuth_spacing": self.azimuth_spacing,
            "scene_id": self.scene_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AcquisitionMeta":
        return cls(
            platform_kind=d.get("platform_kind", "synthetic"),
            incidence_near=float(d.get("incidence_near", 0.0)),
            incidence_far=float(d.get("incidence_far", 0.0)),
            range_spacing=float(d.get("range_spacing", 1.0)),
            azimuth_spacing=float(d.get("azimuth_spacing", 1.0)),
            scene_id=d.get("scene_id", ""),
        )


@dataclass
class SlcImage:
    """Single-look complex dual-pol image (HH and VV channels)."""

    hh: np.ndarray
    vv: np.ndarray
    meta: AcquisitionMeta = field(default_factory=AcquisitionMeta)

    def __post_init__(self) -> None:
        self.hh = np.asarray(self.hh)
        self.vv = np.asarray(self.vv)
        _require(self.hh.ndim == 2, "hh must be 2-D")
        _require(self.hh.shape == self.vv.shape, "hh and vv must share dimensions")
        _require(min(self.hh.shape) >= 1, "image dimensions must be >= 1")
        _require(
            np.iscomplexobj(self.hh) and np.iscomplexobj(self.vv),
            "hh and vv must be complex rasters",
        )
        _require_finite(self.hh, "hh")
        _require_finite(self.vv, "vv")

    @property
    def height(self) -> int:
        return self.hh.shape[0]

    @property
    def width(self) -> int:
        return self.hh.shape[1]


@dataclass(frozen=True)
class Herm2:
    """A single 2x2 Hermitian matrix [[c11, c12], [conj(c12), c22]]."""

    c11: float
    c22: float
    c12: complex

    def __post_init__(self) -> None:
        vals = (self.c11, self.c22, self.c12.real, self.c12.imag)
        _require(all(np.isfinite(v) for v in vals), "Herm2 entries must be finite")
        _require(self.c11 >= 0 and self.c22 >= 0, "diagonal powers must be >= 0")
        eps = 1e-9 * (self.c11 + self.c22) ** 2
        _require(self.det >= -eps, "matrix must be PSD within tolerance")

    @property
    def trace(self) -> float:
        return self.c11 + self.c22

    @property
    def det(self) -> float:
        return self.c11 * self.c22 - abs(self.c12) ** 2

    def as_array(self) -> np.ndarray:
        return np.array(
            [[self.c11, self.c12], [np.conj(self.c12), self.c22]], dtype=complex
        )

    @classmethod
    def from_array(cls, m: np.ndarray) -> "Herm2":
        m = np.asarray(m, dtype=complex)
        _require(m.shape == (2, 2), "expected a 2x2 matrix")
        return cls(c11=float(m[0, 0].real), c22=float(m[1, 1].real), c12=complex(m[0, 1]))


@dataclass
class CovarianceField:
    """Per-pixel 2x2 Hermitian covariance raster with its look count."""

    c11: np.ndarray
    c22: np.ndarray
    c12: np.ndarray
    looks: int
    basis: str
    meta: AcquisitionMeta = field(default_factory=AcquisitionMeta)

    def __post_init__(self) -> None:
        self.c11 = np.asarray(self.c11, dtype=np.float64)
        self.c22 = np.asarray(self.c22, dtype=np.float64)
        self.c12 = np.asarray(self.c12, dtype=np.complex128)
        _require(self.c11.ndim == 2, "c11 must be 2-D")
        _require(
            self.c11.shape == self.c22.shape == self.c12.shape,
            "covariance channels must share dimensions",
        )
        _require(self.looks >= 1, "looks must be >= 1")
        _require(self.basis in BASES, f"basis must be one of {BASES}")
        _require_finite(self.c11, "c11")
        _require_finite(self.c22, "c22")
        _require_finite(self.c12, "c12")

    @property
    def height(self) -> int:
        return self.c11.shape[0]

    @property
    def width(self) -> int:
        return self.c11.shape[1]

    @property
    def trace(self) -> np.ndarray:
        return self.c11 + self.c22

    @property
    def det(self) -> np.ndarray:
        return self.c11 * self.c22 - np.abs(self.c12) ** 2

    def cell(self, row: int, col: int) -> Herm2:
        return Herm2(
            c11=float(self.c11[row, col]),
            c22=float(self.c22[row, col]),
            c12=complex(self.c12[row, col]),
        )


@dataclass(frozen=True)
class EigenPair2:
    """Eigenvalues of a Herm2 plus phase-free first eigenvector components."""

    lambda1: float
    lambda2: float
    e1_abs_first: float
    e2_abs_first: float


@dataclass
class HAlphaField:
    """Per-pixel entropy / mean-alpha raster with eigenvalues."""

    H: np.ndarray
    alpha: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    valid: np.ndarray

    def __post_init__(self) -> None:
        shapes = {a.shape for a in (self.H, self.alpha, self.lambda1, self.lambda2, self.valid)}
        _require(len(shapes) == 1, "H/alpha channels must share dimensions")
        _require(self.H.ndim == 2, "fields must be 2-D")

    @property
    def height(self) -> int:
        return self.H.shape[0]

    @property
    def width(self) -> int:
        return self.H.shape[1]


@dataclass
class ClassMap:
    """Label raster; 255 marks ignored pixels."""

    labels: np.ndarray
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        _require(self.labels.ndim == 2, "labels must be 2-D")
        present = self.labels[self.labels != IGNORE_LABEL]
        if present.size and self.class_names:
            _require(
                int(present.max()) < len(self.class_names),
                "every non-ignore label must index class_names",
            )

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def valid_mask(self) -> np.ndarray:
        return self.labels != IGNORE_LABEL


@dataclass
class ZoneMap:
    """H/alpha-plane zone labels (values 1..9 without 3; 255 = invalid)."""

    labels: np.ndarray

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        _require(self.labels.ndim == 2, "labels must be 2-D")
        present = np.unique(self.labels[self.labels != IGNORE_LABEL])
        _require(
            all(int(z) in FEASIBLE_ZONES for z in present),
            "zone labels must lie in the feasible zone set",
        )

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def as_class_map(self) -> ClassMap:
        """View zones as a ClassMap (zone value = class index) for seeding."""
        names = [f"Z{z}" if z in FEASIBLE_ZONES else f"unused{z}" for z in range(10)]
        return ClassMap(labels=self.labels.copy(), class_names=names)


@dataclass
class PatchSet:
    """Aligned multi-channel training patches with label masks."""

    patches: list[np.ndarray]
    masks: list[np.ndarray]
    channel_names: list[str]
    class_names: list[str]
    provenance: list[dict]
    platform_kind: str = "synthetic"
    mixed_platforms: bool = False

    def __post_init__(self) -> None:
        _require(len(self.patches) == len(self.masks) == len(self.provenance),
                 "patches, masks and provenance must align 1:1")
        if self.patches:
            chans = {p.shape[2] for p in self.patches}
            _require(len(chans) == 1, "all patches must share channel count")
            _require(
                next(iter(chans)) == len(self.channel_names),
                "channel count must match channel_names",
            )

    def __len__(self) -> int:
        return len(self.patches)


@dataclass
class SplitManifest:
    """Train/val sample index split, cohesive per base patch."""

    train: list[int]
    val: list[int]
    seed: int
    val_ratio: float

    def __post_init__(self) -> None:
        overlap = set(self.train) & set(self.val)
        _require(not overlap, "train and val indices must be disjoint")


@dataclass(frozen=True)
class ClassSpec:
    """Statistical description of one simulated land-cover class."""

    name: str
    sigma_hh: float
    sigma_vv: float
    rho_mag: float
    rho_phase: float = 0.0

    def __post_init__(self) -> None:
        _require(self.sigma_hh > 0 and self.sigma_vv > 0, "mean powers must be > 0")
        _require(0.0 <= self.rho_mag <= 1.0, "rho_mag must lie in [0, 1]")

    @property
    def rho(self) -> complex:
        return self.rho_mag * np.exp(1j * self.rho_phase)


@dataclass
class SceneSpec:
    """Layout plus per-class statistics for a simulated scene."""

    height: int
    width: int
    classes: list[ClassSpec]
    layout: str = "stripes"
    seed: int = 0
    voronoi_seeds: int = 16

    def __post_init__(self) -> None:
        _require(self.height >= 16 and self.width >= 16, "dimensions must be >= 16")
        _require(len(self.classes) >= 2, "at least 2 classes required")
        _require(
            self.layout in ("stripes", "rectangles", "voronoi"),
            "layout must be stripes, rectangles or voronoi",
        )
        if self.layout == "voronoi":
            _require(self.voronoi_seeds >= len(self.classes),
                     "voronoi needs at least one seed per class")

    @property
    def class_names(self) -> list[str]:
        return [c.name for c in self.classes]


def class_map_schema_matches(a: ClassMap, b: ClassMap) -> bool:
    return a.labels.shape == b.labels.shape and (
        not a.class_names or not b.class_names or a.class_names == b.class_names
    )


def as_label_array(labels: "np.ndarray | ClassMap | ZoneMap") -> np.ndarray:
    if isinstance(labels, (ClassMap, ZoneMap)):
        return labels.labels
    return np.asarray(labels, dtype=np.uint8)


def check_odd_window(window: int, height: int, width: int) -> None:
    _require(window % 2 == 1, f"window must be odd, got {window}")
    _require(window >= 1, "window must be >= 1")
    _require(
        window <= min(height, width),
        f"window {window} exceeds raster dimensions {height}x{width}",
    )


__all__ = [
    "IGNORE_LABEL",
    "PLATFORM_KINDS",
    "BASES",
    "FEASIBLE_ZONES",
    "ValidationError",
    "FormatError",
    "AcquisitionMeta",
    "SlcImage",
    "Herm2",
    "CovarianceField",
    "EigenPair2",
    "HAlphaField",
    "ClassMap",
    "ZoneMap",
    "PatchSet",
    "SplitManifest",
    "ClassSpec",
    "SceneSpec",
    "class_map_schema_matches",
    "as_label_array",
    "check_odd_window",
]
