"""Pipeline configuration: JSON in, validated dataclass out.

Validation re-checks every component-level invariant up front and reports
the offending field path, so a bad config fails before any work starts.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .covariance import DB_CLAMP_DEFAULT
from .dataset import DEFAULT_MIN_LABELED, DEFAULT_TILE
from .simulate import SceneSpec, scene_spec_from_json
from .types import FEASIBLE_ZONES, ValidationError
from .wishart import DEFAULT_CHANGE_TOL, DEFAULT_MAX_ITER


@dataclass
class PipelineConfig:
    scene: SceneSpec
    window: int = 7
    basis: str = "pauli"
    db_clamp: tuple[float, float] = DB_CLAMP_DEFAULT
    wishart_max_iter: int = DEFAULT_MAX_ITER
    wishart_change_tol: float = DEFAULT_CHANGE_TOL
    wishart_span_bins: int = 3
    zone_to_class: dict[int, int] | None = None
    channels: list[str] = field(
        default_factory=lambda: ["hh_db", "vv_db", "zones", "wishart"]
    )
    tile_size: int = DEFAULT_TILE
    tile_stride: int | None = None
    min_labeled_fraction: float = DEFAULT_MIN_LABELED
    val_ratio: float = 0.2
    split_seed: int = 1

    def to_dict(self) -> dict:
        return {
            "scene": {
                "height": self.scene.height,
                "width": self.scene.width,
                "layout": self.scene.layout,
                "seed": self.scene.seed,
                "voronoi_seeds": self.scene.voronoi_seeds,
                "classes": [
                    {
                        "name": c.name,
                        "sigma_hh": c.sigma_hh,
                        "sigma_vv": c.sigma_vv,
                        "rho_mag": c.rho_mag,
                        "rho_phase": c.rho_phase,
                    }
                    for c in self.scene.classes
                ],
            },
            "window": self.window,
            "basis": self.basis,
            "db_clamp": list(self.db_clamp),
            "wishart": {
                "max_iter": self.wishart_max_iter,
                "change_tol": self.wishart_change_tol,
                "span_bins": self.wishart_span_bins,
            },
            "zone_to_class": (
                {str(k): v for k, v in self.zone_to_class.items()}
                if self.zone_to_class is not None
                else None
            ),
            "channels": self.channels,
            "tile": {
                "size": self.tile_size,
                "stride": self.tile_stride,
                "min_labeled_fraction": self.min_labeled_fraction,
            },
            "split": {"val_ratio": self.val_ratio, "seed": self.split_seed},
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _fail(path: str, msg: str) -> None:
    raise ValidationError(f"config field {path}: {msg}")


def load_pipeline_config(source: "str | Path | dict") -> PipelineConfig:
    if isinstance(source, (str, Path)):
        obj = json.loads(Path(source).read_text(encoding="utf-8"))
    else:
        obj = source
    if not isinstance(obj, dict):
        raise ValidationError("config must be a JSON object")

    if "scene" not in obj:
        _fail("scene", "missing")
    try:
        scene = scene_spec_from_json(obj["scene"])
    except (KeyError, TypeError, ValueError) as exc:
        _fail("scene", str(exc))

    window = int(obj.get("window", 7))
    if window % 2 == 0 or window < 1:
        _fail("window", f"must be a positive odd integer, got {window}")
    if window > min(scene.height, scene.width):
        _fail("window", f"{window} exceeds scene dimensions")

    basis = obj.get("basis", "pauli")
    if basis not in ("pauli", "lexicographic"):
        _fail("basis", f"must be pauli or lexicographic, got {basis!r}")

    db_clamp = tuple(obj.get("db_clamp", DB_CLAMP_DEFAULT))
    if len(db_clamp) != 2 or not db_clamp[0] < db_clamp[1]:
        _fail("db_clamp", f"must be [lo, hi] with lo < hi, got {list(db_clamp)}")

    wis = obj.get("wishart", {})
    max_iter = int(wis.get("max_iter", DEFAULT_MAX_ITER))
    if max_iter < 1:
        _fail("wishart.max_iter", "must be >= 1")
    change_tol = float(wis.get("change_tol", DEFAULT_CHANGE_TOL))
    if not 0.0 < change_tol < 1.0:
        _fail("wishart.change_tol", "must lie in (0, 1)")
    span_bins = int(wis.get("span_bins", 3))
    if span_bins < 1:
        _fail("wishart.span_bins", "must be >= 1")

    ztc_raw = obj.get("zone_to_class")
    zone_to_class = None
    if ztc_raw is not None:
        zone_to_class = {int(k): int(v) for k, v in ztc_raw.items()}
        missing = [z for z in FEASIBLE_ZONES if z not in zone_to_class]
        if missing:
            _fail("zone_to_class", f"does not cover feasible zones {missing}")
        n_classes = len(scene.classes)
        bad = {z: c for z, c in zone_to_class.items() if not 0 <= c < n_classes}
        if bad:
            _fail("zone_to_class", f"class indices out of range: {bad}")

    channels = list(obj.get("channels", ["hh_db", "vv_db", "zones", "wishart"]))
    known = {"hh_db", "vv_db", "hh", "vv", "zones", "wishart"}
    unknown = [c for c in channels if c not in known]
    if unknown:
        _fail("channels", f"unknown channels {unknown}; valid: {sorted(known)}")
    if not channels:
        _fail("channels", "selection is empty")

    tile_cfg = obj.get("tile", {})
    tile_size = int(tile_cfg.get("size", DEFAULT_TILE))
    if tile_size < 1 or tile_size > min(scene.height, scene.width):
        _fail("tile.size", f"{tile_size} invalid for scene {scene.height}x{scene.width}")
    tile_stride = tile_cfg.get("stride")
    if tile_stride is not None:
        tile_stride = int(tile_stride)
        if tile_stride < 1:
            _fail("tile.stride", "must be >= 1")
    min_labeled = float(tile_cfg.get("min_labeled_fraction", DEFAULT_MIN_LABELED))
    if not 0.0 <= min_labeled <= 1.0:
        _fail("tile.min_labeled_fraction", "must lie in [0, 1]")

    split_cfg = obj.get("split", {})
    val_ratio = float(split_cfg.get("val_ratio", 0.2))
    if not 0.0 < val_ratio < 1.0:
        _fail("split.val_ratio", "must lie in (0, 1)")
    split_seed = int(split_cfg.get("seed", 1))

    return PipelineConfig(
        scene=scene,
        window=window,
        basis=basis,
        db_clamp=(float(db_clamp[0]), float(db_clamp[1])),
        wishart_max_iter=max_iter,
        wishart_change_tol=change_tol,
        wishart_span_bins=span_bins,
        zone_to_class=zone_to_class,
        channels=channels,
        tile_size=tile_size,
        tile_stride=tile_stride,
        min_labeled_fraction=min_labeled,
        val_ratio=val_ratio,
        split_seed=split_seed,
    )


__all__ = ["PipelineConfig", "load_pipeline_config"]
