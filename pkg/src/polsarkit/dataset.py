"""Training-dataset synthesis: channel stacking, tiling, augmentation, export.

Classified maps ride along with the intensity channels as extra ordinal
channels, which is the whole point of the pipeline: segmentation networks
get both the raw backscatter and the physics-derived labelings.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import pfr
from .types import (
    ClassMap,
    IGNORE_LABEL,
    PatchSet,
    SplitManifest,
    ValidationError,
)

AUGMENT_TAGS = ("id", "rot90", "rot180", "rot270", "fliph", "flipv")

DEFAULT_TILE = 256
DEFAULT_MIN_LABELED = 0.5


def encode_class_channel(cm: ClassMap, class_count: int | None = None) -> np.ndarray:
    """Labels as ordinal values in [0, 1]; ignore pixels become the 1.0 sentinel."""
    k = class_count or max(len(cm.class_names), int(cm.labels[cm.labels != IGNORE_LABEL].max(initial=0)) + 1)
    denom = max(k - 1, 1)
    lab = cm.labels.astype(np.float32)
    return np.where(cm.labels == IGNORE_LABEL, np.float32(1.0), lab / denom)


def stack_channels(
    intensity: dict[str, np.ndarray],
    classified: dict[str, ClassMap] | None = None,
    selection: list[str] | None = None,
) -> tuple[np.ndarray, list[str]]:
    """Stack named intensity rasters and encoded classified maps.

    Channel order follows `selection` (default: all intensities, then all
    classified maps, in dict order). Returns (H, W, C) float32 plus names.
    """
    classified = classified or {}
    if selection is None:
        selection = list(intensity) + list(classified)
    if not selection:
        raise ValidationError("channel selection is empty")

    layers: list[np.ndarray] = []
    shape = None
    for name in selection:
        if name in intensity:
            layer = np.asarray(intensity[name], dtype=np.float32)
        elif name in classified:
            layer = encode_class_channel(classified[name])
        else:
            raise ValidationError(f"unknown channel {name!r}")
        if shape is None:
            shape = layer.shape
        elif layer.shape != shape:
            raise ValidationError(
                f"channel {name!r} has shape {layer.shape}, expected {shape}"
            )
        layers.append(layer)
    return np.stack(layers, axis=2), list(selection)


def tile(
    raster: np.ndarray,
    mask: ClassMap,
    size: int = DEFAULT_TILE,
    stride: int | None = None,
    min_labeled_fraction: float = DEFAULT_MIN_LABELED,
    scene_id: str = "",
    channel_names: list[str] | None = None,
    platform_kind: str = "synthetic",
) -> PatchSet:
    """Cut grid-aligned patches; partial edge tiles are dropped.

    Tiles whose labeled-pixel fraction falls below min_labeled_fraction
    are skipped; provenance records the source rectangle.
    """
    raster = np.asarray(raster)
    if raster.ndim == 2:
        raster = raster[:, :, np.newaxis]
    h, w, c = raster.shape
    if mask.labels.shape != (h, w):
        raise ValidationError("mask dimensions must match the raster")
    if size > min(h, w):
        raise ValidationError(f"tile size {size} exceeds raster {h}x{w}")
    stride = stride or size
    if stride < 1:
        raise ValidationError("stride must be >= 1")

    patches: list[np.ndarray] = []
    masks: list[np.ndarray] = []
    provenance: list[dict] = []
    for r0 in range(0, h - size + 1, stride):
        for c0 in range(0, w - size + 1, stride):
            m = mask.labels[r0:r0 + size, c0:c0 + size]
            if float((m != IGNORE_LABEL).mean()) < min_labeled_fraction:
                continue
            patches.append(raster[r0:r0 + size, c0:c0 + size, :].astype(np.float32))
            masks.append(m.copy())
            provenance.append(
                {"scene_id": scene_id, "row": r0, "col": c0, "augment": "id"}
            )
    return PatchSet(
        patches=patches,
        masks=masks,
        channel_names=channel_names or [f"ch{i}" for i in range(c)],
        class_names=list(mask.class_names),
        provenance=provenance,
        platform_kind=platform_kind,
    )


def _transform(arr: np.ndarray, tag: str) -> np.ndarray:
    if tag == "id":
        return arr
    if tag == "rot90":
        return np.rot90(arr, 1, axes=(0, 1))
    if tag == "rot180":
        return np.rot90(arr, 2, axes=(0, 1))
    if tag == "rot270":
        return np.rot90(arr, 3, axes=(0, 1))
    if tag == "fliph":
        return np.flip(arr, axis=1)
    if tag == "flipv":
        return np.flip(arr, axis=0)
    raise ValidationError(f"unknown augmentation {tag!r}")


def augment(ps: PatchSet) -> PatchSet:
    """Expand each patch to its six dihedral variants (masks follow along).

    Output count is exactly 6x the input count. Variants are numpy views,
    so augmentation costs no pixel copies until export.
    """
    patches: list[np.ndarray] = []
    masks: list[np.ndarray] = []
    provenance: list[dict] = []
    for patch, m, prov in zip(ps.patches, ps.masks, ps.provenance):
        if patch.shape[0] != patch.shape[1]:
            raise ValidationError("augmentation requires square patches")
        for tag in AUGMENT_TAGS:
            patches.append(_transform(patch, tag))
            masks.append(_transform(m, tag))
            provenance.append({**prov, "augment": tag})
    return PatchSet(
        patches=patches,
        masks=masks,
        channel_names=list(ps.channel_names),
        class_names=list(ps.class_names),
        provenance=provenance,
        platform_kind=ps.platform_kind,
        mixed_platforms=ps.mixed_platforms,
    )


def _base_key(prov: dict) -> tuple:
    return (prov.get("scene_id", ""), prov["row"], prov["col"])


def split(ps: PatchSet, val_ratio: float, seed: int) -> SplitManifest:
    """Deterministic train/val split at the base-patch level.

    All augmentation variants of one source rectangle land in the same
    split, so validation never sees a rotated copy of a training patch.
    """
    if not ps.patches:
        raise ValidationError("cannot split an empty patch set")
    if not 0.0 < val_ratio < 1.0:
        raise ValidationError("val_ratio must lie in (0, 1)")

    groups: dict[tuple, list[int]] = {}
    for i, prov in enumerate(ps.provenance):
        groups.setdefault(_base_key(prov), []).append(i)

    keys = sorted(groups)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(keys))
    n_val = int(round(val_ratio * len(keys)))
    val_keys = {keys[i] for i in order[:n_val]}

    train: list[int] = []
    val: list[int] = []
    for key in keys:
        (val if key in val_keys else train).extend(groups[key])
    return SplitManifest(train=sorted(train), val=sorted(val), seed=seed, val_ratio=val_ratio)


def merge(ps_list: list[PatchSet], force: bool = False) -> PatchSet:
    """Concatenate patch sets with compatible channel schemas.

    Mixing platform kinds is refused unless force=True, in which case the
    result carries a mixing warning flag into the manifest.
    """
    if not ps_list:
        raise ValidationError("nothing to merge")
    first = ps_list[0]
    for ps in ps_list[1:]:
        if ps.channel_names != first.channel_names:
            raise ValidationError("channel schemas differ; cannot merge")
        if ps.patches and first.patches and ps.patches[0].shape != first.patches[0].shape:
            raise ValidationError("patch shapes differ; cannot merge")

    kinds = {ps.platform_kind for ps in ps_list}
    mixed = len(kinds) > 1 or any(ps.mixed_platforms for ps in ps_list)
    if mixed and not force:
        raise ValidationError(
            "refusing to merge airborne and spaceborne training data; their "
            "resolution and viewing geometry differ (pass force=True to override)"
        )
    return PatchSet(
        patches=[p for ps in ps_list for p in ps.patches],
        masks=[m for ps in ps_list for m in ps.masks],
        channel_names=list(first.channel_names),
        class_names=list(first.class_names),
        provenance=[dict(p) for ps in ps_list for p in ps.provenance],
        platform_kind=first.platform_kind if len(kinds) == 1 else "mixed",
        mixed_platforms=mixed,
    )


def export(ps: PatchSet, manifest: SplitManifest, out_dir: "str | Path") -> Path:
    """Write the dataset directory: per-split PFR tensors plus manifest.json.

    Tensor files hold shape (N, size, size, C) with the PFR height field
    set to N*size; masks are single-channel u8.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    size = ps.patches[0].shape[0] if ps.patches else 0

    counts = {}
    for name, indices in (("train", manifest.train), ("val", manifest.val)):
        counts[name] = len(indices)
        if not indices:
            continue
        tensor = np.concatenate([ps.patches[i] for i in indices], axis=0)
        masks = np.concatenate([ps.masks[i] for i in indices], axis=0)
        pfr.write_raster(out / f"{name}.pfr", tensor.astype(np.float32))
        pfr.write_raster(out / f"{name}_mask.pfr", masks.astype(np.uint8))

    doc = {
        "patch_size": size,
        "channels": len(ps.channel_names),
        "channel_names": ps.channel_names,
        "class_names": ps.class_names,
        "platform_kind": ps.platform_kind,
        "mixed_platforms": ps.mixed_platforms,
        "counts": counts,
        "split": {"seed": manifest.seed, "val_ratio": manifest.val_ratio},
        "provenance": {
            "train": [ps.provenance[i] for i in manifest.train],
            "val": [ps.provenance[i] for i in manifest.val],
        },
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    return out


def load_dataset(dataset_dir: "str | Path") -> dict:
    """Read back an exported dataset directory.

    Returns {"manifest": dict, "train": (tensor, masks) | None, "val": ...}
    with tensors reshaped to (N, size, size, C).
    """
    d = Path(dataset_dir)
    manifest = json.loads((d / "manifest.json").read_text(encoding="utf-8"))
    size = manifest["patch_size"]
    c = manifest["channels"]
    result: dict = {"manifest": manifest}
    for name in ("train", "val"):
        n = manifest["counts"].get(name, 0)
        if not n:
            result[name] = None
            continue
        tensor, _ = pfr.read_raster(d / f"{name}.pfr")
        masks, _ = pfr.read_raster(d / f"{name}_mask.pfr")
        result[name] = (
            tensor.reshape(n, size, size, c),
            masks.reshape(n, size, size),
        )
    return result


__all__ = [
    "AUGMENT_TAGS",
    "encode_class_channel",
    "stack_channels",
    "tile",
    "augment",
    "split",
    "merge",
    "export",
    "load_dataset",
]
