"""PFR raster format.

Layout (all multi-byte values little-endian):

    magic   4 bytes  b"PFR1"
    dtype   u8       0 = u8, 1 = f32, 2 = complex64 (f32 re/im pairs)
    height  u32
    width   u32
    channels u32
    payload  row-major, channel-interleaved (shape (height, width, channels))

Each raster may carry a sidecar ``<name>.meta.json`` holding acquisition
metadata plus optional keys (class_names, channel_names, looks, basis).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .types import (
    AcquisitionMeta,
    ClassMap,
    CovarianceField,
    FormatError,
    HAlphaField,
    SlcImage,
    ZoneMap,
)

MAGIC = b"PFR1"
_HEADER = struct.Struct("<4sBIII")

DTYPE_U8 = 0
DTYPE_F32 = 1
DTYPE_C64 = 2

_CODE_TO_DTYPE = {
    DTYPE_U8: np.dtype("<u1"),
    DTYPE_F32: np.dtype("<f4"),
    DTYPE_C64: np.dtype("<c8"),
}
_KIND_TO_CODE = {"u": DTYPE_U8, "f": DTYPE_F32, "c": DTYPE_C64}

# Power underflow threshold below which an H/alpha pixel is flagged invalid.
SPAN_UNDERFLOW = 1e-290


def sidecar_path(path: "str | Path") -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".meta.json")


def write_raster(path: "str | Path", data: np.ndarray, meta: dict | None = None) -> None:
    """Write an (H, W) or (H, W, C) array as a PFR file plus optional sidecar."""
    arr = np.asarray(data)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3:
        raise FormatError(f"raster must be 2-D or 3-D, got {arr.ndim}-D")
    code = _KIND_TO_CODE.get(arr.dtype.kind)
    if code is None:
        raise FormatError(f"unsupported dtype {arr.dtype}")
    arr = np.ascontiguousarray(arr.astype(_CODE_TO_DTYPE[code], copy=False))
    h, w, c = arr.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, code, h, w, c))
        f.write(arr.tobytes())
    if meta is not None:
        with open(sidecar_path(path), "w", encoding="utf-8") as f:
            json.dump(meta, f, indent=2, sort_keys=True)
            f.write("\n")


def read_raster(path: "str | Path") -> tuple[np.ndarray, dict]:
    """Read a PFR file; returns (array of shape (H, W, C), sidecar dict)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, code, h, w, c = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    dtype = _CODE_TO_DTYPE.get(code)
    if dtype is None:
        raise FormatError(f"{path}: unknown dtype code {code}")
    expected = h * w * c * dtype.itemsize
    payload = raw[_HEADER.size:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected} "
            f"for {h}x{w}x{c} {dtype}"
        )
    arr = np.frombuffer(payload, dtype=dtype).reshape(h, w, c).copy()
    meta: dict = {}
    sc = sidecar_path(path)
    if sc.exists():
        meta = json.loads(sc.read_text(encoding="utf-8"))
    return arr, meta


def save_slc(path: "str | Path", slc: SlcImage) -> None:
    data = np.stack([slc.hh, slc.vv], axis=2).astype(np.complex64)
    write_raster(path, data, meta=slc.meta.to_dict())


def load_slc(path: "str | Path") -> SlcImage:
    arr, meta = read_raster(path)
    if arr.dtype != np.complex64:
        raise FormatError(f"{path}: SLC payload must be complex64, got {arr.dtype}")
    if arr.shape[2] != 2:
        raise FormatError(f"{path}: SLC needs 2 channels (hh, vv), got {arr.shape[2]}")
    return SlcImage(hh=arr[:, :, 0], vv=arr[:, :, 1], meta=AcquisitionMeta.from_dict(meta))


def save_covariance(path: "str | Path", cov: CovarianceField) -> None:
    data = np.stack(
        [cov.c11.astype(np.complex64), cov.c22.astype(np.complex64),
         cov.c12.astype(np.complex64)],
        axis=2,
    )
    meta = cov.meta.to_dict()
    meta["looks"] = cov.looks
    meta["basis"] = cov.basis
    meta["channel_names"] = ["c11", "c22", "c12"]
    write_raster(path, data, meta=meta)


def load_covariance(path: "str | Path") -> CovarianceField:
    arr, meta = read_raster(path)
    if arr.shape[2] != 3 or arr.dtype != np.complex64:
        raise FormatError(f"{path}: covariance needs 3 complex64 channels")
    return CovarianceField(
        c11=arr[:, :, 0].real,
        c22=arr[:, :, 1].real,
        c12=arr[:, :, 2],
        looks=int(meta.get("looks", 1)),
        basis=meta.get("basis", "pauli"),
        meta=AcquisitionMeta.from_dict(meta),
    )


def save_halpha(path: "str | Path", field: HAlphaField, meta: dict | None = None) -> None:
    data = np.stack(
        [field.H, field.alpha, field.lambda1, field.lambda2], axis=2
    ).astype(np.float32)
    sidecar = dict(meta or {})
    sidecar["channel_names"] = ["H", "alpha", "lambda1", "lambda2"]
    write_raster(path, data, meta=sidecar)


def load_halpha(path: "str | Path") -> HAlphaField:
    arr, _ = read_raster(path)
    if arr.shape[2] != 4 or arr.dtype != np.float32:
        raise FormatError(f"{path}: H/alpha raster needs 4 f32 channels")
    lam1 = arr[:, :, 2].astype(np.float64)
    lam2 = arr[:, :, 3].astype(np.float64)
    return HAlphaField(
        H=arr[:, :, 0].astype(np.float64),
        alpha=arr[:, :, 1].astype(np.float64),
        lambda1=lam1,
        lambda2=lam2,
        valid=(lam1 + lam2) > SPAN_UNDERFLOW,
    )


def save_class_map(path: "str | Path", cm: ClassMap, meta: dict | None = None) -> None:
    sidecar = dict(meta or {})
    sidecar["class_names"] = cm.class_names
    write_raster(path, cm.labels, meta=sidecar)


def load_class_map(path: "str | Path") -> ClassMap:
    arr, meta = read_raster(path)
    if arr.shape[2] != 1 or arr.dtype != np.uint8:
        raise FormatError(f"{path}: class map needs a single u8 channel")
    return ClassMap(labels=arr[:, :, 0], class_names=list(meta.get("class_names", [])))


def save_zone_map(path: "str | Path", zm: ZoneMap, meta: dict | None = None) -> None:
    write_raster(path, zm.labels, meta=dict(meta or {}))


def load_zone_map(path: "str | Path") -> ZoneMap:
    arr, _ = read_raster(path)
    if arr.shape[2] != 1 or arr.dtype != np.uint8:
        raise FormatError(f"{path}: zone map needs a single u8 channel")
    return ZoneMap(labels=arr[:, :, 0])


__all__ = [
    "MAGIC",
    "DTYPE_U8",
    "DTYPE_F32",
    "DTYPE_C64",
    "SPAN_UNDERFLOW",
    "sidecar_path",
    "write_raster",
    "read_raster",
    "save_slc",
    "load_slc",
    "save_covariance",
    "load_covariance",
    "save_halpha",
    "load_halpha",
    "save_class_map",
    "load_class_map",
    "save_zone_map",
    "load_zone_map",
]
