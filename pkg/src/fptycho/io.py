"""On-disk formats: grid files, dataset manifests, and 16-bit graymap export.

Grid files are little-endian float32 with a 4-byte magic and u32 dimensions:

    "FPD1" rows cols rows*cols float32            (real grids)
    "FPC1" rows cols rows*cols (re, im) float32   (complex grids)

row-major, no padding, no trailing bytes. In memory everything is float64 /
complex128; precision is dropped exactly once, on write.

The manifest is UTF-8 JSON with a fixed key set; unknown keys anywhere in it
are rejected so that typos fail loudly instead of being ignored.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ManifestError, NumericalError, WindowOutOfBounds
from .field import wrap_phase
from .optics import Illumination, OpticalConfig, illumination_offsets

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"

_MANIFEST_KEYS = {
    "version", "wavelength_um", "na", "magnification", "camera_pixel_um",
    "upsample", "low_rows", "low_cols", "saturation", "illuminations",
}
_ILLUMINATION_KEYS = {"sx", "sy", "file"}


# ---------------------------------------------------------------------------
# grid files


def _read_exact(fh, count: int, path: str, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise FormatError(f"{path}: truncated {what}")
    return data


def _write_grid(path: str, arr: np.ndarray, magic: bytes, flat: np.ndarray) -> None:
    if arr.ndim != 2:
        raise FormatError(f"{path}: grids are 2-D, got ndim={arr.ndim}")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<II", arr.shape[0], arr.shape[1]))
        fh.write(flat.tobytes())


def _read_grid(path: str, magic: bytes) -> tuple[int, int, np.ndarray]:
    with open(path, "rb") as fh:
        got = _read_exact(fh, 4, path, "magic")
        if got != magic:
            raise FormatError(f"{path}: bad magic {got!r}, expected {magic!r}")
        rows, cols = struct.unpack("<II", _read_exact(fh, 8, path, "header"))
        if rows == 0 or cols == 0:
            raise FormatError(f"{path}: zero-sized grid {rows}x{cols}")
        per = 1 if magic == b"FPD1" else 2
        payload = _read_exact(fh, rows * cols * per * 4, path, "payload")
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after payload")
    data = np.frombuffer(payload, dtype="<f4")
    return rows, cols, data


def write_real_grid(path: str, arr: np.ndarray) -> None:
    arr = np.asarray(arr, dtype=np.float64)
    _write_grid(path, arr, b"FPD1", arr.astype("<f4").ravel())


def read_real_grid(path: str) -> np.ndarray:
    rows, cols, data = _read_grid(path, b"FPD1")
    return data.astype(np.float64).reshape(rows, cols)


def write_complex_grid(path: str, arr: np.ndarray) -> None:
    arr = np.asarray(arr, dtype=np.complex128)
    inter = np.empty(arr.size * 2, dtype="<f4")
    inter[0::2] = arr.real.astype("<f4").ravel()
    inter[1::2] = arr.imag.astype("<f4").ravel()
    _write_grid(path, arr, b"FPC1", inter)


def read_complex_grid(path: str) -> np.ndarray:
    rows, cols, data = _read_grid(path, b"FPC1")
    out = data[0::2].astype(np.float64) + 1j * data[1::2].astype(np.float64)
    return out.reshape(rows, cols)


# ---------------------------------------------------------------------------
# datasets


@dataclass
class Dataset:
    """A manifest-described capture set, fully loaded into memory."""

    optics: OpticalConfig
    images: list[np.ndarray]       # float64 (low_rows, low_cols) intensities
    files: list[str]               # image file names, manifest order
    saturation: float | None = None


def default_file_names(count: int) -> list[str]:
    return [f"img_{n:04d}.fpd1" for n in range(count)]


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ManifestError(msg)


def parse_manifest(text: str) -> tuple[OpticalConfig, list[str], float | None]:
    """Parse and validate manifest JSON; returns (optics, files, saturation)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
    _require(isinstance(doc, dict), "manifest root must be an object")
    unknown = set(doc) - _MANIFEST_KEYS
    _require(not unknown, f"unknown manifest fields: {sorted(unknown)}")
    missing = _MANIFEST_KEYS - set(doc)
    _require(not missing, f"missing manifest fields: {sorted(missing)}")
    _require(doc["version"] == MANIFEST_VERSION,
             f"unsupported manifest version {doc['version']!r}")

    def number(key, cls=float):
        val = doc[key]
        _require(isinstance(val, (int, float)) and not isinstance(val, bool),
                 f"field {key} must be a number")
        return cls(val)

    sat = doc["saturation"]
    if sat is not None:
        _require(isinstance(sat, (int, float)) and not isinstance(sat, bool)
                 and sat > 0, "saturation must be null or a positive number")
        sat = float(sat)
    ills = doc["illuminations"]
    _require(isinstance(ills, list) and len(ills) > 0,
             "illuminations must be a non-empty list")
    parsed = []
    files = []
    for i, entry in enumerate(ills):
        _require(isinstance(entry, dict), f"illumination {i} must be an object")
        unknown = set(entry) - _ILLUMINATION_KEYS
        _require(not unknown,
                 f"illumination {i}: unknown fields {sorted(unknown)}")
        missing = _ILLUMINATION_KEYS - set(entry)
        _require(not missing,
                 f"illumination {i}: missing fields {sorted(missing)}")
        sx, sy, fname = entry["sx"], entry["sy"], entry["file"]
        _require(isinstance(sx, (int, float)) and not isinstance(sx, bool) and
                 isinstance(sy, (int, float)) and not isinstance(sy, bool),
                 f"illumination {i}: sx/sy must be numbers")
        _require(isinstance(fname, str) and fname != "" and "/" not in fname
                 and "\\" not in fname,
                 f"illumination {i}: file must be a bare file name")
        try:
            parsed.append(Illumination(sx=float(sx), sy=float(sy)))
        except ValueError as exc:
            raise ManifestError(f"illumination {i}: {exc}") from exc
        files.append(fname)

    try:
        upsample = doc["upsample"]
        _require(isinstance(upsample, int) and not isinstance(upsample, bool),
                 "upsample must be an integer")
        low_rows, low_cols = doc["low_rows"], doc["low_cols"]
        _require(isinstance(low_rows, int) and isinstance(low_cols, int)
                 and not isinstance(low_rows, bool) and not isinstance(low_cols, bool),
                 "low_rows/low_cols must be integers")
        cfg = OpticalConfig(
            wavelength_um=number("wavelength_um"),
            na=number("na"),
            magnification=number("magnification"),
            camera_pixel_um=number("camera_pixel_um"),
            upsample=upsample,
            low_rows=low_rows,
            low_cols=low_cols,
            illuminations=tuple(parsed),
        )
    except ValueError as exc:
        raise ManifestError(str(exc)) from exc
    # geometry must close: every shifted window inside the high-res grid
    try:
        illumination_offsets(cfg)
    except WindowOutOfBounds as exc:
        raise ManifestError(str(exc)) from exc
    return cfg, files, sat


def manifest_text(cfg: OpticalConfig, files: list[str],
                  saturation: float | None) -> str:
    if len(files) != len(cfg.illuminations):
        raise ManifestError(
            f"{len(files)} file names for {len(cfg.illuminations)} illuminations")
    doc = {
        "version": MANIFEST_VERSION,
        "wavelength_um": cfg.wavelength_um,
        "na": cfg.na,
        "magnification": cfg.magnification,
        "camera_pixel_um": cfg.camera_pixel_um,
        "upsample": cfg.upsample,
        "low_rows": cfg.low_rows,
        "low_cols": cfg.low_cols,
        "saturation": saturation,
        "illuminations": [
            {"sx": ill.sx, "sy": ill.sy, "file": fname}
            for ill, fname in zip(cfg.illuminations, files)
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_dataset(ds: Dataset, out_dir: str) -> None:
    """Write manifest plus one FPD1 file per image (float32 on disk)."""
    os.makedirs(out_dir, exist_ok=True)
    if len(ds.images) != len(ds.files) or len(ds.files) != len(ds.optics.illuminations):
        raise ManifestError("images, files, and illuminations must align")
    with open(os.path.join(out_dir, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        fh.write(manifest_text(ds.optics, ds.files, ds.saturation))
    for img, fname in zip(ds.images, ds.files):
        img = np.asarray(img)
        if img.shape != (ds.optics.low_rows, ds.optics.low_cols):
            raise ManifestError(
                f"{fname}: image is {img.shape}, manifest says "
                f"{(ds.optics.low_rows, ds.optics.low_cols)}")
        write_real_grid(os.path.join(out_dir, fname), img)


def read_dataset(in_dir: str) -> Dataset:
    """Load and validate a dataset directory."""
    mpath = os.path.join(in_dir, MANIFEST_NAME)
    try:
        with open(mpath, encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError as exc:
        raise ManifestError(f"no {MANIFEST_NAME} in {in_dir}") from exc
    cfg, files, sat = parse_manifest(text)
    images = []
    for fname in files:
        path = os.path.join(in_dir, fname)
        img = read_real_grid(path)
        if img.shape != (cfg.low_rows, cfg.low_cols):
            raise FormatError(
                f"{path}: grid is {img.shape}, manifest says "
                f"{(cfg.low_rows, cfg.low_cols)}")
        if np.any(~np.isfinite(img)):
            raise NumericalError(f"{path}: non-finite intensity sample")
        if np.any(img < 0):
            raise FormatError(f"{path}: negative intensity sample")
        images.append(img)
    return Dataset(optics=cfg, images=images, files=files, saturation=sat)


# ---------------------------------------------------------------------------
# graymap export


def export_image(grid: np.ndarray, path: str, mode: str = "amp") -> None:
    """Write a 16-bit binary PGM of one component of a grid.

    mode selects amp | phase | real | imag; phases are wrapped to (-pi, pi]
    before scaling. The value range maps linearly to 0..65535; a constant
    grid maps to mid-gray 32768. Samples are big-endian per the PGM spec.
    """
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise FormatError(f"{path}: grids are 2-D, got ndim={grid.ndim}")
    z = grid.astype(np.complex128)
    if mode == "amp":
        img = np.abs(z)
    elif mode == "phase":
        img = wrap_phase(np.angle(z))
    elif mode == "real":
        img = z.real.copy()
    elif mode == "imag":
        img = z.imag.copy()
    else:
        raise ValueError(f"unknown image mode {mode!r}")
    if not np.all(np.isfinite(img)):
        raise NumericalError(f"{path}: non-finite sample in {mode} image")
    lo = float(img.min())
    hi = float(img.max())
    if hi == lo:
        scaled = np.full(img.shape, 32768, dtype=np.uint16)
    else:
        scaled = np.rint((img - lo) * (65535.0 / (hi - lo))).astype(np.uint16)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n65535\n" % (img.shape[1], img.shape[0]))
        fh.write(scaled.astype(">u2").tobytes())
