"""On-disk formats for cubes, abundance maps, and endmember matrices.

A cube or abundance map is a file pair sharing a base name:

``<name>.json``
    header, e.g. ``{"height": 4, "width": 4, "bands": 3, "dtype": "f32",
    "layout": "bip", "value_range": [0.0, 1.0]}``. Abundance headers say
    ``"channels"`` instead of ``"bands"``; the loaders accept either key.

``<name>.raw``
    height * width * channels little-endian float32 values, band
    interleaved by pixel (the channel index varies fastest).

Cube values are rescaled to [0, 1] on load using the header value_range;
abundance values are stored verbatim and their recorded range is purely
informational (least-squares abundances may leave [0, 1]).

Endmember matrices are plain CSV: M rows of L comma-separated values,
no header row. Full float64 precision is kept so round trips are exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import AbundanceMap, DataFormatError, EndmemberMatrix, SpectralCube

_HEADER_SUFFIX = ".json"
_PAYLOAD_SUFFIX = ".raw"


def _base_path(path) -> Path:
    path = Path(path)
    if path.suffix in (_HEADER_SUFFIX, _PAYLOAD_SUFFIX):
        return path.with_suffix("")
    return path


def _read_header(path: Path) -> dict:
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise DataFormatError(f"missing header file {path}")
    try:
        header = json.loads(text)
    except json.JSONDecodeError as e:
        raise DataFormatError(f"malformed header {path}: {e}")
    if not isinstance(header, dict):
        raise DataFormatError(f"malformed header {path}: expected a JSON object")

    for key in ("height", "width"):
        if not isinstance(header.get(key), int) or header[key] < 1:
            raise DataFormatError(f"header {path}: '{key}' must be a positive integer")
    if "bands" in header:
        channels = header["bands"]
    elif "channels" in header:
        channels = header["channels"]
    else:
        raise DataFormatError(f"header {path}: missing 'bands' or 'channels'")
    if not isinstance(channels, int) or channels < 1:
        raise DataFormatError(f"header {path}: channel count must be a positive integer")
    if header.get("dtype") != "f32":
        raise DataFormatError(f"header {path}: unsupported dtype {header.get('dtype')!r}")
    if header.get("layout") != "bip":
        raise DataFormatError(f"header {path}: unsupported layout {header.get('layout')!r}")
    rng = header.get("value_range")
    if (
        not isinstance(rng, (list, tuple))
        or len(rng) != 2
        or not all(isinstance(v, (int, float)) for v in rng)
        or not float(rng[1]) > float(rng[0])
    ):
        raise DataFormatError(f"header {path}: 'value_range' must be [lo, hi] with hi > lo")
    header["channels"] = channels
    return header


def _read_payload(path: Path, count: int, shape: tuple) -> np.ndarray:
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise DataFormatError(f"missing payload file {path}")
    expected = count * 4
    if len(raw) != expected:
        raise DataFormatError(
            f"payload {path}: expected {expected} bytes for {shape[0]}x{shape[1]}x{shape[2]}, "
            f"found {len(raw)} (divergence at byte offset {min(expected, len(raw))})"
        )
    values = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    finite = np.isfinite(values)
    if not finite.all():
        idx = int(np.argmin(finite))
        raise DataFormatError(
            f"payload {path}: non-finite value at element {idx} (byte offset {idx * 4})"
        )
    return values.reshape(shape)


def _write_pair(data: np.ndarray, path, channel_key: str, value_range) -> None:
    base = _base_path(path)
    base.parent.mkdir(parents=True, exist_ok=True)
    h, w, c = data.shape
    header = {
        "height": h,
        "width": w,
        channel_key: c,
        "dtype": "f32",
        "layout": "bip",
        "value_range": [float(value_range[0]), float(value_range[1])],
    }
    base.with_suffix(_HEADER_SUFFIX).write_text(json.dumps(header, sort_keys=True) + "\n")
    base.with_suffix(_PAYLOAD_SUFFIX).write_bytes(
        np.ascontiguousarray(data, dtype="<f4").tobytes()
    )


def pair_kind(path) -> str:
    """Peek at a header: "cube" if it declares bands, else "abundance"."""
    header = _read_header(_base_path(path).with_suffix(_HEADER_SUFFIX))
    return "cube" if "bands" in header else "abundance"


def load_cube(path) -> SpectralCube:
    """Load a cube pair, rescaling values to [0, 1] via the header range."""
    base = _base_path(path)
    header = _read_header(base.with_suffix(_HEADER_SUFFIX))
    shape = (header["height"], header["width"], header["channels"])
    data = _read_payload(base.with_suffix(_PAYLOAD_SUFFIX), shape[0] * shape[1] * shape[2], shape)
    lo, hi = (float(v) for v in header["value_range"])
    if (lo, hi) != (0.0, 1.0):
        data = (data - lo) / (hi - lo)
    return SpectralCube(data)


def save_cube(cube: SpectralCube, path) -> None:
    """Write a cube pair; values are stored as-is with a [0, 1] declared range."""
    _write_pair(cube.data, path, "bands", (0.0, 1.0))


def load_abundance(path) -> AbundanceMap:
    base = _base_path(path)
    header = _read_header(base.with_suffix(_HEADER_SUFFIX))
    shape = (header["height"], header["width"], header["channels"])
    data = _read_payload(base.with_suffix(_PAYLOAD_SUFFIX), shape[0] * shape[1] * shape[2], shape)
    return AbundanceMap(data)


def save_abundance(amap: AbundanceMap, path) -> None:
    data = amap.data
    _write_pair(data, path, "channels", (min(data.min(), 0.0), max(data.max(), 1.0)))


def load_endmembers(path) -> EndmemberMatrix:
    path = Path(path)
    try:
        spectra = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except OSError:
        raise DataFormatError(f"missing endmember file {path}")
    except ValueError as e:
        raise DataFormatError(f"malformed endmember CSV {path}: {e}")
    return EndmemberMatrix(spectra)


def save_endmembers(endmembers: EndmemberMatrix, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # %.17g round-trips float64 exactly
    np.savetxt(path, endmembers.spectra, delimiter=",", fmt="%.17g")
