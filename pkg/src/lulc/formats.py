"""Readers and writers for the on-disk formats.

Raster container
    ``<base>.lrh``  canonical JSON header (sorted keys, UTF-8, LF, trailing newline)
    ``<base>.lrd``  raw little-endian samples, band-sequential, row-major, no padding

Samples CSV
    header ``x,y,class_id``; one point per line; no quoting.

Regions JSON
    ``[{"region_id": ..., "name": ..., "rings": [[[x, y], ...], ...]}, ...]``

Legend JSON
    ``[{"class_id": 1, "name": "Water"}, ...]``
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from lulc.errors import CorruptionError, FormatError, RasterIOError, ValidationError
from lulc.raster import CANONICAL_LEGEND, DTYPES, ClassLegend, ClassMap, RasterGrid, RegionPolygon

log = logging.getLogger(__name__)

HEADER_SUFFIX = ".lrh"
DATA_SUFFIX = ".lrd"
HEADER_KEYS = ("band_count", "band_names", "crs_id", "dtype", "geotransform", "height", "nodata", "width")
SAMPLES_HEADER = "x,y,class_id"


@dataclass(frozen=True)
class LabeledSample:
    x: float
    y: float
    class_id: int


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _write_text(path: Path, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise RasterIOError(path, exc.strerror or exc) from exc


def _read_text(path: Path) -> str:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return fh.read()
    except OSError as exc:
        raise RasterIOError(path, exc.strerror or exc) from exc
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not UTF-8 text") from exc


def raster_paths(path) -> tuple[Path, Path]:
    """Header and data paths for a raster base path (suffix optional)."""
    p = Path(path)
    if p.suffix in (HEADER_SUFFIX, DATA_SUFFIX):
        p = p.with_suffix("")
    return p.with_name(p.name + HEADER_SUFFIX), p.with_name(p.name + DATA_SUFFIX)


def raster_header(grid: RasterGrid) -> dict:
    nodata = grid.nodata
    return {
        "band_count": grid.band_count,
        "band_names": list(grid.band_names),
        "crs_id": grid.crs_id,
        "dtype": grid.dtype_code,
        "geotransform": list(grid.geotransform),
        "height": grid.height,
        "nodata": nodata,
        "width": grid.width,
    }


def write_raster(grid: RasterGrid, path) -> tuple[Path, Path]:
    header_path, data_path = raster_paths(path)
    payload = grid.data.astype(grid.dtype.newbyteorder("<"), copy=False).tobytes(order="C")
    _write_text(header_path, canonical_json(raster_header(grid)))
    try:
        data_path.write_bytes(payload)
    except OSError as exc:
        raise RasterIOError(data_path, exc.strerror or exc) from exc
    return header_path, data_path


def _parse_header(text: str, where) -> dict:
    try:
        header = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{where}: malformed JSON header ({exc.msg})") from exc
    if not isinstance(header, dict):
        raise FormatError(f"{where}: header must be a JSON object")
    missing = [k for k in HEADER_KEYS if k not in header]
    if missing:
        raise FormatError(f"{where}: header missing keys {missing}")
    if header["dtype"] not in DTYPES:
        raise FormatError(f"{where}: unknown dtype {header['dtype']!r}")
    for key in ("width", "height", "band_count"):
        v = header[key]
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise FormatError(f"{where}: {key} must be a positive integer")
    names = header["band_names"]
    if not isinstance(names, list) or len(names) != header["band_count"]:
        raise FormatError(f"{where}: band_names must list {header['band_count']} names")
    gt = header["geotransform"]
    if not isinstance(gt, list) or len(gt) != 6 or not all(isinstance(v, (int, float)) for v in gt):
        raise FormatError(f"{where}: geotransform must be 6 numbers")
    if header["nodata"] is not None and not isinstance(header["nodata"], (int, float)):
        raise FormatError(f"{where}: nodata must be a number or null")
    if not isinstance(header["crs_id"], str):
        raise FormatError(f"{where}: crs_id must be a string")
    return header


def read_raster(path) -> RasterGrid:
    header_path, data_path = raster_paths(path)
    header = _parse_header(_read_text(header_path), header_path)
    dtype = DTYPES[header["dtype"]]
    shape = (header["band_count"], header["height"], header["width"])
    expected = int(np.prod(shape)) * dtype.itemsize
    try:
        payload = data_path.read_bytes()
    except OSError as exc:
        raise RasterIOError(data_path, exc.strerror or exc) from exc
    if len(payload) != expected:
        raise CorruptionError(f"{data_path}: {len(payload)} bytes, header implies {expected}")
    data = np.frombuffer(payload, dtype=dtype.newbyteorder("<")).reshape(shape)
    try:
        return RasterGrid(
            data.astype(dtype),
            header["geotransform"],
            header["crs_id"],
            header["nodata"],
            tuple(header["band_names"]),
        )
    except ValidationError as exc:
        raise FormatError(f"{header_path}: {exc}") from exc


def write_class_map(cmap: ClassMap, path):
    return write_raster(cmap.grid, path)


def read_class_map(path, legend: ClassLegend = CANONICAL_LEGEND) -> ClassMap:
    grid = read_raster(path)
    return ClassMap(grid, legend)


def _number(text: str, lineno: int, field: str, path) -> float:
    try:
        return float(text)
    except ValueError:
        raise FormatError(f"{path}: line {lineno}: {field} {text!r} is not a number") from None


def parse_samples(text: str, legend: ClassLegend = CANONICAL_LEGEND, where="<samples>") -> list[LabeledSample]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    lines = [ln[:-1] if ln.endswith("\r") else ln for ln in lines]
    if not lines or lines[0].strip() != SAMPLES_HEADER:
        raise FormatError(f"{where}: first line must be {SAMPLES_HEADER!r}")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise FormatError(f"{where}: line {lineno}: expected 3 fields, got {len(parts)}")
        x = _number(parts[0].strip(), lineno, "x", where)
        y = _number(parts[1].strip(), lineno, "y", where)
        raw_id = parts[2].strip()
        try:
            class_id = int(raw_id)
        except ValueError:
            raise FormatError(f"{where}: line {lineno}: class_id {raw_id!r} is not an integer") from None
        if class_id not in legend:
            raise ValidationError(f"{where}: line {lineno}: class id {class_id} not in legend")
        out.append(LabeledSample(x, y, class_id))
    return out


def read_samples(path, legend: ClassLegend = CANONICAL_LEGEND) -> list[LabeledSample]:
    return parse_samples(_read_text(Path(path)), legend, where=path)


def format_samples(samples: Iterable[LabeledSample]) -> str:
    rows = [SAMPLES_HEADER]
    rows += [f"{float(s.x)!r},{float(s.y)!r},{int(s.class_id)}" for s in samples]
    return "\n".join(rows) + "\n"


def write_samples(samples: Iterable[LabeledSample], path):
    _write_text(Path(path), format_samples(samples))


def parse_regions(obj, where="<regions>") -> list[RegionPolygon]:
    if not isinstance(obj, list):
        raise FormatError(f"{where}: regions document must be a JSON array")
    out = []
    for k, item in enumerate(obj):
        if not isinstance(item, dict) or not {"region_id", "name", "rings"} <= item.keys():
            raise FormatError(f"{where}: region {k} needs region_id, name and rings")
        rings = item["rings"]
        if not isinstance(rings, list) or not rings:
            raise ValidationError(f"{where}: region {item['region_id']!r} has empty rings")
        try:
            out.append(RegionPolygon(item["region_id"], item["name"], tuple(rings)))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise FormatError(f"{where}: region {item['region_id']!r}: {exc}") from exc
    return out


def read_regions(path) -> list[RegionPolygon]:
    text = _read_text(Path(path))
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed JSON ({exc.msg})") from exc
    return parse_regions(obj, where=path)


def write_regions(regions: Sequence[RegionPolygon], path):
    doc = [
        {"region_id": r.region_id, "name": r.name, "rings": [ring.tolist() for ring in r.rings]}
        for r in regions
    ]
    _write_text(Path(path), canonical_json(doc))


def legend_to_json(legend: ClassLegend) -> list[dict]:
    return [{"class_id": i, "name": n} for i, n in legend]


def legend_from_json(obj, where="<legend>") -> ClassLegend:
    if not isinstance(obj, list):
        raise FormatError(f"{where}: legend must be a JSON array")
    try:
        return ClassLegend(tuple((e["class_id"], e["name"]) for e in obj))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{where}: legend entries need class_id and name") from exc


def read_legend(path) -> ClassLegend:
    text = _read_text(Path(path))
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed JSON ({exc.msg})") from exc
    return legend_from_json(obj, where=path)


def write_legend(legend: ClassLegend, path):
    _write_text(Path(path), canonical_json(legend_to_json(legend)))


def read_json(path):
    text = _read_text(Path(path))
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed JSON ({exc.msg})") from exc


def write_json(obj, path):
    _write_text(Path(path), canonical_json(obj))


def read_text(path) -> str:
    return _read_text(Path(path))


def write_text(text: str, path):
    _write_text(Path(path), text)
