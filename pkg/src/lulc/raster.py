"""Georeferenced raster data model.

A ``RasterGrid`` holds band-sequential pixels (shape ``bands x height x width``)
plus a GDAL-ordered geotransform::

    (origin_x, pixel_width, row_rot, origin_y, col_rot, pixel_height)
    x = origin_x + col * pixel_width + row * row_rot
    y = origin_y + col * col_rot + row * pixel_height

Grids are immutable; the pixel array is marked read-only on construction so
they can be shared across worker threads.

Polygon rasterization uses pixel centers with the even-odd rule. Centers lying
exactly on an edge follow the half-open crossing convention: an edge crossing
counts when ``min(y0, y1) <= y < max(y0, y1)`` and the crossing lies strictly to
the right of the center. In practice a center on a left edge is inside, a
center on a right edge is outside, bottom edges (smaller y) are inside and top
edges are outside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from lulc.errors import ConfigurationError, ValidationError

DTYPES = {"f32": np.dtype("float32"), "u16": np.dtype("uint16"), "u8": np.dtype("uint8")}
DTYPE_CODES = {v: k for k, v in DTYPES.items()}

CLASS_NODATA = 0


@dataclass(frozen=True)
class ClassLegend:
    """Ordered ``(class_id, name)`` pairs."""

    entries: tuple[tuple[int, str], ...]

    def __post_init__(self):
        entries = tuple((int(i), str(n)) for i, n in self.entries)
        if not entries:
            raise ValidationError("legend must have at least one class")
        ids = [i for i, _ in entries]
        names = [n for _, n in entries]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate class ids in legend: {ids}")
        if any(not n.strip() for n in names):
            raise ValidationError("legend class names must be nonempty")
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate class names in legend: {names}")
        for i in ids:
            if not 0 <= i <= 255:
                raise ValidationError(f"class id {i} does not fit a uint8 class map")
        object.__setattr__(self, "entries", entries)

    @property
    def ids(self) -> list[int]:
        return [i for i, _ in self.entries]

    @property
    def names(self) -> list[str]:
        return [n for _, n in self.entries]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, class_id) -> bool:
        return int(class_id) in self.ids

    def index_of(self, class_id: int) -> int:
        try:
            return self.ids.index(int(class_id))
        except ValueError:
            raise ValidationError(f"class id {class_id} not in legend") from None

    def name_of(self, class_id: int) -> str:
        return self.entries[self.index_of(class_id)][1]

    def id_of(self, name: str) -> int:
        for i, n in self.entries:
            if n.lower() == name.lower():
                return i
        raise ValidationError(f"class {name!r} not in legend")

    def resolve(self, ref) -> int:
        """Accept either a class id or a class name."""
        if isinstance(ref, str) and not ref.strip().lstrip("-").isdigit():
            return self.id_of(ref)
        class_id = int(ref)
        self.index_of(class_id)
        return class_id


CANONICAL_LEGEND = ClassLegend(
    (
        (1, "Water"),
        (2, "Trees"),
        (3, "Crops"),
        (4, "Built Area"),
        (5, "Bare Ground"),
        (6, "Rangeland"),
    )
)

WATER, TREES, CROPS, BUILT_AREA, BARE_GROUND, RANGELAND = CANONICAL_LEGEND.ids


def _check_geotransform(gt) -> tuple[float, ...]:
    gt = tuple(float(v) for v in gt)
    if len(gt) != 6:
        raise ValidationError(f"geotransform needs 6 coefficients, got {len(gt)}")
    if not all(math.isfinite(v) for v in gt):
        raise ValidationError("geotransform coefficients must be finite")
    if gt[1] == 0 or gt[5] == 0:
        raise ValidationError("pixel_width and pixel_height must be nonzero")
    return gt


def _check_nodata(nodata, dtype: np.dtype):
    if nodata is None:
        return None
    if dtype.kind == "f":
        value = float(nodata)
        if not math.isfinite(value):
            raise ValidationError("nodata must be finite")
        # store exactly what a float32 pixel can hold
        return float(np.float32(value))
    value = float(nodata)
    info = np.iinfo(dtype)
    if value != int(value) or not info.min <= value <= info.max:
        raise ValidationError(f"nodata {nodata} outside {dtype} range")
    return int(value)


@dataclass(frozen=True, eq=False)
class RasterGrid:
    """Multiband georeferenced pixel array.

    ``data`` may be given as ``(height, width)`` for a single band or
    ``(bands, height, width)``. Supported dtypes are float32, uint16 and uint8.
    """

    data: np.ndarray
    geotransform: tuple[float, ...]
    crs_id: str = ""
    nodata: float | int | None = None
    band_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[np.newaxis]
        if data.ndim != 3:
            raise ValidationError(f"raster data must be 2-D or 3-D, got {data.ndim}-D")
        dtype = data.dtype.newbyteorder("=")
        if dtype not in DTYPE_CODES:
            raise ValidationError(f"unsupported dtype {data.dtype}; expected float32, uint16 or uint8")
        if min(data.shape) < 1:
            raise ValidationError(f"raster dimensions must be positive, got {data.shape}")
        data = np.array(data, dtype=dtype, order="C", copy=True)
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "geotransform", _check_geotransform(self.geotransform))
        object.__setattr__(self, "crs_id", str(self.crs_id))
        object.__setattr__(self, "nodata", _check_nodata(self.nodata, dtype))
        names = tuple(str(n) for n in self.band_names) or tuple(
            f"band{i + 1}" for i in range(data.shape[0])
        )
        if len(names) != data.shape[0]:
            raise ValidationError(f"{len(names)} band names for {data.shape[0]} bands")
        object.__setattr__(self, "band_names", names)

    @property
    def band_count(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def dtype_code(self) -> str:
        return DTYPE_CODES[self.data.dtype]

    @property
    def pixel_area(self) -> float:
        """Area of one pixel in squared CRS units (|determinant| of the transform)."""
        _, pw, rr, _, cr, ph = self.geotransform
        return abs(pw * ph - rr * cr)

    def band(self, index: int) -> RasterGrid:
        """Single-band view of band ``index`` (0-based)."""
        if not 0 <= index < self.band_count:
            raise IndexError(f"band {index} out of range for {self.band_count} bands")
        return RasterGrid(
            self.data[index],
            self.geotransform,
            self.crs_id,
            self.nodata,
            (self.band_names[index],),
        )

    def valid_mask(self) -> np.ndarray:
        """True where every band holds a real observation."""
        mask = np.ones((self.height, self.width), dtype=bool)
        for b in range(self.band_count):
            band = self.data[b]
            if self.nodata is not None:
                mask &= band != self.nodata
            if band.dtype.kind == "f":
                mask &= ~np.isnan(band)
        return mask

    def same_geometry(self, other: RasterGrid) -> bool:
        return (
            self.width == other.width
            and self.height == other.height
            and self.geotransform == other.geotransform
            and self.crs_id == other.crs_id
        )

    def require_same_geometry(self, other: RasterGrid, what: str = "rasters"):
        if self.crs_id != other.crs_id:
            raise ValidationError(f"{what}: CRS mismatch ({self.crs_id!r} vs {other.crs_id!r})")
        if not self.same_geometry(other):
            raise ValidationError(f"{what}: grid geometry mismatch")

    def __eq__(self, other):
        if not isinstance(other, RasterGrid):
            return NotImplemented
        return (
            self.same_geometry(other)
            and self.band_count == other.band_count
            and self.dtype == other.dtype
            and self.nodata == other.nodata
            and self.band_names == other.band_names
            and self.data.tobytes() == other.data.tobytes()
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ClassMap:
    """Single-band uint8 categorical raster plus its legend."""

    grid: RasterGrid
    legend: ClassLegend = CANONICAL_LEGEND

    def __post_init__(self):
        g = self.grid
        if g.band_count != 1 or g.dtype != np.uint8:
            raise ValidationError("class map grid must be a single uint8 band")
        counts = np.bincount(g.data.ravel(), minlength=256)
        allowed = set(self.legend.ids)
        if g.nodata is not None:
            allowed.add(int(g.nodata))
        stray = [v for v in np.flatnonzero(counts) if int(v) not in allowed]
        if stray:
            raise ValidationError(f"class map values not in legend: {[int(v) for v in stray]}")

    @classmethod
    def from_array(
        cls,
        classes: np.ndarray,
        geotransform,
        crs_id: str = "",
        legend: ClassLegend = CANONICAL_LEGEND,
        nodata: int | None = CLASS_NODATA,
    ) -> ClassMap:
        grid = RasterGrid(np.asarray(classes, dtype=np.uint8), geotransform, crs_id, nodata, ("class",))
        return cls(grid, legend)

    @property
    def classes(self) -> np.ndarray:
        """The ``(height, width)`` class-id array (read-only)."""
        return self.grid.data[0]

    def valid_mask(self) -> np.ndarray:
        return self.grid.valid_mask()

    def histogram(self) -> dict[int, int]:
        """Pixel count per legend class, nodata excluded."""
        counts = np.bincount(self.classes[self.valid_mask()], minlength=256)
        return {c: int(counts[c]) for c in self.legend.ids}

    def __eq__(self, other):
        if not isinstance(other, ClassMap):
            return NotImplemented
        return self.grid == other.grid and self.legend == other.legend

    __hash__ = None


@dataclass(frozen=True, eq=False)
class RegionPolygon:
    """Named polygon; first ring is the outer boundary, the rest are holes."""

    region_id: str
    name: str
    rings: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.rings:
            raise ValidationError(f"region {self.region_id!r} has no rings")
        rings = []
        for k, ring in enumerate(self.rings):
            arr = np.array(ring, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] != 2:
                raise ValidationError(f"region {self.region_id!r} ring {k}: expected (x, y) pairs")
            if len(arr) < 4:
                raise ValidationError(
                    f"region {self.region_id!r} ring {k}: {len(arr)} vertices, need at least 4"
                )
            if not np.array_equal(arr[0], arr[-1]):
                raise ValidationError(f"region {self.region_id!r} ring {k} is not closed")
            if not np.isfinite(arr).all():
                raise ValidationError(f"region {self.region_id!r} ring {k} has non-finite vertices")
            arr.flags.writeable = False
            rings.append(arr)
        object.__setattr__(self, "region_id", str(self.region_id))
        object.__setattr__(self, "name", str(self.name))
        object.__setattr__(self, "rings", tuple(rings))

    @classmethod
    def rectangle(cls, region_id: str, name: str, x0: float, y0: float, x1: float, y1: float):
        ring = [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]
        return cls(region_id, name, (np.array(ring),))

    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Concatenated (x0, y0, x1, y1) arrays over all rings."""
        x0 = np.concatenate([r[:-1, 0] for r in self.rings])
        y0 = np.concatenate([r[:-1, 1] for r in self.rings])
        x1 = np.concatenate([r[1:, 0] for r in self.rings])
        y1 = np.concatenate([r[1:, 1] for r in self.rings])
        return x0, y0, x1, y1


def pixel_to_map(grid: RasterGrid, col: int, row: int) -> tuple[float, float]:
    """Map coordinates of the center of pixel ``(col, row)``."""
    if not (0 <= col < grid.width and 0 <= row < grid.height):
        raise IndexError(f"pixel ({col}, {row}) outside {grid.width}x{grid.height} raster")
    ox, pw, rr, oy, cr, ph = grid.geotransform
    x = ox + (col + 0.5) * pw + (row + 0.5) * rr
    y = oy + (col + 0.5) * cr + (row + 0.5) * ph
    return x, y


def pixel_centers(grid: RasterGrid, cols, rows) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``pixel_to_map`` without bounds checks (bit-identical results)."""
    ox, pw, rr, oy, cr, ph = grid.geotransform
    cols = np.asarray(cols, dtype=np.float64) + 0.5
    rows = np.asarray(rows, dtype=np.float64) + 0.5
    return ox + cols * pw + rows * rr, oy + cols * cr + rows * ph


def _inverse(grid: RasterGrid):
    ox, pw, rr, oy, cr, ph = grid.geotransform
    det = pw * ph - rr * cr
    if det == 0 or not math.isfinite(det):
        raise ConfigurationError(f"geotransform {grid.geotransform} is not invertible")
    return ox, oy, pw, rr, cr, ph, det


def map_to_pixel(grid: RasterGrid, x: float, y: float) -> tuple[int, int] | None:
    """Pixel ``(col, row)`` containing map point ``(x, y)``; ``None`` when off-raster."""
    ox, oy, pw, rr, cr, ph, det = _inverse(grid)
    dx, dy = x - ox, y - oy
    col = math.floor((ph * dx - rr * dy) / det)
    row = math.floor((pw * dy - cr * dx) / det)
    if 0 <= col < grid.width and 0 <= row < grid.height:
        return col, row
    return None


def map_to_pixel_array(grid: RasterGrid, xs, ys) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ``map_to_pixel``: returns ``(cols, rows, inside)``."""
    ox, oy, pw, rr, cr, ph, det = _inverse(grid)
    dx = np.asarray(xs, dtype=np.float64) - ox
    dy = np.asarray(ys, dtype=np.float64) - oy
    cols = np.floor((ph * dx - rr * dy) / det)
    rows = np.floor((pw * dy - cr * dx) / det)
    inside = (cols >= 0) & (cols < grid.width) & (rows >= 0) & (rows < grid.height)
    cols = np.where(inside, cols, -1).astype(np.int64)
    rows = np.where(inside, rows, -1).astype(np.int64)
    return cols, rows, inside


def rasterize_polygon(poly: RegionPolygon, geometry_of: RasterGrid) -> np.ndarray:
    """Boolean ``(height, width)`` mask of pixels whose center lies in ``poly``."""
    grid = geometry_of
    x0, y0, x1, y1 = poly.edges()
    keep = y0 != y1  # horizontal edges never cross a scanline
    x0, y0, x1, y1 = x0[keep], y0[keep], x1[keep], y1[keep]
    mask = np.zeros((grid.height, grid.width), dtype=bool)
    if len(x0) == 0:
        return mask
    if grid.geotransform[4] == 0:
        _scanline_fill(mask, grid, x0, y0, x1, y1)
    else:
        _pointwise_fill(mask, grid, x0, y0, x1, y1)
    return mask


def _scanline_fill(mask, grid, x0, y0, x1, y1):
    # col_rot == 0: every pixel center in a row shares one y
    cols = np.arange(grid.width)
    ymin, ymax = min(y0.min(), y1.min()), max(y0.max(), y1.max())
    for row in range(grid.height):
        xc, yc = pixel_centers(grid, cols, np.full(grid.width, row))
        yc = yc[0]
        if yc < ymin or yc >= ymax:
            continue
        active = (y0 > yc) != (y1 > yc)
        if not active.any():
            continue
        xi = np.sort((x1[active] - x0[active]) * (yc - y0[active]) / (y1[active] - y0[active]) + x0[active])
        right_of = len(xi) - np.searchsorted(xi, xc, side="right")
        mask[row] = (right_of & 1).astype(bool)


def _pointwise_fill(mask, grid, x0, y0, x1, y1, chunk_rows: int = 64):
    cols = np.arange(grid.width)
    for start in range(0, grid.height, chunk_rows):
        rows = np.arange(start, min(start + chunk_rows, grid.height))
        cc, rr = np.meshgrid(cols, rows)
        xc, yc = pixel_centers(grid, cc, rr)
        inside = np.zeros(xc.shape, dtype=bool)
        for a, b, c, d in zip(x0, y0, x1, y1):
            crosses = (b > yc) != (d > yc)
            with np.errstate(divide="ignore", invalid="ignore"):
                xi = (c - a) * (yc - b) / (d - b) + a
            inside ^= crosses & (xc < xi)
        mask[rows[0] : rows[-1] + 1] = inside


def union_mask(polys: Iterable[RegionPolygon], grid: RasterGrid) -> np.ndarray:
    mask = np.zeros((grid.height, grid.width), dtype=bool)
    for p in polys:
        mask |= rasterize_polygon(p, grid)
    return mask


def north_up(origin_x: float, origin_y: float, cell: float) -> tuple[float, ...]:
    """Geotransform of an unrotated north-up grid with square cells."""
    return (float(origin_x), float(cell), 0.0, float(origin_y), 0.0, -float(cell))


def regions_by_id(regions: Sequence[RegionPolygon]) -> dict[str, RegionPolygon]:
    out = {}
    for r in regions:
        if r.region_id in out:
            raise ValidationError(f"duplicate region id {r.region_id!r}")
        out[r.region_id] = r
    return out
