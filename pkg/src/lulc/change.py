"""Post-classification change detection and per-region class areas."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from lulc.errors import ValidationError
from lulc.raster import ClassLegend, ClassMap, RegionPolygon, rasterize_polygon, regions_by_id

log = logging.getLogger(__name__)

M2_PER_KM2 = 1e6
DEFAULT_FOCUS = ("Built Area", "Crops")


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Pixel counts from earlier class (row) to later class (column)."""

    legend: ClassLegend
    counts: np.ndarray
    pixel_area: float
    excluded_pixels: int = 0

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def area_km2(self) -> np.ndarray:
        return self.counts * self.pixel_area / M2_PER_KM2

    def diagonal_fraction(self) -> float:
        return float(np.trace(self.counts)) / self.total if self.total else 0.0


def _require_compatible(a: ClassMap, b: ClassMap, what: str):
    a.grid.require_same_geometry(b.grid, what)
    if a.legend != b.legend:
        raise ValidationError(f"{what}: legend mismatch")


def _class_lookup(legend: ClassLegend) -> np.ndarray:
    lookup = np.full(256, -1, dtype=np.int64)
    lookup[legend.ids] = np.arange(len(legend))
    return lookup


def transition_matrix(earlier: ClassMap, later: ClassMap) -> TransitionMatrix:
    """Cross-tabulate two maps; pixels nodata in either one are excluded."""
    _require_compatible(earlier, later, "transition_matrix")
    valid = earlier.valid_mask() & later.valid_mask()
    lookup = _class_lookup(earlier.legend)
    k = len(earlier.legend)
    a = lookup[earlier.classes[valid]]
    b = lookup[later.classes[valid]]
    counts = np.bincount(a * k + b, minlength=k * k).reshape(k, k)
    excluded = int(valid.size - valid.sum())
    if excluded:
        log.info("transition_matrix: %d pixels nodata in at least one map", excluded)
    return TransitionMatrix(earlier.legend, counts, earlier.grid.pixel_area, excluded)


def class_pixel_count(cmap: ClassMap, c: int) -> int:
    cmap.legend.index_of(c)
    return int(np.count_nonzero(cmap.classes[cmap.valid_mask()] == c))


def class_area(cmap: ClassMap, c: int) -> float:
    """Area of class ``c`` in km^2 (CRS units assumed to be metres)."""
    return class_pixel_count(cmap, c) * cmap.grid.pixel_area / M2_PER_KM2


def nodata_area(cmap: ClassMap) -> float:
    return int(np.count_nonzero(~cmap.valid_mask())) * cmap.grid.pixel_area / M2_PER_KM2


@dataclass(frozen=True)
class ZonalRow:
    region_id: str
    region_name: str
    year: int | None
    class_id: int
    class_name: str
    pixels: int
    area_km2: float


@dataclass
class ZonalAreaTable:
    rows: list[ZonalRow]
    region_pixels: dict[str, int]
    pixel_area: float
    warnings: list[str] = field(default_factory=list)

    def area(self, region_id: str, class_id: int, year: int | None = None) -> float:
        for r in self.rows:
            if r.region_id == region_id and r.class_id == class_id and r.year == year:
                return r.area_km2
        raise KeyError((region_id, class_id, year))

    def pixels(self, region_id: str, class_id: int, year: int | None = None) -> int:
        for r in self.rows:
            if r.region_id == region_id and r.class_id == class_id and r.year == year:
                return r.pixels
        raise KeyError((region_id, class_id, year))


def _region_masks(regions: Sequence[RegionPolygon], cmap: ClassMap, workers: int) -> list[np.ndarray]:
    regions_by_id(regions)
    if workers > 1 and len(regions) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda r: rasterize_polygon(r, cmap.grid), regions))
    return [rasterize_polygon(r, cmap.grid) for r in regions]


def _counts_in(cmap: ClassMap, mask: np.ndarray) -> np.ndarray:
    sel = mask & cmap.valid_mask()
    return np.bincount(cmap.classes[sel], minlength=256)


def zonal_class_area(
    cmap: ClassMap,
    regions: Sequence[RegionPolygon],
    year: int | None = None,
    workers: int = 1,
    masks: list[np.ndarray] | None = None,
) -> ZonalAreaTable:
    """Class areas inside each region; overlapping regions are counted independently."""
    if masks is None:
        masks = _region_masks(regions, cmap, workers)
    rows, region_pixels, warnings = [], {}, []
    area = cmap.grid.pixel_area
    for region, mask in zip(regions, masks):
        n = int(mask.sum())
        region_pixels[region.region_id] = n
        if n == 0:
            msg = f"region {region.region_id!r} ({region.name}) covers no pixels"
            log.warning(msg)
            warnings.append(msg)
        counts = _counts_in(cmap, mask)
        for c, name in cmap.legend:
            rows.append(
                ZonalRow(region.region_id, region.name, year, c, name, int(counts[c]), int(counts[c]) * area / M2_PER_KM2)
            )
    return ZonalAreaTable(rows, region_pixels, area, warnings)


def percent_change(start: float, end: float) -> float | None:
    """``100 * (end - start) / start``; ``None`` when the baseline is zero."""
    if start < 0 or end < 0:
        raise ValidationError("areas must be non-negative")
    if start == 0:
        return None
    return 100.0 * (end - start) / start


@dataclass(frozen=True)
class ChangeRow:
    region_id: str
    region_name: str
    class_id: int
    class_name: str
    years: tuple[int, ...]
    pixels: tuple[int, ...]
    areas_km2: tuple[float, ...]
    delta_km2: float
    pct_change: float | None

    @property
    def baseline_km2(self) -> float:
        return self.areas_km2[0]


def change_series(
    maps: Sequence[tuple[int, ClassMap]],
    regions: Sequence[RegionPolygon],
    focus_classes: Sequence | None = None,
    workers: int = 1,
) -> list[ChangeRow]:
    """Per region and focus class: area by year, first-to-last delta and % change.

    ``focus_classes`` accepts ids or legend names and defaults to built-up area
    and crops.
    """
    if len(maps) < 2:
        raise ValidationError("change_series needs at least two yearly maps")
    years = [int(y) for y, _ in maps]
    if len(set(years)) != len(years):
        raise ValidationError(f"duplicate years in series: {years}")
    if any(b <= a for a, b in zip(years, years[1:])):
        raise ValidationError(f"years must be strictly increasing: {years}")
    first = maps[0][1]
    for _, m in maps[1:]:
        _require_compatible(first, m, "change_series")
    legend = first.legend
    focus = [legend.resolve(c) for c in (focus_classes or DEFAULT_FOCUS)]
    masks = _region_masks(regions, first, workers)
    area = first.grid.pixel_area
    per_year = [[_counts_in(m, mask) for _, m in maps] for mask in masks]
    rows = []
    for region, counts in zip(regions, per_year):
        for c in focus:
            pix = tuple(int(cnt[c]) for cnt in counts)
            areas = tuple(p * area / M2_PER_KM2 for p in pix)
            rows.append(
                ChangeRow(
                    region.region_id,
                    region.name,
                    c,
                    legend.name_of(c),
                    tuple(years),
                    pix,
                    areas,
                    areas[-1] - areas[0],
                    percent_change(areas[0], areas[-1]),
                )
            )
    return rows
