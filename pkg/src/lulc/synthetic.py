"""Synthetic multispectral scenes and yearly class-map series with known truth.

A scene is a stack of labelled rectangles painted in order (later rectangles
win). Each painted pixel draws its band values from the class's Gaussian with
diagonal noise, using the SplitMix64 normal stream so results are identical on
every platform.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

from lulc.errors import FormatError, ValidationError
from lulc.formats import legend_from_json, legend_to_json
from lulc.raster import (
    CANONICAL_LEGEND,
    CLASS_NODATA,
    ClassLegend,
    ClassMap,
    RasterGrid,
    RegionPolygon,
    north_up,
)
from lulc.rng import derive_seed, normal_stream

log = logging.getLogger(__name__)

SCENE_NODATA = -9999.0
_CHUNK = 1 << 20


@dataclass(frozen=True)
class Rect:
    """Half-open pixel rectangle ``[col0, col1) x [row0, row1)``."""

    class_id: int
    col0: int
    row0: int
    col1: int
    row1: int

    @property
    def area(self) -> int:
        return max(0, self.col1 - self.col0) * max(0, self.row1 - self.row0)

    def grown(self, margin: int, width: int, height: int) -> tuple[Rect, bool]:
        c0, r0 = self.col0 - margin, self.row0 - margin
        c1, r1 = self.col1 + margin, self.row1 + margin
        clipped = Rect(self.class_id, max(c0, 0), max(r0, 0), min(c1, width), min(r1, height))
        return clipped, (c0, r0, c1, r1) != (clipped.col0, clipped.row0, clipped.col1, clipped.row1)


@dataclass(frozen=True)
class Signature:
    mean: tuple[float, ...]
    sigma: tuple[float, ...]


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    bands: int
    signatures: dict[int, Signature]
    layout: tuple[Rect, ...]
    seed: int = 0
    legend: ClassLegend = CANONICAL_LEGEND
    origin: tuple[float, float] = (500000.0, 2600000.0)
    cell: float = 10.0
    crs_id: str = "EPSG:32640"
    band_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.bands < 1:
            raise ValidationError("scene width, height and bands must be positive")
        for c, sig in self.signatures.items():
            if c not in self.legend:
                raise ValidationError(f"signature class {c} not in legend")
            if len(sig.mean) != self.bands or len(sig.sigma) != self.bands:
                raise ValidationError(
                    f"signature of class {c} has {len(sig.mean)}/{len(sig.sigma)} values for {self.bands} bands"
                )
            if any(s < 0 for s in sig.sigma):
                raise ValidationError(f"signature of class {c} has negative sigma")
        for r in self.layout:
            if r.class_id not in self.signatures:
                raise ValidationError(f"layout class {r.class_id} has no signature")
            if not (0 <= r.col0 < r.col1 <= self.width and 0 <= r.row0 < r.row1 <= self.height):
                raise ValidationError(f"rectangle {r} outside the {self.width}x{self.height} scene")
        if self.band_names and len(self.band_names) != self.bands:
            raise ValidationError("band_names length differs from bands")

    @property
    def geotransform(self) -> tuple[float, ...]:
        return north_up(self.origin[0], self.origin[1], self.cell)

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "bands": self.bands,
            "seed": self.seed,
            "origin": list(self.origin),
            "cell": self.cell,
            "crs_id": self.crs_id,
            "band_names": list(self.band_names),
            "legend": legend_to_json(self.legend),
            "signatures": [
                {"class_id": c, "mean": list(s.mean), "sigma": list(s.sigma)}
                for c, s in sorted(self.signatures.items())
            ],
            "layout": [
                {"class_id": r.class_id, "col0": r.col0, "row0": r.row0, "col1": r.col1, "row1": r.row1}
                for r in self.layout
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> SceneSpec:
        try:
            legend = legend_from_json(doc["legend"]) if "legend" in doc else CANONICAL_LEGEND
            return cls(
                width=int(doc["width"]),
                height=int(doc["height"]),
                bands=int(doc["bands"]),
                signatures={
                    int(e["class_id"]): Signature(tuple(map(float, e["mean"])), tuple(map(float, e["sigma"])))
                    for e in doc["signatures"]
                },
                layout=tuple(
                    Rect(int(e["class_id"]), int(e["col0"]), int(e["row0"]), int(e["col1"]), int(e["row1"]))
                    for e in doc["layout"]
                ),
                seed=int(doc.get("seed", 0)),
                legend=legend,
                origin=tuple(map(float, doc.get("origin", (500000.0, 2600000.0)))),
                cell=float(doc.get("cell", 10.0)),
                crs_id=str(doc.get("crs_id", "EPSG:32640")),
                band_names=tuple(doc.get("band_names", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise FormatError(f"malformed scene spec: {exc}") from exc


def paint(spec: SceneSpec, layout: Sequence[Rect] | None = None) -> np.ndarray:
    """Class-id array from painting ``layout`` in order; unpainted pixels are nodata."""
    classes = np.full((spec.height, spec.width), CLASS_NODATA, dtype=np.uint8)
    for r in spec.layout if layout is None else layout:
        classes[r.row0 : r.row1, r.col0 : r.col1] = r.class_id
    return classes


def _render(spec: SceneSpec, classes: np.ndarray) -> RasterGrid:
    means = np.zeros((256, spec.bands))
    sigmas = np.zeros((256, spec.bands))
    for c, s in spec.signatures.items():
        means[c] = s.mean
        sigmas[c] = s.sigma
    flat = classes.ravel()
    painted = flat != CLASS_NODATA
    n = flat.size
    data = np.empty((spec.bands, n), dtype=np.float32)
    seed = derive_seed(spec.seed, 1)
    for b in range(spec.bands):
        for start in range(0, n, _CHUNK):
            stop = min(start + _CHUNK, n)
            cls = flat[start:stop]
            noise = normal_stream(seed, b * n + start, stop - start)
            vals = means[cls, b] + sigmas[cls, b] * noise
            data[b, start:stop] = np.where(painted[start:stop], vals, SCENE_NODATA)
    return RasterGrid(
        data.reshape(spec.bands, spec.height, spec.width),
        spec.geotransform,
        spec.crs_id,
        SCENE_NODATA,
        spec.band_names,
    )


def generate_scene(spec: SceneSpec) -> tuple[RasterGrid, ClassMap]:
    """Noisy multiband raster plus its ground-truth class map."""
    classes = paint(spec)
    truth = ClassMap.from_array(classes, spec.geotransform, spec.crs_id, spec.legend)
    return _render(spec, classes), truth


@dataclass(frozen=True)
class GrowthRule:
    """Grow every rectangle of ``class_id`` by ``margin`` pixels per side per year."""

    class_id: int
    margin: int = 1
    start_year: int = 2017

    def __post_init__(self):
        if self.margin < 0:
            raise ValidationError("growth margin must be non-negative")


def grown_layout(spec: SceneSpec, rule: GrowthRule, step: int, clipped: list | None = None) -> list[Rect]:
    """Layout for year ``step``: other rectangles in order, grown ones painted last."""
    others = [r for r in spec.layout if r.class_id != rule.class_id]
    grown = []
    for r in spec.layout:
        if r.class_id != rule.class_id:
            continue
        g, was_clipped = r.grown(rule.margin * step, spec.width, spec.height)
        if was_clipped and clipped is not None:
            clipped.append((rule.start_year + step, r, g))
        grown.append(g)
    return others + grown


def generate_growth_series(
    base: SceneSpec,
    years: int,
    rule: GrowthRule,
    clipped: list | None = None,
) -> list[tuple[int, ClassMap]]:
    """Yearly ground-truth maps where ``rule.class_id`` rectangles expand each year.

    Rectangles of the growing class are painted after all others in every
    year, so their pixel count is exactly the union of the grown rectangles.
    Growth past the raster edge is clipped; clipping events are logged and
    appended to ``clipped`` when given.
    """
    if years < 1:
        raise ValidationError("years must be >= 1")
    if rule.class_id not in base.legend:
        raise ValidationError(f"growth class {rule.class_id} not in legend")
    notes: list = []
    out = []
    for k in range(years):
        layout = grown_layout(base, rule, k, notes)
        cmap = ClassMap.from_array(paint(base, layout), base.geotransform, base.crs_id, base.legend)
        out.append((rule.start_year + k, cmap))
    for year, orig, g in notes:
        log.warning("year %d: rectangle %s clipped to %s at the raster edge", year, orig, g)
    if clipped is not None:
        clipped.extend(notes)
    return out


def separated_signatures(
    class_ids: Sequence[int],
    bands: int,
    sigma: float = 0.01,
    separation: float = 6.0,
    base: float = 0.1,
) -> dict[int, Signature]:
    """Signatures whose means differ by at least ``separation * sigma`` in every band."""
    k = len(class_ids)
    step = separation * sigma
    return {
        c: Signature(
            tuple(base + step * ((i + b) % k) for b in range(bands)),
            tuple(sigma for _ in range(bands)),
        )
        for i, c in enumerate(class_ids)
    }


def tiled_layout(class_ids: Sequence[int], width: int, height: int, tiles: int = 4) -> tuple[Rect, ...]:
    """Checkerboard-like layout of ``tiles x tiles`` blocks cycling through classes."""
    out = []
    for ty in range(tiles):
        for tx in range(tiles):
            c = class_ids[(ty * tiles + tx + ty) % len(class_ids)]
            out.append(
                Rect(
                    c,
                    tx * width // tiles,
                    ty * height // tiles,
                    (tx + 1) * width // tiles,
                    (ty + 1) * height // tiles,
                )
            )
    return tuple(out)


def load_governorates() -> list[dict]:
    """Governorate metadata (name, capital, 2020 population, area, wilayats)."""
    text = resources.files("lulc").joinpath("data/governorates.json").read_text(encoding="utf-8")
    return json.loads(text)


def strip_regions(spec: SceneSpec, names: Sequence[str]) -> list[RegionPolygon]:
    """Vertical strips of equal width, one region per name, in map coordinates."""
    n = len(names)
    if n < 1 or spec.width < n:
        raise ValidationError(f"cannot cut {spec.width} columns into {n} strips")
    ox, oy = spec.origin
    top, bottom = oy, oy - spec.height * spec.cell
    out = []
    for i, name in enumerate(names):
        c0, c1 = i * spec.width // n, (i + 1) * spec.width // n
        out.append(
            RegionPolygon.rectangle(f"R{i + 1:02d}", name, ox + c0 * spec.cell, bottom, ox + c1 * spec.cell, top)
        )
    return out
