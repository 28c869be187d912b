"""Stratified random validation points drawn from a class map.

For each class, in legend order, the pixel indices of that class are listed in
row-major order and ``n_per_class`` of them are drawn without replacement by a
partial Fisher-Yates shuffle. A single SplitMix64 stream seeded with the plan
seed drives every class in turn, so output depends only on (map, plan).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lulc.errors import SamplingError, ValidationError
from lulc.formats import LabeledSample
from lulc.raster import ClassLegend, ClassMap, map_to_pixel_array, pixel_centers
from lulc.rng import MASK64, SplitMix64


@dataclass(frozen=True)
class SamplePlan:
    n_per_class: int
    seed: int
    legend: ClassLegend

    def __post_init__(self):
        if int(self.n_per_class) < 1:
            raise ValidationError(f"n_per_class must be >= 1, got {self.n_per_class}")
        if not 0 <= int(self.seed) <= MASK64:
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


def _draw(rng: SplitMix64, population: np.ndarray, n: int) -> np.ndarray:
    m = len(population)
    moved: dict[int, int] = {}
    picks = np.empty(n, dtype=np.int64)
    for i in range(n):
        j = i + rng.bounded(m - i)
        at_i, at_j = moved.get(i, i), moved.get(j, j)
        moved[j] = at_i
        picks[i] = population[at_j]
    return picks


def stratified_random_points(
    cmap: ClassMap,
    plan: SamplePlan,
    exclude: np.ndarray | None = None,
) -> list[LabeledSample]:
    """``plan.n_per_class`` pixel-center points per legend class.

    ``exclude`` is an optional boolean ``(height, width)`` mask of pixels that
    may not be drawn (for example pixels already used for training).
    """
    valid = cmap.valid_mask()
    if not valid.any():
        raise ValidationError("class map has no valid pixels")
    for c in plan.legend.ids:
        if c not in cmap.legend:
            raise ValidationError(f"plan class {c} is not in the map legend")
    eligible = valid.ravel()
    if exclude is not None:
        exclude = np.asarray(exclude, dtype=bool)
        if exclude.shape != valid.shape:
            raise ValidationError("exclude mask shape does not match the map")
        eligible = eligible & ~exclude.ravel()
    flat = cmap.classes.ravel()
    rng = SplitMix64(plan.seed)
    out = []
    width = cmap.grid.width
    for c, name in plan.legend:
        population = np.flatnonzero((flat == c) & eligible)
        if len(population) < plan.n_per_class:
            raise SamplingError(
                f"class {c} ({name}) has {len(population)} eligible pixels, "
                f"{plan.n_per_class} requested"
            )
        picks = _draw(rng, population, int(plan.n_per_class))
        xs, ys = pixel_centers(cmap.grid, picks % width, picks // width)
        out.extend(LabeledSample(float(x), float(y), c) for x, y in zip(xs, ys))
    return out


def sample_mask(cmap: ClassMap, samples) -> np.ndarray:
    """Boolean mask of the pixels holding ``samples`` (off-raster ones ignored)."""
    mask = np.zeros((cmap.grid.height, cmap.grid.width), dtype=bool)
    if not samples:
        return mask
    cols, rows, inside = map_to_pixel_array(
        cmap.grid, [s.x for s in samples], [s.y for s in samples]
    )
    mask[rows[inside], cols[inside]] = True
    return mask
