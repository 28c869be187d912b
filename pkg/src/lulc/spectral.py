"""Normalized-difference band math (NDVI and friends)."""

from __future__ import annotations

import numpy as np

from lulc.errors import ValidationError
from lulc.raster import RasterGrid

INDEX_NODATA = -9999.0


def normalized_difference(a_band: RasterGrid, b_band: RasterGrid, name: str = "nd") -> RasterGrid:
    """Per-pixel ``(a - b) / (a + b)`` as a float32 single-band raster.

    Evaluated in float64. Pixels that are nodata in either input, have a zero
    denominator, or land outside [-1, 1] (only possible with negative inputs)
    become ``INDEX_NODATA``.
    """
    for g in (a_band, b_band):
        if g.band_count != 1:
            raise ValidationError("normalized_difference takes single-band rasters")
    a_band.require_same_geometry(b_band, "normalized_difference")
    a = a_band.data[0].astype(np.float64)
    b = b_band.data[0].astype(np.float64)
    num = a - b
    den = a + b
    valid = a_band.valid_mask() & b_band.valid_mask() & (den != 0)
    out = np.full(a.shape, INDEX_NODATA, dtype=np.float64)
    np.divide(num, den, out=out, where=valid)
    valid &= (out >= -1.0) & (out <= 1.0)
    out[~valid] = INDEX_NODATA
    return RasterGrid(
        out.astype(np.float32),
        a_band.geotransform,
        a_band.crs_id,
        INDEX_NODATA,
        (name,),
    )


def ndvi(grid: RasterGrid, nir: int, red: int) -> RasterGrid:
    """NDVI from a multiband raster; ``nir`` and ``red`` are 0-based band indices."""
    return normalized_difference(grid.band(nir), grid.band(red), name="ndvi")


def append_band(grid: RasterGrid, extra: RasterGrid) -> RasterGrid:
    """Stack single-band ``extra`` under ``grid`` as float32.

    A pixel invalid in either input is nodata in every band of the result.
    """
    grid.require_same_geometry(extra, "append_band")
    nodata = extra.nodata if extra.nodata is not None else grid.nodata
    data = np.concatenate([grid.data.astype(np.float32), extra.data.astype(np.float32)])
    if nodata is not None:
        invalid = ~(grid.valid_mask() & extra.valid_mask())
        data[:, invalid] = np.float32(nodata)
    return RasterGrid(data, grid.geotransform, grid.crs_id, nodata, grid.band_names + extra.band_names)
