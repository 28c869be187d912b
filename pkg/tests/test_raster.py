import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lulc.errors import ConfigurationError, ValidationError
from lulc.raster import (
    CANONICAL_LEGEND,
    ClassLegend,
    ClassMap,
    RasterGrid,
    RegionPolygon,
    map_to_pixel,
    pixel_to_map,
    rasterize_polygon,
)


def pnpoly(x, y, rings):
    """Plain crossing-number test over all rings, one point at a time."""
    inside = False
    for ring in rings:
        for (xi, yi), (xj, yj) in zip(ring[:-1], ring[1:]):
            if (yi > y) != (yj > y) and x < (xj - xi) * (y - yi) / (yj - yi) + xi:
                inside = not inside
    return inside


def brute_mask(poly, grid):
    rings = [[tuple(map(float, v)) for v in r] for r in poly.rings]
    out = np.zeros((grid.height, grid.width), dtype=bool)
    for row in range(grid.height):
        for col in range(grid.width):
            out[row, col] = pnpoly(*pixel_to_map(grid, col, row), rings)
    return out


def grid_at(origin, pixel, w=100, h=10):
    return RasterGrid(np.zeros((h, w), np.uint8), (origin[0], pixel[0], 0.0, origin[1], 0.0, pixel[1]))


class TestPixelToMap:
    def test_half_pixel_offset(self):
        g = grid_at((0, 0), (10, -10))
        assert pixel_to_map(g, 0, 0) == (5.0, -5.0)

    def test_far_column(self):
        g = grid_at((0, 0), (10, -10))
        assert pixel_to_map(g, 99, 0) == (995.0, -5.0)

    def test_utm_origin(self):
        g = grid_at((500000, 2600000), (10, -10))
        assert pixel_to_map(g, 0, 0) == (500005.0, 2599995.0)

    def test_rotation_terms(self):
        g = RasterGrid(np.zeros((4, 4), np.uint8), (100, 2, 0.5, 200, 0.25, -3))
        x, y = pixel_to_map(g, 1, 2)
        assert x == 100 + 1.5 * 2 + 2.5 * 0.5
        assert y == 200 + 1.5 * 0.25 + 2.5 * -3

    @pytest.mark.parametrize("col,row", [(-1, 0), (0, -1), (100, 0), (0, 10)])
    def test_out_of_bounds(self, col, row):
        with pytest.raises(IndexError):
            pixel_to_map(grid_at((0, 0), (10, -10)), col, row)


class TestMapToPixel:
    g = grid_at((0, 0), (10, -10))

    def test_center(self):
        assert map_to_pixel(self.g, 5, -5) == (0, 0)

    def test_floor_inside_first_pixel(self):
        assert map_to_pixel(self.g, 9.999, -0.001) == (0, 0)

    def test_left_of_origin(self):
        assert map_to_pixel(self.g, -1, -5) is None

    def test_below_grid(self):
        assert map_to_pixel(self.g, 5, -100.5) is None

    def test_singular(self):
        g = RasterGrid(np.zeros((2, 2), np.uint8), (0, 1, 1, 0, 1, 1))
        with pytest.raises(ConfigurationError):
            map_to_pixel(g, 0, 0)


transforms = st.tuples(
    st.floats(-1e6, 1e6),
    st.floats(0.5, 100) | st.floats(-100, -0.5),
    st.floats(-0.3, 0.3),
    st.floats(-1e6, 1e6),
    st.floats(-0.3, 0.3),
    st.floats(0.5, 100) | st.floats(-100, -0.5),
)


@settings(max_examples=200)
@given(gt=transforms, col=st.integers(0, 63), row=st.integers(0, 63))
def test_pixel_map_round_trip(gt, col, row):
    g = RasterGrid(np.zeros((64, 64), np.uint8), gt)
    x, y = pixel_to_map(g, col, row)
    assert map_to_pixel(g, x, y) == (col, row)


class TestGridModel:
    def test_band_count_and_shape(self):
        g = RasterGrid(np.zeros((3, 4, 5), np.float32), (0, 1, 0, 0, 0, -1))
        assert (g.band_count, g.height, g.width) == (3, 4, 5)
        assert g.data.size == g.width * g.height * g.band_count
        assert g.band_names == ("band1", "band2", "band3")

    def test_immutable(self):
        g = RasterGrid(np.zeros((2, 2), np.uint8), (0, 1, 0, 0, 0, -1))
        with pytest.raises(ValueError):
            g.data[0, 0, 0] = 1

    def test_zero_pixel_size_rejected(self):
        with pytest.raises(ValidationError):
            RasterGrid(np.zeros((2, 2), np.uint8), (0, 0, 0, 0, 0, -1))

    def test_unsupported_dtype(self):
        with pytest.raises(ValidationError):
            RasterGrid(np.zeros((2, 2), np.float64), (0, 1, 0, 0, 0, -1))

    def test_nodata_range(self):
        with pytest.raises(ValidationError):
            RasterGrid(np.zeros((2, 2), np.uint8), (0, 1, 0, 0, 0, -1), nodata=300)

    def test_valid_mask_any_band(self):
        data = np.ones((2, 2, 2), np.uint16)
        data[1, 0, 1] = 0
        g = RasterGrid(data, (0, 1, 0, 0, 0, -1), nodata=0)
        assert g.valid_mask().tolist() == [[True, False], [True, True]]


class TestLegend:
    def test_canonical(self):
        assert CANONICAL_LEGEND.entries == (
            (1, "Water"),
            (2, "Trees"),
            (3, "Crops"),
            (4, "Built Area"),
            (5, "Bare Ground"),
            (6, "Rangeland"),
        )

    @pytest.mark.parametrize(
        "entries",
        [((1, "a"), (1, "b")), ((1, "a"), (2, "a")), ((1, ""),), ()],
    )
    def test_invalid(self, entries):
        with pytest.raises(ValidationError):
            ClassLegend(entries)

    def test_resolve(self):
        assert CANONICAL_LEGEND.resolve("built area") == 4
        assert CANONICAL_LEGEND.resolve("3") == 3
        with pytest.raises(ValidationError):
            CANONICAL_LEGEND.resolve(9)

    def test_class_map_rejects_unknown_values(self):
        with pytest.raises(ValidationError):
            ClassMap.from_array(np.full((2, 2), 9), (0, 1, 0, 0, 0, -1))


class TestRasterize:
    def test_full_cover(self, grid10):
        poly = RegionPolygon.rectangle("a", "a", 0, 0, 100, 100)
        assert rasterize_polygon(poly, grid10).sum() == 100

    def test_half_extent(self, grid10):
        poly = RegionPolygon.rectangle("a", "a", 0, 0, 50, 50)
        mask = rasterize_polygon(poly, grid10)
        assert mask.sum() == 25
        np.testing.assert_array_equal(mask, brute_mask(poly, grid10))
        assert mask[5:, :5].all()

    def test_disjoint(self, grid10):
        poly = RegionPolygon.rectangle("a", "a", 500, 500, 600, 600)
        assert not rasterize_polygon(poly, grid10).any()

    def test_degenerate_ring(self):
        with pytest.raises(ValidationError):
            RegionPolygon("a", "a", ([(0, 0), (1, 0), (0, 0)],))

    def test_open_ring(self):
        with pytest.raises(ValidationError):
            RegionPolygon("a", "a", ([(0, 0), (1, 0), (1, 1), (0, 1)],))

    def test_boundary_convention(self, grid10):
        # centers at x = 5, 15, ...; y = 95, 85, ... Edges pass exactly through centers.
        poly = RegionPolygon.rectangle("a", "a", 15, 15, 45, 45)
        mask = rasterize_polygon(poly, grid10)
        np.testing.assert_array_equal(mask, brute_mask(poly, grid10))
        cols = np.flatnonzero(mask.any(axis=0))
        rows = np.flatnonzero(mask.any(axis=1))
        # left edge x=15 in, right edge x=45 out; bottom y=15 in, top y=45 out
        assert cols.tolist() == [1, 2, 3]
        assert rows.tolist() == [6, 7, 8]

    def test_triangle_matches_brute_force(self, grid10):
        poly = RegionPolygon("t", "t", ([(3, 2), (97, 41), (20, 99), (3, 2)],))
        np.testing.assert_array_equal(rasterize_polygon(poly, grid10), brute_mask(poly, grid10))

    def test_rotated_grid_matches_brute_force(self):
        g = RasterGrid(np.zeros((20, 20), np.uint8), (0, 10, 2, 200, -1.5, -10))
        poly = RegionPolygon("p", "p", ([(10, 10), (180, 30), (150, 170), (20, 120), (10, 10)],))
        np.testing.assert_array_equal(rasterize_polygon(poly, g), brute_mask(poly, g))


@st.composite
def convex_polygons(draw):
    cx, cy = draw(st.floats(10, 90)), draw(st.floats(10, 90))
    n = draw(st.integers(3, 8))
    radii = draw(st.lists(st.floats(5, 60), min_size=n, max_size=n))
    phase = draw(st.floats(0, 2 * math.pi))
    pts = [
        (cx + r * math.cos(phase + 2 * math.pi * k / n), cy + r * math.sin(phase + 2 * math.pi * k / n))
        for k, r in enumerate(radii)
    ]
    pts.append(pts[0])
    return RegionPolygon("p", "p", (pts,))


@settings(max_examples=100)
@given(poly=convex_polygons())
def test_mask_matches_brute_force(grid10, poly):
    np.testing.assert_array_equal(rasterize_polygon(poly, grid10), brute_mask(poly, grid10))


@settings(max_examples=100)
@given(
    x0=st.floats(0, 40), y0=st.floats(0, 40), w=st.floats(30, 60), h=st.floats(30, 60),
    f=st.floats(0.1, 0.4), g=st.floats(0.1, 0.4),
)
def test_hole_subtraction(grid10, x0, y0, w, h, f, g):
    outer = [(x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h), (x0, y0)]
    hx0, hy0 = x0 + f * w, y0 + g * h
    hole = [(hx0, hy0), (hx0 + w / 3, hy0), (hx0 + w / 3, hy0 + h / 3), (hx0, hy0 + h / 3), (hx0, hy0)]
    m_outer = rasterize_polygon(RegionPolygon("o", "o", (outer,)), grid10)
    m_hole = rasterize_polygon(RegionPolygon("h", "h", (hole,)), grid10)
    m_both = rasterize_polygon(RegionPolygon("b", "b", (outer, hole)), grid10)
    np.testing.assert_array_equal(m_outer & ~m_hole, m_both)
