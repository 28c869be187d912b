import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from lulc.change import (
    change_series,
    class_area,
    class_pixel_count,
    nodata_area,
    percent_change,
    transition_matrix,
    zonal_class_area,
)
from lulc.errors import ValidationError
from lulc.raster import CANONICAL_LEGEND, ClassMap, RegionPolygon, north_up, pixel_to_map

L = CANONICAL_LEGEND
CROPS, BUILT = 3, 4
GT = north_up(0, 1000, 10)


def cmap(classes, gt=GT):
    return ClassMap.from_array(np.asarray(classes, np.uint8), gt)


def brute_transitions(a, b):
    k = len(L)
    out = np.zeros((k, k), int)
    for x, y in zip(a.ravel().tolist(), b.ravel().tolist()):
        if x and y:
            out[L.index_of(x), L.index_of(y)] += 1
    return out


maps = st.tuples(st.integers(1, 12), st.integers(1, 12)).flatmap(
    lambda hw: st.tuples(
        hnp.arrays(np.uint8, hw, elements=st.integers(0, 6)),
        hnp.arrays(np.uint8, hw, elements=st.integers(0, 6)),
    )
)


class TestTransitions:
    def test_identity(self):
        rng = np.random.default_rng(1)
        m = cmap(rng.integers(1, 7, size=(20, 20)))
        tm = transition_matrix(m, m)
        hist = m.histogram()
        np.testing.assert_array_equal(np.diag(tm.counts), [hist[c] for c in L.ids])
        assert tm.counts.sum() == np.trace(tm.counts)

    def test_uniform_flip(self):
        tm = transition_matrix(cmap(np.full((10, 10), CROPS)), cmap(np.full((10, 10), BUILT)))
        expected = np.zeros((6, 6), int)
        expected[L.index_of(CROPS), L.index_of(BUILT)] = 100
        np.testing.assert_array_equal(tm.counts, expected)

    def test_random_matches_brute_force(self):
        rng = np.random.default_rng(2)
        a, b = rng.integers(0, 7, size=(2, 15, 9))
        tm = transition_matrix(cmap(a), cmap(b))
        np.testing.assert_array_equal(tm.counts, brute_transitions(a, b))
        assert tm.total == int(((a != 0) & (b != 0)).sum())
        assert tm.excluded_pixels == a.size - tm.total

    def test_geometry_mismatch(self):
        with pytest.raises(ValidationError):
            transition_matrix(cmap(np.ones((2, 2))), cmap(np.ones((2, 2)), north_up(5, 1000, 10)))

    def test_crs_mismatch(self):
        a = cmap(np.ones((2, 2)))
        b = ClassMap.from_array(np.ones((2, 2), np.uint8), GT, crs_id="EPSG:4326")
        with pytest.raises(ValidationError):
            transition_matrix(a, b)


@settings(max_examples=300)
@given(ab=maps)
def test_transition_conservation(ab):
    a, b = ab
    tm = transition_matrix(cmap(a), cmap(b))
    joint = (a != 0) & (b != 0)
    assert tm.counts.sum(axis=1).tolist() == [int(((a == c) & joint).sum()) for c in L.ids]
    assert tm.counts.sum(axis=0).tolist() == [int(((b == c) & joint).sum()) for c in L.ids]
    off = transition_matrix(cmap(a), cmap(a)).counts
    assert (off - np.diag(np.diag(off)) == 0).all()


class TestAreas:
    def test_hundred_pixels(self):
        classes = np.full((20, 20), 1, np.uint8)
        classes[:10, :10] = BUILT
        assert class_area(cmap(classes), BUILT) == pytest.approx(0.01, rel=1e-12)

    def test_zero(self):
        assert class_area(cmap(np.ones((4, 4))), BUILT) == 0.0

    def test_full_megapixel(self):
        m = cmap(np.full((1000, 1000), BUILT), north_up(0, 0, 10))
        assert class_area(m, BUILT) == 100.0

    def test_unknown_class(self):
        with pytest.raises(ValidationError):
            class_area(cmap(np.ones((2, 2))), 9)


@settings(max_examples=300)
@given(a=hnp.arrays(np.uint8, st.tuples(st.integers(1, 20), st.integers(1, 20)), elements=st.integers(0, 6)),
       cell=st.sampled_from([1.0, 10.0, 20.0, 30.0, 60.0]))
def test_area_conservation(a, cell):
    m = cmap(a, north_up(0, 0, cell))
    px = sum(class_pixel_count(m, c) for c in L.ids) + int((a == 0).sum())
    assert px == a.size
    # exact in m^2; km^2 values carry one rounding each
    assert px * m.grid.pixel_area == a.size * cell * cell
    km2 = math.fsum(class_area(m, c) for c in L.ids) + nodata_area(m)
    assert km2 == pytest.approx(a.size * cell * cell / 1e6, rel=1e-12)


def strips(n, width=100.0, top=1000.0, bottom=900.0):
    w = width / n
    return [RegionPolygon.rectangle(f"R{i}", f"r{i}", i * w, bottom, (i + 1) * w, top) for i in range(n)]


class TestZonal:
    def test_half_region(self):
        m = cmap(np.full((10, 10), BUILT))
        (half,) = strips(2)[:1]
        table = zonal_class_area(m, [half])
        assert table.area("R0", BUILT) == pytest.approx(class_area(m, BUILT) / 2, rel=1e-12)
        assert table.pixels("R0", BUILT) == 50

    def test_partition_additivity(self):
        rng = np.random.default_rng(3)
        m = cmap(rng.integers(0, 7, size=(10, 10)))
        table = zonal_class_area(m, strips(2))
        for c in L.ids:
            assert table.pixels("R0", c) + table.pixels("R1", c) == class_pixel_count(m, c)

    def test_outside(self):
        far = RegionPolygon.rectangle("X", "far", 5000, 5000, 6000, 6000)
        table = zonal_class_area(cmap(np.ones((10, 10))), [far])
        assert all(r.area_km2 == 0 for r in table.rows)
        assert len(table.warnings) == 1 and "'X'" in table.warnings[0]

    def test_class_sum_bounded_by_region(self):
        a = np.ones((10, 10), np.uint8)
        a[0, :] = 0
        table = zonal_class_area(cmap(a), strips(1))
        total = sum(r.pixels for r in table.rows)
        assert total == 90 < table.region_pixels["R0"] == 100

    def test_duplicate_region_ids(self):
        r = strips(1)[0]
        with pytest.raises(ValidationError):
            zonal_class_area(cmap(np.ones((10, 10))), [r, r])

    def test_workers_identical(self):
        rng = np.random.default_rng(4)
        m = cmap(rng.integers(0, 7, size=(10, 10)))
        assert zonal_class_area(m, strips(5), workers=1).rows == zonal_class_area(m, strips(5), workers=3).rows


@settings(max_examples=300)
@given(
    a=hnp.arrays(np.uint8, (10, 10), elements=st.integers(0, 6)),
    cuts=st.lists(st.integers(1, 9), max_size=5, unique=True),
)
def test_zonal_additivity(a, cuts):
    m = cmap(a)
    edges = [0] + sorted(cuts) + [10]
    regions = [
        RegionPolygon.rectangle(f"R{i}", f"r{i}", 10 * c0, 900, 10 * c1, 1000)
        for i, (c0, c1) in enumerate(zip(edges, edges[1:]))
    ]
    table = zonal_class_area(m, regions)
    for c in L.ids:
        assert sum(table.pixels(r.region_id, c) for r in regions) == class_pixel_count(m, c)


class TestPercentChange:
    def test_fifty(self):
        assert percent_change(10, 15) == 50.0

    def test_no_change(self):
        assert percent_change(7, 7) == 0.0

    def test_undefined(self):
        assert percent_change(0, 5) is None

    def test_negative(self):
        with pytest.raises(ValidationError):
            percent_change(-1, 5)


class TestSeries:
    def test_identical_maps(self):
        rng = np.random.default_rng(5)
        m = cmap(rng.integers(1, 7, size=(10, 10)))
        rows = change_series([(2017, m), (2018, m)], strips(2))
        assert all(r.delta_km2 == 0 and r.pct_change in (0.0, None) for r in rows)

    def test_reversed_years(self):
        m = cmap(np.ones((10, 10)))
        with pytest.raises(ValidationError):
            change_series([(2018, m), (2017, m)], strips(1))

    def test_duplicate_years(self):
        m = cmap(np.ones((10, 10)))
        with pytest.raises(ValidationError):
            change_series([(2018, m), (2018, m)], strips(1))

    def test_compound_growth_matches_brute_force(self):
        # built pixels grow ~10% per year in the left region only
        region = RegionPolygon.rectangle("W", "west", 0, 0, 200, 1000)
        gt = north_up(0, 1000, 10)
        targets = [round(100 * 1.1**k) for k in range(5)]
        series = []
        for k, n in enumerate(targets):
            a = np.full((100, 100), CROPS, np.uint8)
            left = a[:, :20].reshape(-1)
            left[:n] = BUILT
            a[:, :20] = left.reshape(100, 20)
            a[50:, 60:] = BUILT  # constant built block outside the region
            series.append((2017 + k, ClassMap.from_array(a, gt)))
        rows = {(r.region_id, r.class_id): r for r in change_series(series, [region], focus_classes=["Built Area"])}
        row = rows[("W", BUILT)]

        def brute(m):
            count = 0
            for rr in range(100):
                for cc in range(100):
                    x, y = pixel_to_map(m.grid, cc, rr)
                    if 0 <= x < 200 and 0 <= y < 1000 and m.classes[rr, cc] == BUILT:
                        count += 1
            return count

        assert list(row.pixels) == [brute(m) for _, m in series] == targets
        assert row.pct_change == pytest.approx(100 * (targets[-1] - targets[0]) / targets[0], rel=1e-12)
        assert row.baseline_km2 == pytest.approx(targets[0] * 100 / 1e6, rel=1e-12)

    def test_default_focus(self):
        m = cmap(np.ones((10, 10)))
        rows = change_series([(2017, m), (2019, m)], strips(1))
        assert [r.class_name for r in rows] == ["Built Area", "Crops"]
        assert all(r.pct_change is None for r in rows)
