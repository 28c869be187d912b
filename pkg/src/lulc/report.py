"""CSV tables and SVG bar charts for accuracy and change results."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

from lulc.accuracy import ConfusionMatrix, accuracy_rows, kappa, overall_accuracy
from lulc.change import ChangeRow, TransitionMatrix, ZonalAreaTable
from lulc.errors import FormatError, ValidationError
from lulc.formats import write_text

NA = "n/a"

CANVAS_W, CANVAS_H = 960, 540
PLOT_LEFT, PLOT_RIGHT, PLOT_TOP, PLOT_BOTTOM = 90.0, 930.0, 70.0, 420.0
FONT = "DejaVu Sans, Arial, Helvetica, sans-serif"
PALETTE = ("#4e79a7", "#f28e2b")
N_TICKS = 5


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def _num(v: float, digits: int = 6) -> str:
    return f"{v:.{digits}f}"


def accuracy_csv(cm: ConfusionMatrix) -> str:
    rows = [["class", "reference_total", "classified_total", "number_correct", "producer_pct", "user_pct"]]
    for r in accuracy_rows(cm):
        rows.append(
            [
                r.name,
                r.reference_total,
                r.classified_total,
                r.number_correct,
                NA if r.producer_pct is None else r.producer_pct,
                NA if r.user_pct is None else r.user_pct,
            ]
        )
    rows.append(["overall_accuracy", _num(overall_accuracy(cm))])
    try:
        k = _num(kappa(cm))
    except ArithmeticError:
        k = NA
    rows.append(["kappa", k])
    return _csv(rows)


def confusion_csv(cm: ConfusionMatrix) -> str:
    names = cm.legend.names
    rows = [["reference \\ classified", *names, "reference_total"]]
    for i, name in enumerate(names):
        rows.append([name, *(int(v) for v in cm.counts[i]), int(cm.reference_totals[i])])
    rows.append(["classified_total", *(int(v) for v in cm.classified_totals), cm.total])
    return _csv(rows)


def transition_csv(tm: TransitionMatrix) -> str:
    names = tm.legend.names
    rows = [["earlier \\ later", *names]]
    for i, name in enumerate(names):
        rows.append([name, *(int(v) for v in tm.counts[i])])
    rows.append(["excluded_pixels", tm.excluded_pixels])
    return _csv(rows)


def zonal_csv(table: ZonalAreaTable) -> str:
    rows = [["region_id", "region", "year", "class_id", "class", "pixels", "area_km2"]]
    for r in table.rows:
        rows.append(
            [r.region_id, r.region_name, "" if r.year is None else r.year, r.class_id, r.class_name, r.pixels, _num(r.area_km2)]
        )
    return _csv(rows)


def change_csv(rows: Sequence[ChangeRow]) -> str:
    if not rows:
        raise ValidationError("no change rows to write")
    years = rows[0].years
    out = [["region", "class", *(str(y) for y in years), "delta_km2", "pct_change", "baseline_km2"]]
    for r in rows:
        out.append(
            [
                r.region_name,
                r.class_name,
                *(_num(a) for a in r.areas_km2),
                _num(r.delta_km2),
                NA if r.pct_change is None else _num(r.pct_change, 4),
                _num(r.baseline_km2),
            ]
        )
    return _csv(out)


@dataclass(frozen=True)
class ChangeRecord:
    """One parsed line of a change report CSV."""

    region: str
    class_name: str
    years: tuple[int, ...]
    areas_km2: tuple[float, ...]
    delta_km2: float
    pct_change: float | None
    baseline_km2: float


def parse_change_csv(text: str) -> list[ChangeRecord]:
    reader = list(csv.reader(io.StringIO(text)))
    if not reader:
        raise FormatError("empty change report")
    header = reader[0]
    if header[:2] != ["region", "class"] or header[-3:] != ["delta_km2", "pct_change", "baseline_km2"]:
        raise FormatError("not a change report CSV")
    try:
        years = tuple(int(y) for y in header[2:-3])
        out = []
        for row in reader[1:]:
            if not row:
                continue
            areas = tuple(float(v) for v in row[2:-3])
            pct = None if row[-2] == NA else float(row[-2])
            out.append(ChangeRecord(row[0], row[1], years, areas, float(row[-3]), pct, float(row[-1])))
    except (ValueError, IndexError) as exc:
        raise FormatError(f"malformed change report: {exc}") from exc
    return out


@dataclass(frozen=True)
class ChartSpec:
    """Bar chart description: one or two series over named categories.

    ``None`` in a series means "n/a" and is drawn hatched. ``sort`` is one of
    ``none``, ``ascending`` or ``descending`` and orders categories by the
    first series (n/a last).
    """

    title: str
    categories: tuple[str, ...]
    series: tuple[tuple[str, tuple[float | None, ...]], ...]
    unit: str
    sort: str = "none"

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(str(c) for c in self.categories))
        object.__setattr__(
            self,
            "series",
            tuple((str(label), tuple(None if v is None else float(v) for v in values)) for label, values in self.series),
        )
        if not self.categories:
            raise ValidationError("chart needs at least one category")
        if not 1 <= len(self.series) <= 2:
            raise ValidationError("chart takes one or two series")
        for label, values in self.series:
            if len(values) != len(self.categories):
                raise ValidationError(f"series {label!r} has {len(values)} values for {len(self.categories)} categories")
            if any(v is not None and not math.isfinite(v) for v in values):
                raise ValidationError(f"series {label!r} has non-finite values; use None for n/a")
        if self.sort not in ("none", "ascending", "descending"):
            raise ValidationError(f"unknown sort order {self.sort!r}")

    def ordered(self) -> ChartSpec:
        if self.sort == "none":
            return self
        first = self.series[0][1]
        present = [i for i in range(len(first)) if first[i] is not None]
        present.sort(key=lambda i: first[i], reverse=self.sort == "descending")
        idx = present + [i for i in range(len(first)) if first[i] is None]
        return ChartSpec(
            self.title,
            tuple(self.categories[i] for i in idx),
            tuple((label, tuple(v[i] for i in idx)) for label, v in self.series),
            self.unit,
            "none",
        )


def value_domain(spec: ChartSpec) -> tuple[float, float]:
    """Axis range: always includes zero and spans exactly the data otherwise."""
    vals = [v for _, s in spec.series for v in s if v is not None]
    lo = min([0.0, *vals])
    hi = max([0.0, *vals])
    if hi == lo:
        hi = lo + 1.0
    return lo, hi


def value_y(spec: ChartSpec, value: float) -> float:
    lo, hi = value_domain(spec)
    return PLOT_TOP + (hi - value) * (PLOT_BOTTOM - PLOT_TOP) / (hi - lo)


def bar_geometry(spec: ChartSpec, value: float) -> tuple[float, float]:
    """``(y, height)`` in canvas pixels of a bar for ``value``."""
    lo, hi = value_domain(spec)
    h = abs(value) * (PLOT_BOTTOM - PLOT_TOP) / (hi - lo)
    zero_y = value_y(spec, 0.0)
    return (zero_y - h, h) if value >= 0 else (zero_y, h)


def _f(v: float) -> str:
    return f"{v:.2f}"


def render_bar_chart(spec: ChartSpec) -> str:
    spec = spec.ordered()
    lo, hi = value_domain(spec)
    n = len(spec.categories)
    n_series = len(spec.series)
    group_w = (PLOT_RIGHT - PLOT_LEFT) / n
    bar_w = group_w * 0.7 / n_series
    has_na = any(v is None for _, s in spec.series for v in s)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_W}" height="{CANVAS_H}" '
        f'viewBox="0 0 {CANVAS_W} {CANVAS_H}" font-family={quoteattr(FONT)}>',
        "<defs>",
        '<pattern id="hatch" patternUnits="userSpaceOnUse" width="8" height="8" patternTransform="rotate(45)">',
        '<line x1="0" y1="0" x2="0" y2="8" stroke="#888888" stroke-width="3"/>',
        "</pattern>",
        "</defs>",
        f'<rect x="0" y="0" width="{CANVAS_W}" height="{CANVAS_H}" fill="#ffffff"/>',
        f'<text x="{CANVAS_W / 2:.2f}" y="32.00" font-size="20" text-anchor="middle">{escape(spec.title)}</text>',
    ]
    # value axis
    for t in range(N_TICKS):
        v = lo + (hi - lo) * t / (N_TICKS - 1)
        y = value_y(spec, v)
        out.append(f'<line x1="{_f(PLOT_LEFT)}" y1="{_f(y)}" x2="{_f(PLOT_RIGHT)}" y2="{_f(y)}" stroke="#dddddd"/>')
        out.append(
            f'<text x="{_f(PLOT_LEFT - 8)}" y="{_f(y + 4)}" font-size="12" text-anchor="end">{v:.2f}</text>'
        )
    out.append(
        f'<text x="20.00" y="{_f((PLOT_TOP + PLOT_BOTTOM) / 2)}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 20.00 {_f((PLOT_TOP + PLOT_BOTTOM) / 2)})">{escape(spec.unit)}</text>'
    )
    zero_y = value_y(spec, 0.0)
    for i, cat in enumerate(spec.categories):
        gx = PLOT_LEFT + i * group_w + group_w * 0.15
        for k, (label, values) in enumerate(spec.series):
            x = gx + k * bar_w
            v = values[i]
            if v is None:
                out.append(
                    f'<rect class="bar na" data-category={quoteattr(cat)} data-series={quoteattr(label)} '
                    f'x="{_f(x)}" y="{_f(PLOT_TOP)}" width="{_f(bar_w)}" height="{_f(PLOT_BOTTOM - PLOT_TOP)}" '
                    f'fill="url(#hatch)" fill-opacity="0.6"/>'
                )
                continue
            y, h = bar_geometry(spec, v)
            out.append(
                f'<rect class="bar" data-category={quoteattr(cat)} data-series={quoteattr(label)} '
                f'x="{_f(x)}" y="{_f(y)}" width="{_f(bar_w)}" height="{_f(h)}" fill="{PALETTE[k]}"/>'
            )
        cx = PLOT_LEFT + (i + 0.5) * group_w
        out.append(
            f'<text x="{_f(cx)}" y="{_f(PLOT_BOTTOM + 16)}" font-size="12" text-anchor="end" '
            f'transform="rotate(-35 {_f(cx)} {_f(PLOT_BOTTOM + 16)})">{escape(cat)}</text>'
        )
    out.append(
        f'<line x1="{_f(PLOT_LEFT)}" y1="{_f(zero_y)}" x2="{_f(PLOT_RIGHT)}" y2="{_f(zero_y)}" stroke="#333333"/>'
    )
    out.append(
        f'<line x1="{_f(PLOT_LEFT)}" y1="{_f(PLOT_TOP)}" x2="{_f(PLOT_LEFT)}" y2="{_f(PLOT_BOTTOM)}" stroke="#333333"/>'
    )
    for k, (label, _) in enumerate(spec.series):
        lx = PLOT_RIGHT - 200 + k * 100
        out.append(f'<rect x="{_f(lx)}" y="44.00" width="12.00" height="12.00" fill="{PALETTE[k]}"/>')
        out.append(f'<text x="{_f(lx + 16)}" y="54.00" font-size="12">{escape(label)}</text>')
    if has_na:
        out.append(
            f'<text x="{_f(PLOT_LEFT)}" y="{CANVAS_H - 12:.2f}" font-size="11">'
            "Hatched bars: n/a (zero baseline, percentage undefined)</text>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_bar_chart(spec: ChartSpec, path) -> None:
    write_text(render_bar_chart(spec), path)


def change_charts(records: Sequence[ChangeRecord]) -> dict[str, ChartSpec]:
    """Area and percentage charts per class, keyed by a file stem."""
    out = {}
    classes = []
    for r in records:
        if r.class_name not in classes:
            classes.append(r.class_name)
    for cname in classes:
        rs = [r for r in records if r.class_name == cname]
        years = rs[0].years
        stem = cname.lower().replace(" ", "_")
        out[f"{stem}_area"] = ChartSpec(
            f"{cname} area, {years[0]} and {years[-1]}",
            tuple(r.region for r in rs),
            (
                (str(years[0]), tuple(r.areas_km2[0] for r in rs)),
                (str(years[-1]), tuple(r.areas_km2[-1] for r in rs)),
            ),
            "km²",
        )
        out[f"{stem}_pct_change"] = ChartSpec(
            f"Percentage change in {cname}, {years[0]}-{years[-1]}",
            tuple(r.region for r in rs),
            ((f"{years[0]}-{years[-1]}", tuple(r.pct_change for r in rs)),),
            "%",
        )
    return out
