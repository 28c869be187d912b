"""``lulc`` command line.

Exit codes: 0 success, 1 validation or usage error, 2 I/O error. Diagnostics
go to stderr; results go to files, or stdout when ``--out`` is omitted.
"""

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path

import click

from lulc import accuracy, change, classify, formats, report, sampling, spectral, synthetic
from lulc.errors import LulcError, RasterIOError, ValidationError
from lulc.raster import CANONICAL_LEGEND

log = logging.getLogger("lulc")

DEFAULT_WORKERS = os.cpu_count() or 1


def _legend(path):
    return formats.read_legend(path) if path else CANONICAL_LEGEND


def _emit(text: str, out):
    if out:
        formats.write_text(text, out)
    else:
        click.echo(text, nl=False)


def _band(ctx_name: str, number: int, count: int) -> int:
    if not 1 <= number <= count:
        raise ValidationError(f"{ctx_name}: band {number} outside 1..{count}")
    return number - 1


legend_option = click.option(
    "--legend", "legend_path", default=None, help="Legend JSON file.  [default: built-in six-class legend]"
)
workers_option = click.option(
    "--workers", default=DEFAULT_WORKERS, show_default=True, type=click.IntRange(min=1), help="Worker threads."
)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose):
    """Land-cover classification, accuracy assessment and change analysis."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


@cli.command()
@click.option("--map", "map_path", required=True, help="Class map (raster base path).")
@click.option("--n-per-class", default=100, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True, type=click.IntRange(0, 2**64 - 1), help="SplitMix64 seed.")
@click.option("--exclude", default=None, help="Samples CSV whose pixels may not be drawn.  [default: none]")
@click.option("--out", default=None, help="Output samples CSV.  [default: stdout]")
@legend_option
def sample(map_path, n_per_class, seed, exclude, out, legend_path):
    """Draw stratified random validation points from a class map."""
    legend = _legend(legend_path)
    cmap = formats.read_class_map(map_path, legend)
    mask = None
    if exclude:
        mask = sampling.sample_mask(cmap, formats.read_samples(exclude, legend))
    pts = sampling.stratified_random_points(cmap, sampling.SamplePlan(n_per_class, seed, legend), exclude=mask)
    _emit(formats.format_samples(pts), out)


@cli.command()
@click.option("--raster", required=True, help="Multiband raster (base path).")
@click.option("--samples", "samples_path", required=True, help="Training samples CSV.")
@click.option("--out", required=True, help="Model JSON to write.")
@click.option("--ridge", default=None, type=float, help="Covariance ridge.  [default: 1e-6 x mean band variance]")
@click.option("--strict-samples", is_flag=True, help="Fail on samples outside the raster instead of skipping them.")
@click.option("--append-ndvi", is_flag=True, help="Append NDVI (needs --nir and --red) to the features.")
@click.option("--nir", default=None, type=int, help="NIR band number (1-based) for --append-ndvi.")
@click.option("--red", default=None, type=int, help="Red band number (1-based) for --append-ndvi.")
@legend_option
def train(raster, samples_path, out, ridge, strict_samples, append_ndvi, nir, red, legend_path):
    """Fit the Gaussian maximum-likelihood classifier."""
    legend = _legend(legend_path)
    grid = formats.read_raster(raster)
    samples = formats.read_samples(samples_path, legend)
    ndvi_bands = None
    if append_ndvi:
        if nir is None or red is None:
            raise ValidationError("--append-ndvi needs --nir and --red")
        ndvi_bands = (_band("--nir", nir, grid.band_count), _band("--red", red, grid.band_count))
    feats = classify.extract_training(classify.feature_raster(grid, ndvi_bands), samples, legend, strict=strict_samples)
    for i, reason in feats.skipped:
        log.warning("sample %d skipped: %s", i, reason)
    model = classify.train_max_likelihood(feats, ridge)
    model.ndvi_bands = ndvi_bands
    formats.write_json(model.to_json(), out)


@cli.command("classify")
@click.option("--model", "model_path", default=None, help="Model JSON (maximum likelihood).")
@click.option("--raster", required=True, help="Multiband raster (base path).")
@click.option("--out", required=True, help="Class map base path to write.")
@click.option("--method", type=click.Choice(["ml", "knn"]), default="ml", show_default=True)
@click.option("--samples", "samples_path", default=None, help="Training samples CSV (knn only).")
@click.option("--k", default=3, show_default=True, type=int, help="Neighbours for knn (odd).")
@workers_option
@legend_option
def classify_cmd(model_path, raster, out, method, samples_path, k, workers, legend_path):
    """Classify every pixel of a raster."""
    grid = formats.read_raster(raster)
    if method == "ml":
        if not model_path:
            raise ValidationError("--model is required for --method ml")
        model = classify.GaussianClassModel.from_json(formats.read_json(model_path))
        cmap = classify.predict(model, classify.feature_raster(grid, model.ndvi_bands), workers=workers)
    else:
        if not samples_path:
            raise ValidationError("--samples is required for --method knn")
        legend = _legend(legend_path)
        feats = classify.extract_training(grid, formats.read_samples(samples_path, legend), legend)
        cmap = classify.knn_predict(feats, grid, k, workers=workers)
    formats.write_class_map(cmap, out)


@cli.command()
@click.option("--raster", required=True, help="Multiband raster (base path).")
@click.option("--formula", type=click.Choice(["ndvi", "nd"]), default="ndvi", show_default=True)
@click.option("--nir", "band_a", required=True, type=int, help="NIR (first) band number, 1-based.")
@click.option("--red", "band_b", required=True, type=int, help="Red (second) band number, 1-based.")
@click.option("--out", required=True, help="Index raster base path to write.")
def index(raster, formula, band_a, band_b, out):
    """Compute a normalized-difference index, (a - b) / (a + b)."""
    grid = formats.read_raster(raster)
    a = _band("--nir", band_a, grid.band_count)
    b = _band("--red", band_b, grid.band_count)
    result = spectral.normalized_difference(grid.band(a), grid.band(b), name=formula)
    formats.write_raster(result, out)


@cli.command()
@click.option("--ref", "ref_path", required=True, help="Reference samples CSV.")
@click.option("--pred", "pred_path", default=None, help="Classified samples CSV, row-aligned with --ref.")
@click.option("--map", "map_path", default=None, help="Class map to read predictions from instead of --pred.")
@click.option("--out", default=None, help="Accuracy table CSV.  [default: stdout]")
@click.option("--matrix-out", default=None, help="Also write the confusion matrix CSV here.")
@legend_option
def assess(ref_path, pred_path, map_path, out, matrix_out, legend_path):
    """Confusion matrix, producer's/user's accuracy, overall accuracy and kappa."""
    if (pred_path is None) == (map_path is None):
        raise ValidationError("give exactly one of --pred or --map")
    legend = _legend(legend_path)
    ref = formats.read_samples(ref_path, legend)
    if pred_path:
        pred = formats.read_samples(pred_path, legend)
        if len(pred) != len(ref):
            raise ValidationError(f"{len(ref)} reference rows vs {len(pred)} predicted rows")
        for i, (r, p) in enumerate(zip(ref, pred)):
            if (r.x, r.y) != (p.x, p.y):
                raise ValidationError(f"row {i + 2}: reference and predicted coordinates differ")
        predicted = [p.class_id for p in pred]
    else:
        cmap = formats.read_class_map(map_path, legend)
        predicted = accuracy.labels_at(cmap, [r.x for r in ref], [r.y for r in ref])
    cm = accuracy.confusion_matrix([r.class_id for r in ref], predicted, legend)
    if matrix_out:
        formats.write_text(report.confusion_csv(cm), matrix_out)
    _emit(report.accuracy_csv(cm), out)


def _year_maps(items, legend):
    maps = []
    for item in items:
        year, sep, path = item.partition("=")
        if not sep:
            raise ValidationError(f"--map expects YEAR=PATH, got {item!r}")
        try:
            y = int(year)
        except ValueError:
            raise ValidationError(f"--map year {year!r} is not an integer") from None
        maps.append((y, formats.read_class_map(path, legend)))
    return maps


@cli.command("change")
@click.option("--map", "maps", multiple=True, required=True, help="YEAR=PATH, repeated in increasing year order.")
@click.option("--regions", "regions_path", required=True, help="Regions JSON.")
@click.option(
    "--focus", multiple=True, default=change.DEFAULT_FOCUS, show_default=True, help="Focus class name or id (repeatable)."
)
@click.option("--out", default=None, help="Change report CSV.  [default: stdout]")
@click.option("--transitions", default=None, help="Also write the first-to-last transition matrix CSV here.")
@workers_option
@legend_option
def change_cmd(maps, regions_path, focus, out, transitions, workers, legend_path):
    """Per-region class-area change across yearly class maps."""
    legend = _legend(legend_path)
    series = _year_maps(maps, legend)
    regions = formats.read_regions(regions_path)
    rows = change.change_series(series, regions, focus, workers=workers)
    if transitions:
        tm = change.transition_matrix(series[0][1], series[-1][1])
        formats.write_text(report.transition_csv(tm), transitions)
    _emit(report.change_csv(rows), out)


@cli.command()
@click.option("--map", "map_path", required=True, help="Class map (raster base path).")
@click.option("--regions", "regions_path", required=True, help="Regions JSON.")
@click.option("--year", default=None, type=int, help="Year label for the rows.  [default: none]")
@click.option("--out", default=None, help="Zonal area CSV.  [default: stdout]")
@workers_option
@legend_option
def zonal(map_path, regions_path, year, out, workers, legend_path):
    """Class areas (km^2) inside each region."""
    legend = _legend(legend_path)
    cmap = formats.read_class_map(map_path, legend)
    table = change.zonal_class_area(cmap, formats.read_regions(regions_path), year=year, workers=workers)
    _emit(report.zonal_csv(table), out)


@cli.command("report")
@click.option("--change", "change_path", required=True, help="Change report CSV from the change subcommand.")
@click.option("--out-dir", required=True, help="Directory for the SVG charts.")
@click.option(
    "--sort", type=click.Choice(["none", "ascending", "descending"]), default="none", show_default=True
)
def report_cmd(change_path, out_dir, sort):
    """Render area and percentage-change bar charts as SVG."""
    records = report.parse_change_csv(formats.read_text(change_path))
    if not records:
        raise ValidationError("change report has no rows")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RasterIOError(out, exc.strerror or exc) from exc
    for stem, spec in report.change_charts(records).items():
        spec = report.ChartSpec(spec.title, spec.categories, spec.series, spec.unit, sort)
        report.emit_bar_chart(spec, out / f"{stem}.svg")


@cli.command(hidden=True)
@click.option("--spec", "spec_path", required=True, help="SceneSpec JSON.")
@click.option("--out", required=True, help="Base path; writes <out> raster and <out>_truth class map.")
@click.option("--growth-years", default=0, show_default=True, type=click.IntRange(min=0))
@click.option("--growth-class", default="Built Area", show_default=True)
@click.option("--margin", default=1, show_default=True, type=click.IntRange(min=0))
@click.option("--start-year", default=2017, show_default=True, type=int)
def fixture(spec_path, out, growth_years, growth_class, margin, start_year):
    """Generate a synthetic scene (and optionally a yearly growth series)."""
    spec = synthetic.SceneSpec.from_json(formats.read_json(spec_path))
    grid, truth = synthetic.generate_scene(spec)
    formats.write_raster(grid, out)
    formats.write_class_map(truth, f"{out}_truth")
    if growth_years:
        rule = synthetic.GrowthRule(spec.legend.resolve(growth_class), margin, start_year)
        for year, cmap in synthetic.generate_growth_series(spec, growth_years, rule):
            formats.write_class_map(cmap, f"{out}_{year}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="lulc", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except LulcError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
