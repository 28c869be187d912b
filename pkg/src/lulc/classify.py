"""Supervised per-pixel classification.

The primary classifier is Gaussian maximum likelihood: every class gets a mean
vector, a full covariance (plus a ridge on the diagonal) and a prior, and a
pixel goes to the class with the largest log-density discriminant

    g_c(x) = ln(prior_c) - 0.5 ln|cov_c| - 0.5 (x - mean_c)^T cov_c^-1 (x - mean_c)

Ties go to the lowest class id. A brute-force k-nearest-neighbour classifier
is kept alongside as an independent cross-check.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from lulc.errors import ConfigurationError, FormatError, TrainingError, ValidationError
from lulc.formats import LabeledSample, legend_from_json, legend_to_json
from lulc.raster import CLASS_NODATA, ClassLegend, ClassMap, RasterGrid, map_to_pixel_array
from lulc.spectral import append_band, ndvi

log = logging.getLogger(__name__)

MODEL_FORMAT = "lulc-gaussian-ml/1"
DEFAULT_RIDGE_SCALE = 1e-6
BLOCK_PIXELS = 1 << 16

__all__ = [
    "LabeledSample",
    "FeatureMatrix",
    "GaussianClassModel",
    "extract_training",
    "train_max_likelihood",
    "discriminant",
    "predict",
    "knn_predict",
]


@dataclass
class FeatureMatrix:
    features: np.ndarray  # (n, bands) float64
    labels: np.ndarray  # (n,) int
    band_names: tuple[str, ...]
    legend: ClassLegend
    skipped: list[tuple[int, str]] = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim == 1:
            self.features = self.features[:, np.newaxis]
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.features) != len(self.labels):
            raise ValidationError("features and labels differ in length")
        if self.features.shape[1] != len(self.band_names):
            raise ValidationError("feature columns do not match band names")
        for c in np.unique(self.labels):
            if int(c) not in self.legend:
                raise ValidationError(f"label {int(c)} not in legend")

    def __len__(self):
        return len(self.labels)

    def histogram(self) -> dict[int, int]:
        return {c: int(np.sum(self.labels == c)) for c in self.legend.ids}


def extract_training(
    raster: RasterGrid,
    samples: list[LabeledSample],
    legend: ClassLegend,
    strict: bool = False,
) -> FeatureMatrix:
    """Band vectors at the pixels containing each sample.

    Samples on nodata pixels are always skipped. Samples off the raster raise
    in ``strict`` mode and are skipped otherwise; every skip lands in
    ``FeatureMatrix.skipped`` as ``(sample_index, reason)``.
    """
    xs = np.array([s.x for s in samples], dtype=np.float64)
    ys = np.array([s.y for s in samples], dtype=np.float64)
    cols, rows, inside = map_to_pixel_array(raster, xs, ys)
    if strict and not inside.all():
        i = int(np.flatnonzero(~inside)[0])
        s = samples[i]
        raise ValidationError(f"sample {i} at ({s.x}, {s.y}) lies outside the raster")
    valid = raster.valid_mask()
    skipped = []
    keep = []
    for i, s in enumerate(samples):
        if s.class_id not in legend:
            raise ValidationError(f"sample {i}: class id {s.class_id} not in legend")
        if not inside[i]:
            skipped.append((i, "outside raster"))
        elif not valid[rows[i], cols[i]]:
            skipped.append((i, "nodata pixel"))
        else:
            keep.append(i)
    if not keep:
        raise TrainingError("no usable training samples (all outside the raster or on nodata)")
    if skipped:
        log.warning("skipped %d of %d training samples", len(skipped), len(samples))
    keep = np.array(keep)
    feats = raster.data[:, rows[keep], cols[keep]].T.astype(np.float64)
    labels = np.array([samples[i].class_id for i in keep], dtype=np.int64)
    return FeatureMatrix(feats, labels, raster.band_names, legend, skipped)


@dataclass(eq=False)
class GaussianClassModel:
    """Trained per-class mean / covariance / prior; classes ordered by id."""

    legend: ClassLegend
    band_names: tuple[str, ...]
    class_ids: tuple[int, ...]
    means: np.ndarray  # (K, B)
    covariances: np.ndarray  # (K, B, B)
    priors: np.ndarray  # (K,)
    ridge: float
    ndvi_bands: tuple[int, int] | None = None

    def __post_init__(self):
        self.class_ids = tuple(int(c) for c in self.class_ids)
        self.band_names = tuple(self.band_names)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.covariances = np.asarray(self.covariances, dtype=np.float64)
        self.priors = np.asarray(self.priors, dtype=np.float64)
        k, b = len(self.class_ids), len(self.band_names)
        if k == 0:
            raise ValidationError("model has no classes")
        if list(self.class_ids) != sorted(set(self.class_ids)):
            raise ValidationError("model class ids must be unique and ascending")
        if self.means.shape != (k, b) or self.covariances.shape != (k, b, b) or self.priors.shape != (k,):
            raise ValidationError("model array shapes inconsistent with classes and bands")
        if not (self.priors > 0).all():
            raise ValidationError("priors must be positive")
        for c in self.class_ids:
            if c not in self.legend:
                raise ValidationError(f"model class {c} not in legend")
        whiteners, consts = [], []
        for i, c in enumerate(self.class_ids):
            cov = self.covariances[i]
            if not np.array_equal(cov, cov.T):
                raise ValidationError(f"covariance of class {c} is not symmetric")
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise TrainingError(f"covariance of class {c} is not positive definite") from None
            whiteners.append(np.linalg.inv(chol))
            logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
            consts.append(math.log(self.priors[i]) - 0.5 * logdet)
        self._whiteners = np.array(whiteners)
        self._consts = np.array(consts)

    @property
    def dimension(self) -> int:
        return len(self.band_names)

    def scores(self, x: np.ndarray) -> np.ndarray:
        """Discriminants for ``(n, bands)`` rows; returns ``(K, n)``."""
        x = np.asarray(x, dtype=np.float64)
        out = np.empty((len(self.class_ids), len(x)))
        for i in range(len(self.class_ids)):
            z = (x - self.means[i]) @ self._whiteners[i].T
            out[i] = self._consts[i] - 0.5 * np.einsum("ij,ij->i", z, z)
        return out

    def to_json(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "legend": legend_to_json(self.legend),
            "band_names": list(self.band_names),
            "ridge": self.ridge,
            "ndvi_bands": list(self.ndvi_bands) if self.ndvi_bands else None,
            "classes": [
                {
                    "class_id": c,
                    "mean": self.means[i].tolist(),
                    "covariance": self.covariances[i].ravel().tolist(),
                    "prior": float(self.priors[i]),
                }
                for i, c in enumerate(self.class_ids)
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> GaussianClassModel:
        if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
            raise FormatError(f"not a {MODEL_FORMAT} model document")
        try:
            legend = legend_from_json(doc["legend"])
            bands = tuple(doc["band_names"])
            b = len(bands)
            classes = sorted(doc["classes"], key=lambda e: e["class_id"])
            model = cls(
                legend=legend,
                band_names=bands,
                class_ids=tuple(e["class_id"] for e in classes),
                means=np.array([e["mean"] for e in classes], dtype=np.float64).reshape(len(classes), b),
                covariances=np.array([e["covariance"] for e in classes], dtype=np.float64).reshape(
                    len(classes), b, b
                ),
                priors=np.array([e["prior"] for e in classes], dtype=np.float64),
                ridge=float(doc["ridge"]),
                ndvi_bands=tuple(doc["ndvi_bands"]) if doc.get("ndvi_bands") else None,
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise FormatError(f"malformed model document: {exc}") from exc
        if abs(float(np.sum(model.priors)) - 1.0) > 1e-9:
            raise ValidationError("model priors must sum to 1")
        return model


def train_max_likelihood(features: FeatureMatrix, ridge: float | None = None) -> GaussianClassModel:
    """Fit one Gaussian per class present in ``features``.

    ``ridge`` is added to every covariance diagonal. When omitted it defaults
    to 1e-6 times the mean diagonal of the pooled sample covariance (1e-6 if
    that is zero).
    """
    x, y = features.features, features.labels
    if not np.isfinite(x).all():
        raise ValidationError("training features contain non-finite values")
    if len(x) < 2:
        raise TrainingError("need at least two training samples")
    b = x.shape[1]
    if ridge is None:
        pooled = x - x.mean(axis=0)
        scale = float(np.mean(np.sum(pooled * pooled, axis=0) / (len(x) - 1)))
        ridge = DEFAULT_RIDGE_SCALE * scale if scale > 0 else DEFAULT_RIDGE_SCALE
    ridge = float(ridge)
    if not math.isfinite(ridge) or ridge < 0:
        raise ValidationError(f"ridge must be a non-negative finite number, got {ridge}")

    present = sorted(int(c) for c in np.unique(y))
    missing = [c for c in features.legend.ids if c not in present]
    if missing:
        log.warning("legend classes without training samples: %s", missing)
    means, covs, counts = [], [], []
    for c in present:
        xc = x[y == c]
        n = len(xc)
        if n < 2:
            raise TrainingError(f"class {c} ({features.legend.name_of(c)}) has {n} sample; need at least 2")
        if n < b + 1:
            log.warning("class %d has %d samples for %d bands; covariance relies on the ridge", c, n, b)
        mu = xc.mean(axis=0)
        d = xc - mu
        cov = d.T @ d / (n - 1)
        cov = 0.5 * (cov + cov.T) + ridge * np.eye(b)
        means.append(mu)
        covs.append(cov)
        counts.append(n)
    counts = np.array(counts, dtype=np.float64)
    return GaussianClassModel(
        legend=features.legend,
        band_names=features.band_names,
        class_ids=tuple(present),
        means=np.array(means),
        covariances=np.array(covs),
        priors=counts / counts.sum(),
        ridge=ridge,
    )


def discriminant(model: GaussianClassModel, x, c: int) -> float:
    """Log-density score of band vector ``x`` for class ``c``."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.dimension:
        raise ValidationError(f"vector has {x.shape[0]} values, model expects {model.dimension}")
    if not np.isfinite(x).all():
        raise ValidationError("vector must be finite")
    try:
        i = model.class_ids.index(int(c))
    except ValueError:
        raise ValidationError(f"class {c} not in model") from None
    return float(model.scores(x[np.newaxis])[i, 0])


def feature_raster(raster: RasterGrid, ndvi_bands: tuple[int, int] | None) -> RasterGrid:
    """Raw bands, optionally with NDVI (0-based nir, red) appended."""
    if ndvi_bands is None:
        return raster
    nir, red = ndvi_bands
    return append_band(raster, ndvi(raster, nir, red))


def _row_blocks(height: int, width: int) -> list[tuple[int, int]]:
    rows = max(1, BLOCK_PIXELS // width)
    return [(r, min(r + rows, height)) for r in range(0, height, rows)]


def _run_blocks(fn, blocks, workers: int):
    if workers <= 1 or len(blocks) == 1:
        for blk in blocks:
            fn(blk)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(fn, blocks))


def _class_nodata(legend: ClassLegend) -> int:
    for v in (CLASS_NODATA, 255):
        if v not in legend:
            return v
    return next(v for v in range(256) if v not in legend)


def _pixels(raster: RasterGrid, r0: int, r1: int) -> np.ndarray:
    return raster.data[:, r0:r1].reshape(raster.band_count, -1).T.astype(np.float64)


def predict(model: GaussianClassModel, raster: RasterGrid, workers: int = 1) -> ClassMap:
    if raster.band_count != model.dimension:
        raise ValidationError(f"raster has {raster.band_count} bands, model expects {model.dimension}")
    nodata = _class_nodata(model.legend)
    ids = np.array(model.class_ids, dtype=np.uint8)
    out = np.full((raster.height, raster.width), nodata, dtype=np.uint8)
    valid = raster.valid_mask()

    def work(block):
        r0, r1 = block
        v = valid[r0:r1].reshape(-1)
        if not v.any():
            return
        s = model.scores(_pixels(raster, r0, r1)[v])
        # argmax returns the first maximum: lowest class id wins ties
        labels = np.full(v.shape, nodata, dtype=np.uint8)
        labels[v] = ids[np.argmax(s, axis=0)]
        out[r0:r1] = labels.reshape(r1 - r0, raster.width)

    _run_blocks(work, _row_blocks(raster.height, raster.width), workers)
    return ClassMap.from_array(out, raster.geotransform, raster.crs_id, model.legend, nodata)


def knn_predict(features: FeatureMatrix, raster: RasterGrid, k: int, workers: int = 1) -> ClassMap:
    """Majority vote of the ``k`` Euclidean-nearest training rows, by brute force.

    Distance ties order by class id, and vote ties go to the lowest class id.
    """
    if k < 1 or k % 2 == 0:
        raise ConfigurationError(f"k must be an odd positive integer, got {k}")
    if k > len(features):
        raise ConfigurationError(f"k={k} exceeds training size {len(features)}")
    if raster.band_count != features.features.shape[1]:
        raise ValidationError("raster band count does not match training features")
    train = features.features
    labels = features.labels
    class_ids = np.array(sorted(int(c) for c in np.unique(labels)))
    onehot = (labels[:, np.newaxis] == class_ids[np.newaxis, :]).astype(np.int64)
    nodata = _class_nodata(features.legend)
    out = np.full((raster.height, raster.width), nodata, dtype=np.uint8)
    valid = raster.valid_mask()
    chunk = max(1, (1 << 21) // len(train))

    def vote(xs):
        d2 = np.zeros((len(xs), len(train)))
        for b in range(train.shape[1]):
            d2 += np.square(xs[:, b : b + 1] - train[np.newaxis, :, b])
        kth = np.partition(d2, k - 1, axis=1)[:, k - 1 : k]
        closer = (d2 < kth).astype(np.int64) @ onehot
        at_kth = (d2 == kth).astype(np.int64) @ onehot
        # neighbours tied at the k-th distance are taken in class-id order
        room = k - closer.sum(axis=1, keepdims=True)
        before = np.cumsum(at_kth, axis=1) - at_kth
        take = np.clip(room - before, 0, at_kth)
        return class_ids[np.argmax(closer + take, axis=1)]

    def work(block):
        r0, r1 = block
        v = valid[r0:r1].reshape(-1)
        x = _pixels(raster, r0, r1)[v]
        res = np.empty(len(x), dtype=np.uint8)
        for s in range(0, len(x), chunk):
            res[s : s + chunk] = vote(x[s : s + chunk])
        labels_out = np.full(v.shape, nodata, dtype=np.uint8)
        labels_out[v] = res
        out[r0:r1] = labels_out.reshape(r1 - r0, raster.width)

    _run_blocks(work, _row_blocks(raster.height, raster.width), workers)
    return ClassMap.from_array(out, raster.geotransform, raster.crs_id, features.legend, nodata)
