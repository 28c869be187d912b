"""Land-use / land-cover pipeline: rasters, classification, accuracy and change."""

from lulc.accuracy import (
    ConfusionMatrix,
    confusion_matrix,
    kappa,
    overall_accuracy,
    producers_accuracy,
    users_accuracy,
)
from lulc.change import (
    TransitionMatrix,
    ZonalAreaTable,
    change_series,
    class_area,
    percent_change,
    transition_matrix,
    zonal_class_area,
)
from lulc.classify import (
    FeatureMatrix,
    GaussianClassModel,
    discriminant,
    extract_training,
    knn_predict,
    predict,
    train_max_likelihood,
)
from lulc.errors import LulcError
from lulc.formats import (
    LabeledSample,
    read_raster,
    read_regions,
    read_samples,
    write_raster,
)
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
from lulc.sampling import SamplePlan, stratified_random_points
from lulc.spectral import ndvi, normalized_difference

__version__ = "0.1.0"
