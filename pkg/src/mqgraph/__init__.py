"""Multilayer quantile graphs for multivariate time series."""

from .core import (
    MappingError,
    MultivariateSeries,
    QuantileBinning,
    UnivariateSeries,
    compute_quantiles,
    load_csv,
    which_quantile,
)
from .features import FEATURE_NAMES, FEATURE_SUBSETS, feature_vector
from .generators import MODEL_KINDS, MdgpSpec, generate, generate_dataset
from .mappers import MappingConfig, map_contemporaneous, map_mhvg_baseline, map_mqg, map_qg
from .mnet import MultilayerNetwork, NodeId

__version__ = "0.1.0"
