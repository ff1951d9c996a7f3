"""Recurrence-network analysis of the mean photon number of a Lambda-atom model."""

from .dynamics import (
    FockTruncation,
    InitialState,
    MeanPhotonSeries,
    ModelParams,
    TimeGrid,
    mean_photon_series,
    truncation_bound,
)
from .embedding import EmbeddingParams, embed, first_minimum_lag, fnn_embedding_dimension, rescale, uniform_deviate
from .metrics import MetricsReport, compute_metrics
from .recnet import RecurrenceNetwork, build_network, critical_epsilon, is_connected, laplacian_l2

__version__ = "0.1.0"
