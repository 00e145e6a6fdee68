"""Mixed membership community detection with Mixed-ISC under the DCMM model."""

from .clustering import ClusterCenters, kmeans_pp, kmedian
from .dcmm import DcmmParams, expected_adjacency, experiment_params, population_laplacian, sample_adjacency
from .errors import (ConvergenceError, GraphError, InvalidParametersError, MixedIscError,
                     SingularCentersError, UndefinedRatioError)
from .isc import MixedIscSettings, isc_embed, mixed_isc, mr_reconstruct
from .linalg import AdjacencyMatrix, build_adjacency, default_tau, regularized_laplacian, top_eigs
from .metrics import classify_signal, hard_error_rate, mixed_hamming, summary_stats

__version__ = "0.1.0"
