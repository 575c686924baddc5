"""Quality assessment of manifold embeddings that is insensitive to
per-axis rescaling of the embedding (normalized embeddings)."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .asim import AlignmentResult, AsimOptions, DegenerateInputError, asim
from .baselines import MeasureValue, measure_LC, measure_MP, measure_Mt, measure_RV
from .datamodel import DataMatrix, PairedDataset, load_matrix, write_matrix
from .neighbors import build_graph, knn, landmark_select, shortest_paths
from .nieqa import (
    NieqaReport,
    classical_mds,
    global_assessment,
    local_assessment,
    model_select,
)
from .synthgen import embed_geodesic_mds, embed_pca, generate, whiten

__all__ = [
    "BACKEND",
    "AlignmentResult",
    "AsimOptions",
    "DataMatrix",
    "DegenerateInputError",
    "MeasureValue",
    "NieqaReport",
    "PairedDataset",
    "asim",
    "build_graph",
    "classical_mds",
    "embed_geodesic_mds",
    "embed_pca",
    "generate",
    "global_assessment",
    "knn",
    "landmark_select",
    "load_matrix",
    "local_assessment",
    "measure_LC",
    "measure_MP",
    "measure_Mt",
    "measure_RV",
    "model_select",
    "shortest_paths",
    "whiten",
    "write_matrix",
]
