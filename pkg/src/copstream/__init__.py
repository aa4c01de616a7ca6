"""Online learning over mixed-type, drifting, partially labeled streams.

The package couples a Gaussian-copula latent space over heterogeneous
features with a two-learner hedged ensemble, a dual-signal adaptive drift
detector, and geometric pseudo-labeling, plus the stream synthesizers and
experiment harness used to benchmark them.
"""

from .copula import CopulaState, ImputeResult, LatentObservation, MarginalSketch
from .ensemble import (
    DetectorParams,
    DriftDetector,
    DriftEvent,
    EnsembleState,
    combine,
    ensemble_entropy,
)
from .errors import (
    ColdStartError,
    ConfigError,
    CopstreamError,
    ParseError,
    SchemaError,
    UnsupportedTaskError,
)
from .ingest import (
    Dataset,
    FeatureType,
    TypedSchema,
    infer_feature_types,
    parse_dataset,
    standardize,
    write_dataset,
)
from .learners import LinearLearner, Prediction
from .pseudo import LabelBuffer, PseudoProposal
from .report import compare_table, read_table_csv, write_grid_outputs, write_run_outputs
from .runner import (
    CerTracker,
    GridCell,
    OnlinePipeline,
    RunConfig,
    RunResult,
    run_experiment,
    run_grid,
)
from .streams import Instance, StreamConfig, make_capricious, make_trapezoidal, mask_labels

__version__ = "0.1.0"

__all__ = [
    "CerTracker",
    "ColdStartError",
    "ConfigError",
    "CopstreamError",
    "CopulaState",
    "Dataset",
    "DetectorParams",
    "DriftDetector",
    "DriftEvent",
    "EnsembleState",
    "FeatureType",
    "GridCell",
    "ImputeResult",
    "Instance",
    "LabelBuffer",
    "LatentObservation",
    "LinearLearner",
    "MarginalSketch",
    "OnlinePipeline",
    "ParseError",
    "Prediction",
    "PseudoProposal",
    "RunConfig",
    "RunResult",
    "SchemaError",
    "StreamConfig",
    "TypedSchema",
    "UnsupportedTaskError",
    "combine",
    "compare_table",
    "ensemble_entropy",
    "infer_feature_types",
    "make_capricious",
    "make_trapezoidal",
    "mask_labels",
    "parse_dataset",
    "read_table_csv",
    "run_experiment",
    "run_grid",
    "standardize",
    "write_dataset",
    "write_grid_outputs",
    "write_run_outputs",
    "__version__",
]
