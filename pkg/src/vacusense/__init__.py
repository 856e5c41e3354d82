"""Vacuum-excitation contact sensing for aspiration catheters.

Simulates proximal pressure traces for a syringe-driven catheter, extracts
the two window-mean features, classifies catheter-thrombus contact with a
Gaussian-kernel SVM trained in-repo, runs the detection loop as a state
machine, and reproduces benchtop and user-study statistics.
"""

from .bench import (
    BenchLocation,
    BenchProtocol,
    BenchReport,
    ConfusionCounts,
    MetricsReport,
    build_training_corpus,
    metrics,
    run_benchtop,
)
from .config import SimulationConfig, default_config, load_config
from .detector import DetectionSession, SenseEvent, SessionState, persist_session, replay
from .errors import (
    InvalidInputError,
    InvalidParameterError,
    ProtocolError,
    StateError,
    TrainingError,
    VacusenseError,
)
from .features import (
    ContactLabel,
    FeatureVector,
    LabeledSample,
    compute_features,
    load_feature_dataset,
    mean_pressure,
    save_feature_dataset,
)
from .hydraulics import (
    CatheterSpec,
    ContactState,
    PressureTrace,
    SyringeDrive,
    VesselScenario,
    flow_resistance,
    pressure_drop,
    simulate_trace,
)
from .study import (
    Condition,
    LogisticWaldResult,
    OddsRatioResult,
    StudyRecord,
    condition_confusion,
    load_study_records,
    logistic_wald,
    odds_ratio_2x2,
    save_study_records,
    study_report,
)
from .svm import (
    GaussianSvmClassifier,
    SvmModel,
    cross_validate,
    gaussian_kernel,
    load_model,
    predict,
    save_model,
    split_evaluate,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BenchLocation",
    "BenchProtocol",
    "BenchReport",
    "CatheterSpec",
    "Condition",
    "ConfusionCounts",
    "ContactLabel",
    "ContactState",
    "DetectionSession",
    "FeatureVector",
    "GaussianSvmClassifier",
    "InvalidInputError",
    "InvalidParameterError",
    "LabeledSample",
    "LogisticWaldResult",
    "MetricsReport",
    "OddsRatioResult",
    "PressureTrace",
    "ProtocolError",
    "SenseEvent",
    "SessionState",
    "SimulationConfig",
    "StateError",
    "StudyRecord",
    "SvmModel",
    "SyringeDrive",
    "TrainingError",
    "VacusenseError",
    "VesselScenario",
    "build_training_corpus",
    "compute_features",
    "condition_confusion",
    "cross_validate",
    "default_config",
    "flow_resistance",
    "gaussian_kernel",
    "load_config",
    "load_feature_dataset",
    "load_model",
    "load_study_records",
    "logistic_wald",
    "mean_pressure",
    "metrics",
    "odds_ratio_2x2",
    "persist_session",
    "predict",
    "pressure_drop",
    "replay",
    "run_benchtop",
    "save_feature_dataset",
    "save_model",
    "save_study_records",
    "simulate_trace",
    "split_evaluate",
    "study_report",
    "train",
]
