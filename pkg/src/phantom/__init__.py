"""PHANTOM: progressive adversarial-variational synthesis of tabular attack data.

Modules cover the full pipeline: benchmark generation (`benchmark`),
frozen domain feature extractors (`extractors`), the encoder/generator/
critic/classifier quartet (`networks`), the multi-task loss family
(`losses`), the progressive trainer with replay and stabilization
(`trainer`), the evaluation harness (`evaluation`), and the JSON-config
CLI (`config`, `cli`).
"""

__version__ = "0.1.0"

from .benchmark import (
    ClassSpec,
    DatasetTable,
    SplitPair,
    default_class_specs,
    generate_benchmark,
    read_csv,
    stratified_split,
    write_csv,
)
from .errors import (
    ConfigurationError,
    DegenerateTrainingError,
    DivergenceError,
    DomainError,
    FormatError,
    InfeasibleSplitError,
    InputError,
    NumericalError,
    PhantomError,
    SchemaError,
    ShapeError,
)
from .evaluation import (
    ClassReport,
    ClassRow,
    DiversitySummary,
    FidelitySummary,
    MetricsReport,
    PlotSeries,
    UtilityRow,
    classification_report,
    density_profile,
    evaluate_pipeline,
    fidelity_summary,
    ks_statistic,
    nn_distances,
    nn_histogram,
    tstr_utility,
    wasserstein1,
)
from .extractors import (
    ExtractorParams,
    FeatureBundle,
    build_extractor,
    extract,
    feature_matching_distance,
)
from .losses import (
    CyberLossConfig,
    LossBreakdown,
    LossWeights,
    adversarial_losses,
    classification_loss,
    cyber_loss,
    gradient_penalty,
    kl_divergence,
    reconstruction_loss,
    total_generator_objective,
)
from .networks import (
    Classifier,
    Critic,
    Encoder,
    FeatureNormalizer,
    Generator,
    PhantomModels,
    build_models,
    one_hot,
    reparameterize,
)
from .trainer import (
    OptimizerConfig,
    ReplayBuffer,
    ReplayConfig,
    TrainConfig,
    TrainResult,
    Trainer,
    fade_in_factor,
    load_checkpoint,
    resize_samples,
    save_checkpoint,
    synthesize,
    train,
)

__all__ = [
    "__version__",
    # benchmark
    "ClassSpec", "DatasetTable", "SplitPair", "default_class_specs",
    "generate_benchmark", "read_csv", "stratified_split", "write_csv",
    # errors
    "ConfigurationError", "DegenerateTrainingError", "DivergenceError",
    "DomainError", "FormatError", "InfeasibleSplitError", "InputError",
    "NumericalError", "PhantomError", "SchemaError", "ShapeError",
    # evaluation
    "ClassReport", "ClassRow", "DiversitySummary", "FidelitySummary",
    "MetricsReport", "PlotSeries", "UtilityRow", "classification_report",
    "density_profile", "evaluate_pipeline", "fidelity_summary",
    "ks_statistic", "nn_distances", "nn_histogram", "tstr_utility",
    "wasserstein1",
    # extractors
    "ExtractorParams", "FeatureBundle", "build_extractor", "extract",
    "feature_matching_distance",
    # losses
    "CyberLossConfig", "LossBreakdown", "LossWeights", "adversarial_losses",
    "classification_loss", "cyber_loss", "gradient_penalty", "kl_divergence",
    "reconstruction_loss", "total_generator_objective",
    # networks
    "Classifier", "Critic", "Encoder", "FeatureNormalizer", "Generator",
    "PhantomModels", "build_models", "one_hot", "reparameterize",
    # trainer
    "OptimizerConfig", "ReplayBuffer", "ReplayConfig", "TrainConfig",
    "TrainResult", "Trainer", "fade_in_factor", "load_checkpoint",
    "resize_samples", "save_checkpoint", "synthesize", "train",
]
