"""Declarative JSON run configuration with strict validation.

A config file holds up to four sections (data, train, synthesize,
evaluate). Unknown keys are rejected, omitted keys resolve to the
standard defaults, and validation reports every violation with its field
path rather than stopping at the first.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .benchmark import DEFAULT_PROPORTIONS, FEATURE_NAMES, N_CLASSES
from .errors import ConfigurationError, FormatError
from .losses import CyberLossConfig, LossWeights
from .trainer import OptimizerConfig, ReplayConfig, TrainConfig


@dataclass
class DataSection:
    n_total: int = 100_000
    proportions: tuple[float, ...] = DEFAULT_PROPORTIONS
    seed: int = 0
    output: str = "real.csv"


@dataclass
class TrainSection:
    data: str = "real.csv"
    checkpoint_dir: str = "checkpoint"
    latent_dim: int = 64
    batch_size: int = 64
    levels: int = 1
    iters_per_level: int = 500
    stabilization_steps: int = 100
    seed: int = 0
    label_prior: tuple[float, ...] = (0.2, 0.2, 0.2, 0.2, 0.2)
    weights: LossWeights = field(default_factory=LossWeights)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    replay: ReplayConfig = field(default_factory=ReplayConfig)
    cyber: CyberLossConfig = field(default_factory=CyberLossConfig)

    def to_train_config(self) -> TrainConfig:
        return TrainConfig(
            latent_dim=self.latent_dim,
            batch_size=self.batch_size,
            levels=self.levels,
            iters_per_level=self.iters_per_level,
            weights=self.weights,
            optimizer=self.optimizer,
            replay=self.replay,
            stabilization_steps=self.stabilization_steps,
            seed=self.seed,
            label_prior=tuple(self.label_prior),
            cyber=self.cyber,
        )


@dataclass
class SynthesizeSection:
    checkpoint: str = "checkpoint"
    n: int = 2000
    label_mix: list[int] | None = None
    seed: int = 0
    output: str = "synthetic.csv"


@dataclass
class EvaluateSection:
    real: str = "real.csv"
    synth: str = "synthetic.csv"
    report_dir: str = "report"
    detector_seed: int = 0
    test_fraction: float = 0.2
    nn_max_rows: int = 5000
    density_feature: str = "src_bytes_log"
    grid_points: int = 256
    bins: int = 50


@dataclass
class RunConfig:
    data: DataSection = field(default_factory=DataSection)
    train: TrainSection = field(default_factory=TrainSection)
    synthesize: SynthesizeSection = field(default_factory=SynthesizeSection)
    evaluate: EvaluateSection = field(default_factory=EvaluateSection)

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# Strict parsing
# ---------------------------------------------------------------------------


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v) -> bool:
    return (isinstance(v, (int, float)) and not isinstance(v, bool))


def _take_int(doc, key, default, path, errors):
    if key not in doc:
        return default
    v = doc[key]
    if not _is_int(v):
        errors.append(f"{path}.{key}: expected integer, got {v!r}")
        return default
    return v


def _take_number(doc, key, default, path, errors):
    if key not in doc:
        return default
    v = doc[key]
    if not _is_number(v):
        errors.append(f"{path}.{key}: expected number, got {v!r}")
        return default
    return float(v)


def _take_str(doc, key, default, path, errors):
    if key not in doc:
        return default
    v = doc[key]
    if not isinstance(v, str):
        errors.append(f"{path}.{key}: expected string, got {v!r}")
        return default
    return v


def _take_number_list(doc, key, default, length, path, errors):
    if key not in doc:
        return default
    v = doc[key]
    if not isinstance(v, list) or not all(_is_number(x) for x in v):
        errors.append(f"{path}.{key}: expected list of numbers, got {v!r}")
        return default
    if length is not None and len(v) != length:
        errors.append(f"{path}.{key}: expected {length} entries, got {len(v)}")
        return default
    return tuple(float(x) for x in v)


def _reject_unknown(doc, allowed, path, errors):
    for key in doc:
        if key not in allowed:
            errors.append(f"{path}.{key}: unknown key")


def _parse_data(doc: dict, errors: list[str]) -> DataSection:
    path = "data"
    _reject_unknown(doc, {"n_total", "proportions", "seed", "output"}, path, errors)
    section = DataSection(
        n_total=_take_int(doc, "n_total", 100_000, path, errors),
        proportions=_take_number_list(
            doc, "proportions", DEFAULT_PROPORTIONS, N_CLASSES, path, errors
        ),
        seed=_take_int(doc, "seed", 0, path, errors),
        output=_take_str(doc, "output", "real.csv", path, errors),
    )
    if section.n_total < 100:
        errors.append(f"{path}.n_total: must be >= 100, got {section.n_total}")
    total = sum(section.proportions)
    if abs(total - 1.0) > 1e-9:
        errors.append(f"{path}.proportions: must sum to 1.0, got {total!r}")
    if any(p < 0 for p in section.proportions):
        errors.append(f"{path}.proportions: entries must be nonnegative")
    return section


def _parse_weights(doc: dict, errors: list[str]) -> LossWeights:
    path = "train.weights"
    allowed = {
        "adversarial", "reconstruction", "feature_matching", "classification",
        "cyber", "gradient_penalty", "kl", "omega",
    }
    _reject_unknown(doc, allowed, path, errors)
    base = LossWeights()
    weights = LossWeights(
        adversarial=_take_number(doc, "adversarial", base.adversarial, path, errors),
        reconstruction=_take_number(doc, "reconstruction", base.reconstruction, path, errors),
        feature_matching=_take_number(doc, "feature_matching", base.feature_matching, path, errors),
        classification=_take_number(doc, "classification", base.classification, path, errors),
        cyber=_take_number(doc, "cyber", base.cyber, path, errors),
        gradient_penalty=_take_number(doc, "gradient_penalty", base.gradient_penalty, path, errors),
        kl=_take_number(doc, "kl", base.kl, path, errors),
        omega=_take_number_list(doc, "omega", base.omega, 3, path, errors),
    )
    try:
        weights.validate()
    except ConfigurationError as err:
        errors.append(f"{path}: {err}")
    return weights


def _parse_optimizer(doc: dict, errors: list[str]) -> OptimizerConfig:
    path = "train.optimizer"
    _reject_unknown(doc, {"eta", "beta1_d", "beta1_ge", "beta1_c", "beta2"}, path, errors)
    base = OptimizerConfig()
    opt = OptimizerConfig(
        eta=_take_number(doc, "eta", base.eta, path, errors),
        beta1_d=_take_number(doc, "beta1_d", base.beta1_d, path, errors),
        beta1_ge=_take_number(doc, "beta1_ge", base.beta1_ge, path, errors),
        beta1_c=_take_number(doc, "beta1_c", base.beta1_c, path, errors),
        beta2=_take_number(doc, "beta2", base.beta2, path, errors),
    )
    try:
        opt.validate()
    except ConfigurationError as err:
        errors.append(f"train.{err}")
    return opt


def _parse_replay(doc: dict, errors: list[str]) -> ReplayConfig:
    path = "train.replay"
    _reject_unknown(doc, {"capacity", "fraction"}, path, errors)
    base = ReplayConfig()
    replay = ReplayConfig(
        capacity=_take_int(doc, "capacity", base.capacity, path, errors),
        fraction=_take_number(doc, "fraction", base.fraction, path, errors),
    )
    try:
        replay.validate()
    except ConfigurationError as err:
        errors.append(f"{path}: {err}")
    return replay


def _parse_cyber(doc: dict, errors: list[str]) -> CyberLossConfig:
    path = "train.cyber"
    _reject_unknown(doc, {"tau", "constraints"}, path, errors)
    base = CyberLossConfig()
    tau = _take_number(doc, "tau", base.tau, path, errors)
    constraints = base.constraints
    if "constraints" in doc:
        raw = doc["constraints"]
        ok = isinstance(raw, list) and all(
            isinstance(p, list) and len(p) == 2 and all(isinstance(s, str) for s in p)
            for p in raw
        )
        if not ok:
            errors.append(f"{path}.constraints: expected list of [lhs, rhs] name pairs")
        else:
            constraints = tuple((p[0], p[1]) for p in raw)
            for lhs, rhs in constraints:
                for name in (lhs, rhs):
                    if name not in FEATURE_NAMES:
                        errors.append(f"{path}.constraints: unknown feature {name!r}")
    if tau < 0:
        errors.append(f"{path}.tau: must be >= 0, got {tau}")
    return CyberLossConfig(tau=tau, constraints=constraints)


def _parse_train(doc: dict, errors: list[str]) -> TrainSection:
    path = "train"
    allowed = {
        "data", "checkpoint_dir", "latent_dim", "batch_size", "levels",
        "iters_per_level", "stabilization_steps", "seed", "label_prior",
        "weights", "optimizer", "replay", "cyber",
    }
    _reject_unknown(doc, allowed, path, errors)
    for nested in ("weights", "optimizer", "replay", "cyber"):
        if nested in doc and not isinstance(doc[nested], dict):
            errors.append(f"{path}.{nested}: expected an object")
            doc = {**doc, nested: {}}
    section = TrainSection(
        data=_take_str(doc, "data", "real.csv", path, errors),
        checkpoint_dir=_take_str(doc, "checkpoint_dir", "checkpoint", path, errors),
        latent_dim=_take_int(doc, "latent_dim", 64, path, errors),
        batch_size=_take_int(doc, "batch_size", 64, path, errors),
        levels=_take_int(doc, "levels", 1, path, errors),
        iters_per_level=_take_int(doc, "iters_per_level", 500, path, errors),
        stabilization_steps=_take_int(doc, "stabilization_steps", 100, path, errors),
        seed=_take_int(doc, "seed", 0, path, errors),
        label_prior=_take_number_list(
            doc, "label_prior", (0.2,) * N_CLASSES, N_CLASSES, path, errors
        ),
        weights=_parse_weights(doc.get("weights", {}), errors),
        optimizer=_parse_optimizer(doc.get("optimizer", {}), errors),
        replay=_parse_replay(doc.get("replay", {}), errors),
        cyber=_parse_cyber(doc.get("cyber", {}), errors),
    )
    for name in ("latent_dim", "batch_size", "levels", "iters_per_level"):
        if getattr(section, name) < 1:
            errors.append(f"{path}.{name}: must be >= 1")
    if section.stabilization_steps < 0:
        errors.append(f"{path}.stabilization_steps: must be >= 0")
    prior_sum = sum(section.label_prior)
    if abs(prior_sum - 1.0) > 1e-9 or any(p < 0 for p in section.label_prior):
        errors.append(f"{path}.label_prior: must be nonnegative and sum to 1")
    return section


def _parse_synthesize(doc: dict, errors: list[str]) -> SynthesizeSection:
    path = "synthesize"
    _reject_unknown(doc, {"checkpoint", "n", "label_mix", "seed", "output"}, path, errors)
    label_mix = None
    if "label_mix" in doc and doc["label_mix"] is not None:
        raw = doc["label_mix"]
        if not isinstance(raw, list) or len(raw) != N_CLASSES or not all(_is_int(x) for x in raw):
            errors.append(f"{path}.label_mix: expected {N_CLASSES} integer counts or null")
        else:
            label_mix = [int(x) for x in raw]
    section = SynthesizeSection(
        checkpoint=_take_str(doc, "checkpoint", "checkpoint", path, errors),
        n=_take_int(doc, "n", 2000, path, errors),
        label_mix=label_mix,
        seed=_take_int(doc, "seed", 0, path, errors),
        output=_take_str(doc, "output", "synthetic.csv", path, errors),
    )
    if section.n < 0:
        errors.append(f"{path}.n: must be >= 0")
    if section.label_mix is not None:
        if any(x < 0 for x in section.label_mix):
            errors.append(f"{path}.label_mix: counts must be nonnegative")
        elif sum(section.label_mix) != section.n:
            errors.append(f"{path}.label_mix: counts must sum to n={section.n}")
    return section


def _parse_evaluate(doc: dict, errors: list[str]) -> EvaluateSection:
    path = "evaluate"
    allowed = {
        "real", "synth", "report_dir", "detector_seed", "test_fraction",
        "nn_max_rows", "density_feature", "grid_points", "bins",
    }
    _reject_unknown(doc, allowed, path, errors)
    section = EvaluateSection(
        real=_take_str(doc, "real", "real.csv", path, errors),
        synth=_take_str(doc, "synth", "synthetic.csv", path, errors),
        report_dir=_take_str(doc, "report_dir", "report", path, errors),
        detector_seed=_take_int(doc, "detector_seed", 0, path, errors),
        test_fraction=_take_number(doc, "test_fraction", 0.2, path, errors),
        nn_max_rows=_take_int(doc, "nn_max_rows", 5000, path, errors),
        density_feature=_take_str(doc, "density_feature", "src_bytes_log", path, errors),
        grid_points=_take_int(doc, "grid_points", 256, path, errors),
        bins=_take_int(doc, "bins", 50, path, errors),
    )
    if not 0.0 < section.test_fraction < 1.0:
        errors.append(f"{path}.test_fraction: must lie in (0, 1)")
    if section.nn_max_rows < 2:
        errors.append(f"{path}.nn_max_rows: must be >= 2")
    if section.grid_points < 3:
        errors.append(f"{path}.grid_points: must be >= 3")
    if section.bins < 1:
        errors.append(f"{path}.bins: must be >= 1")
    if section.density_feature not in FEATURE_NAMES:
        errors.append(f"{path}.density_feature: unknown feature {section.density_feature!r}")
    return section


def parse_config(doc: dict) -> tuple[RunConfig | None, list[str]]:
    """Resolve a raw config mapping; returns (config, errors) with every violation."""
    errors: list[str] = []
    if not isinstance(doc, dict):
        return None, ["config root must be a JSON object"]
    _reject_unknown(doc, {"data", "train", "synthesize", "evaluate"}, "config", errors)
    for key in ("data", "train", "synthesize", "evaluate"):
        if key in doc and not isinstance(doc[key], dict):
            errors.append(f"config.{key}: expected an object")
            doc = {**doc, key: {}}
    config = RunConfig(
        data=_parse_data(doc.get("data", {}), errors),
        train=_parse_train(doc.get("train", {}), errors),
        synthesize=_parse_synthesize(doc.get("synthesize", {}), errors),
        evaluate=_parse_evaluate(doc.get("evaluate", {}), errors),
    )
    if errors:
        return None, errors
    return config, []


def validate_config(path: str | Path) -> tuple[RunConfig | None, list[str]]:
    """Load and resolve a JSON config file; errors carry field paths."""
    path = Path(path)
    if not path.exists():
        return None, [f"config file not found: {path}"]
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        return None, [f"{path}: invalid JSON: {err}"]
    return parse_config(doc)


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply ``--set section.key=value`` style overrides onto a raw mapping.

    Values parse as JSON when possible (numbers, lists, null) and fall back
    to plain strings.
    """
    out = json.loads(json.dumps(doc))  # deep copy
    for item in overrides:
        if "=" not in item:
            raise FormatError(f"override {item!r} must look like key=value")
        dotted, raw = item.split("=", 1)
        keys = [k for k in dotted.strip().split(".") if k]
        if not keys:
            raise FormatError(f"override {item!r} has an empty key path")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise FormatError(f"override {dotted!r} descends into a non-object")
        node[keys[-1]] = value
    return out
