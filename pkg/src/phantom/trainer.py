"""Progressive dual-path training loop, replay buffer, and checkpointing.

One training step runs, in order: encode the real batch, reparameterize,
reconstruct through the shared generator, synthesize a fresh batch from
prior noise and sampled labels, extract the frozen block embeddings,
compute every loss term, then apply one update each to the critic, the
generator+encoder pair, and the classifier. All gradients are evaluated
at the step's initial parameters before any update lands, so the three
updates see a consistent snapshot. The critic's fake batch mixes in a
fraction of replayed past generations to keep it from overfitting the
current generator.

Each level ends with a stabilization phase: the critic and classifier
are frozen while the generator-encoder pair minimizes the L1
autoencoding error of the level's data.

Training runs in a normalized feature space (z-scored continuous/count
columns); the domain losses and all persisted outputs use raw feature
space. Every random draw comes from named numpy child generators spawned
from the config seed, so a run is a pure function of (config, data).
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from .benchmark import (
    DEFAULT_PROPORTIONS,
    KIND_COUNT,
    KIND_RATE,
    N_CLASSES,
    N_FEATURES,
    DatasetTable,
    categorical_groups,
    largest_remainder_counts,
)
from .errors import (
    ConfigurationError,
    DivergenceError,
    FormatError,
    InputError,
)
from .extractors import (
    build_extractor,
    extract,
    extractor_from_arrays,
    feature_matching_distance,
)
from .ioutil import atomic_write, atomic_write_text
from .losses import (
    CyberLossConfig,
    LossBreakdown,
    LossWeights,
    _mean_cross_entropy,
    adversarial_losses,
    cyber_loss,
    gradient_penalty,
    kl_divergence,
    resolve_constraints,
    total_generator_objective,
)
from .networks import (
    FeatureNormalizer,
    PhantomModels,
    build_models,
    column_intro_levels,
    one_hot,
    parameters_checksum,
    reparameterize,
)

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1
DIVERGENCE_LIMIT = 1e6

LOG_FIELDS = ("step", "level", "alpha") + LossBreakdown.FIELDS


@dataclass(frozen=True)
class OptimizerConfig:
    """Adam settings; the critic/generator/encoder run momentum-free."""

    eta: float = 2e-4
    beta1_d: float = 0.0
    beta1_ge: float = 0.0
    beta1_c: float = 0.5
    beta2: float = 0.9

    def validate(self) -> None:
        if not self.eta > 0:
            raise ConfigurationError(f"optimizer.eta must be > 0, got {self.eta}")
        for name in ("beta1_d", "beta1_ge", "beta1_c", "beta2"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ConfigurationError(f"optimizer.{name} must lie in [0, 1), got {v}")


@dataclass(frozen=True)
class ReplayConfig:
    capacity: int = 4096
    fraction: float = 0.25  # share of the critic's fake batch drawn from replay

    def validate(self) -> None:
        if self.capacity < 0:
            raise ConfigurationError("replay.capacity must be >= 0")
        if not 0.0 <= self.fraction <= 1.0:
            raise ConfigurationError("replay.fraction must lie in [0, 1]")


@dataclass(frozen=True)
class TrainConfig:
    latent_dim: int = 64
    batch_size: int = 64
    levels: int = 1
    iters_per_level: int = 500
    weights: LossWeights = field(default_factory=LossWeights)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    replay: ReplayConfig = field(default_factory=ReplayConfig)
    stabilization_steps: int = 100
    seed: int = 0
    label_prior: tuple[float, ...] = (0.2, 0.2, 0.2, 0.2, 0.2)
    cyber: CyberLossConfig = field(default_factory=CyberLossConfig)

    def validate(self) -> None:
        for name in ("latent_dim", "batch_size", "levels", "iters_per_level"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if self.stabilization_steps < 0:
            raise ConfigurationError("stabilization_steps must be >= 0")
        if len(self.label_prior) != N_CLASSES:
            raise ConfigurationError(f"label_prior must have {N_CLASSES} entries")
        if abs(sum(self.label_prior) - 1.0) > 1e-9 or min(self.label_prior) < 0:
            raise ConfigurationError("label_prior must be nonnegative and sum to 1")
        self.weights.validate()
        self.optimizer.validate()
        self.replay.validate()


def fade_in_factor(level: int, levels: int) -> float:
    """Linear coarse-to-fine blending coefficient: level / levels."""
    if not 1 <= level <= levels:
        raise ConfigurationError(f"level {level} outside 1..{levels}")
    return level / levels


def resize_samples(
    table: DatasetTable, level: int, alpha: float, num_levels: int
) -> DatasetTable:
    """Level view of a table: later blocks pinned to their column means.

    Columns of blocks introduced after `level` are replaced by the
    training-set column mean; the block introduced at `level` is blended
    alpha * value + (1 - alpha) * mean. With a single level the view is
    the table itself.
    """
    if not 1 <= level <= num_levels:
        raise ConfigurationError(f"level {level} outside 1..{num_levels}")
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"alpha {alpha} outside [0, 1]")
    if num_levels == 1:
        return table
    intro = column_intro_levels(table.block_map, num_levels)
    w = np.where(intro < level, 1.0, np.where(intro == level, alpha, 0.0))
    if bool(np.all(w == 1.0)):
        return table
    means = table.features.mean(axis=0)
    features = w * table.features + (1.0 - w) * means
    return DatasetTable(features, table.labels.copy(), table.feature_names, table.block_map)


class ReplayBuffer:
    """Fixed-capacity FIFO ring of past synthetic samples with labels."""

    policy = "fifo"

    def __init__(self, capacity: int, n_features: int = N_FEATURES):
        self.capacity = capacity
        self._x = np.zeros((max(capacity, 1), n_features))
        self._y = np.zeros(max(capacity, 1), dtype=np.int64)
        self._size = 0
        self._next = 0

    @property
    def size(self) -> int:
        return self._size

    def push(self, x: np.ndarray, y: np.ndarray) -> None:
        if self.capacity == 0:
            return
        for row, label in zip(np.asarray(x), np.asarray(y)):
            self._x[self._next] = row
            self._y[self._next] = label
            self._next = (self._next + 1) % self.capacity
            self._size = min(self._size + 1, self.capacity)

    def sample(self, k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        if k > self._size:
            raise InputError(f"requested {k} replay samples but only {self._size} stored")
        idx = rng.choice(self._size, size=k, replace=False)
        return self._x[idx].copy(), self._y[idx].copy()


@dataclass
class StabilizationReport:
    level: int
    steps: int
    l1_before: float
    l1_after: float


@dataclass
class LogRow:
    step: int
    level: int
    alpha: float
    losses: LossBreakdown

    def as_list(self) -> list[float]:
        return [self.step, self.level, self.alpha] + [
            float(getattr(self.losses, f)) for f in LossBreakdown.FIELDS
        ]


@dataclass
class TrainResult:
    models: PhantomModels
    log: list[LogRow]
    stabilization: list[StabilizationReport]


class Trainer:
    """Owns models, optimizers, replay buffer, and the seeded RNG streams."""

    def __init__(self, config: TrainConfig, data: DatasetTable):
        config.validate()
        data.validate()
        if data.n == 0:
            raise InputError("training data is empty")
        self.config = config
        self.data = data

        names = (
            "init", "extractor", "batch", "latent", "epsilon",
            "labels", "gp", "replay", "stabilize",
        )
        children = np.random.SeedSequence(config.seed).spawn(len(names))
        self._rng = {n: np.random.default_rng(c) for n, c in zip(names, children)}
        # the extractor seed must be scalar-reproducible for checkpoints
        self._extractor_seed = int(self._rng["extractor"].integers(2**31 - 1))

        normalizer = FeatureNormalizer.from_table(data.features, data.kinds())
        extractor = build_extractor(self._extractor_seed, data.block_map)
        self.models = build_models(
            latent_dim=config.latent_dim,
            num_levels=config.levels,
            seed=int(self._rng["init"].integers(2**31 - 1)),
            normalizer=normalizer,
            extractor=extractor,
        )
        # placeholder = column means mapped into the training space
        self._column_means = data.features.mean(axis=0)
        self.models.generator.set_placeholder(normalizer.transform(self._column_means))

        opt = config.optimizer
        self.opt_d = torch.optim.Adam(
            self.models.critic.parameters(), lr=opt.eta, betas=(opt.beta1_d, opt.beta2)
        )
        self.opt_ge = torch.optim.Adam(
            list(self.models.generator.parameters()) + list(self.models.encoder.parameters()),
            lr=opt.eta,
            betas=(opt.beta1_ge, opt.beta2),
        )
        self.opt_c = torch.optim.Adam(
            self.models.classifier.parameters(), lr=opt.eta, betas=(opt.beta1_c, opt.beta2)
        )

        self.buffer = ReplayBuffer(config.replay.capacity)
        self.constraints = resolve_constraints(config.cyber.constraints, data.feature_names)
        self.step_count = 0
        self.level = 1
        self.alpha = fade_in_factor(1, config.levels)

    # -- helpers ----------------------------------------------------------

    def extractor_checksum(self) -> str:
        return self.models.extractor.checksum()

    def _check_breakdown(self, br: LossBreakdown) -> None:
        for name in LossBreakdown.FIELDS:
            v = float(getattr(br, name))
            if not np.isfinite(v) or abs(v) > DIVERGENCE_LIMIT:
                raise DivergenceError(name, v, self.step_count)

    def _sample_batch_indices(self, n: int) -> np.ndarray:
        m = self.config.batch_size
        rng = self._rng["batch"]
        if n >= m:
            return rng.choice(n, size=m, replace=False)
        return rng.integers(0, n, size=m)

    # -- core step --------------------------------------------------------

    def train_step(self, x_raw: np.ndarray, y_raw: np.ndarray) -> LossBreakdown:
        """One multi-task update from a raw-space batch of the level view."""
        cfg = self.config
        w = cfg.weights
        m = x_raw.shape[0]
        models = self.models
        normalizer = models.normalizer

        x_r_raw = torch.from_numpy(np.asarray(x_raw, dtype=np.float64))
        xn = normalizer.transform(x_r_raw)
        y_r = np.asarray(y_raw, dtype=np.int64)
        y_r_onehot = one_hot(y_r)

        eps = torch.from_numpy(self._rng["epsilon"].standard_normal((m, cfg.latent_dim)))
        z = torch.from_numpy(self._rng["latent"].standard_normal((m, cfg.latent_dim)))
        y_s = self._rng["labels"].choice(N_CLASSES, size=m, p=cfg.label_prior)
        y_s_onehot = one_hot(y_s)

        # dual generation paths
        mu, sigma = models.encoder(xn)
        z_c = reparameterize(mu, sigma, eps)
        x_recon = models.generator(z_c, y_r_onehot, self.level, self.alpha)
        x_syn = models.generator(z, y_s_onehot, self.level, self.alpha)

        # reconstruction + KL
        recon_mse = ((xn - x_recon) ** 2).mean()
        kl = kl_divergence(mu, sigma)

        # critic update inputs: fake batch mixes replayed generations
        x_fake_d = x_syn.detach().clone()
        y_fake = y_s.copy()
        k = int(cfg.replay.fraction * m)
        if k > 0 and self.buffer.size >= k:
            bx, by = self.buffer.sample(k, self._rng["replay"])
            pos = self._rng["replay"].choice(m, size=k, replace=False)
            x_fake_d[torch.from_numpy(pos)] = torch.from_numpy(bx)
            y_fake[pos] = by
        y_fake_onehot = one_hot(y_fake)

        d_real = models.critic(xn, y_r_onehot)
        d_fake_mix = models.critic(x_fake_d, y_fake_onehot)
        gp = gradient_penalty(
            models.critic, xn, x_fake_d, y_r_onehot, rng=self._rng["gp"], create_graph=True
        )
        _, adv_d = adversarial_losses(d_real, d_fake_mix, gp, w.gradient_penalty)

        # generator-side scores use the graph-connected synthetic batch
        d_fake_g = models.critic(x_syn, y_s_onehot)
        adv_g, _ = adversarial_losses(d_real.detach(), d_fake_g, 0.0, 0.0)

        f_real = extract(xn, models.extractor)
        f_syn = extract(x_syn, models.extractor)
        fm = feature_matching_distance(f_real, f_syn, w.omega)

        class_syn = _mean_cross_entropy(models.classifier, x_syn, y_s)
        class_real = _mean_cross_entropy(models.classifier, xn, y_r)

        # domain losses act in raw feature space where constraints mean something
        x_syn_raw = normalizer.inverse(x_syn)
        temporal, causal, diversity, _ = cyber_loss(
            x_syn_raw, x_r_raw, models.block_map, self.constraints, cfg.cyber.tau
        )

        parts = LossBreakdown(
            recon=recon_mse, kl=kl, adv_g=adv_g, adv_d=adv_d, gp=gp, fm=fm,
            class_syn=class_syn, class_real=class_real,
            temporal=temporal, causal=causal, diversity=diversity,
        )
        total_g = total_generator_objective(parts, w)
        total_c = class_syn + class_real

        breakdown = LossBreakdown(
            **{k2: float(v) for k2, v in parts.as_dict().items()
               if k2 not in ("total_g", "total_d", "total_c")},
            total_g=float(total_g.detach()),
            total_d=float(adv_d.detach()),
            total_c=float(total_c.detach()),
        )
        self._check_breakdown(breakdown)

        # all gradients taken at the pre-update parameter snapshot
        d_params = list(models.critic.parameters())
        ge_params = list(models.generator.parameters()) + list(models.encoder.parameters())
        c_params = list(models.classifier.parameters())
        g_d = torch.autograd.grad(adv_d, d_params, retain_graph=True, allow_unused=True)
        g_ge = torch.autograd.grad(total_g, ge_params, retain_graph=True, allow_unused=True)
        g_c = torch.autograd.grad(total_c, c_params, allow_unused=True)

        for opt, params, grads in (
            (self.opt_d, d_params, g_d),
            (self.opt_ge, ge_params, g_ge),
            (self.opt_c, c_params, g_c),
        ):
            for p, g in zip(params, grads):
                p.grad = g
            opt.step()
            for p in params:
                p.grad = None

        if not models.all_finite():
            raise DivergenceError("parameters", float("nan"), self.step_count)

        self.buffer.push(x_syn.detach().numpy(), y_s)
        self.step_count += 1
        return breakdown

    # -- stabilization ----------------------------------------------------

    def _probe_batch(self, view: DatasetTable) -> tuple[torch.Tensor, torch.Tensor]:
        n = min(512, view.n)
        idx = np.linspace(0, view.n - 1, n).astype(int)
        xn = self.models.normalizer.transform(
            torch.from_numpy(view.features[idx].astype(np.float64))
        )
        return xn, one_hot(view.labels[idx])

    def _l1_reconstruction(self, xn: torch.Tensor, y_onehot: torch.Tensor) -> float:
        with torch.no_grad():
            mu, _ = self.models.encoder(xn)
            x_rec = self.models.generator(mu, y_onehot, self.level, self.alpha)
            return float((xn - x_rec).abs().mean())

    def stabilization_phase(self, view: DatasetTable, steps: int | None = None) -> StabilizationReport:
        """Freeze critic and classifier; refine G and E on L1 autoencoding.

        The encoder mean (no sampling) drives the reconstruction, matching
        the phase's goal of settling a deterministic round-trip. Aborts if
        the probe L1 error worsens by more than 5%.
        """
        steps = self.config.stabilization_steps if steps is None else steps
        if steps == 0:
            return StabilizationReport(self.level, 0, 0.0, 0.0)
        models = self.models
        sum_d = parameters_checksum(models.critic)
        sum_c = parameters_checksum(models.classifier)

        probe_x, probe_y = self._probe_batch(view)
        before = self._l1_reconstruction(probe_x, probe_y)

        ge_params = list(models.generator.parameters()) + list(models.encoder.parameters())
        for _ in range(steps):
            idx = self._rng["stabilize"].choice(
                view.n, size=min(self.config.batch_size, view.n), replace=False
            )
            xn = models.normalizer.transform(
                torch.from_numpy(view.features[idx].astype(np.float64))
            )
            y_onehot = one_hot(view.labels[idx])
            mu, _ = models.encoder(xn)
            x_rec = models.generator(mu, y_onehot, self.level, self.alpha)
            l1 = (xn - x_rec).abs().mean()
            l1_value = float(l1.detach())
            if not np.isfinite(l1_value) or l1_value > DIVERGENCE_LIMIT:
                raise DivergenceError("stabilization_l1", l1_value, self.step_count)
            grads = torch.autograd.grad(l1, ge_params, allow_unused=True)
            for p, g in zip(ge_params, grads):
                p.grad = g
            self.opt_ge.step()
            for p in ge_params:
                p.grad = None

        after = self._l1_reconstruction(probe_x, probe_y)
        if after > before * 1.05 + 1e-12:
            raise DivergenceError("stabilization_l1", after, self.step_count)
        if parameters_checksum(models.critic) != sum_d or (
            parameters_checksum(models.classifier) != sum_c
        ):  # pragma: no cover - internal safety net
            raise RuntimeError("stabilization phase mutated frozen critic/classifier")
        return StabilizationReport(self.level, steps, before, after)

    # -- full run ---------------------------------------------------------

    def run(self) -> TrainResult:
        cfg = self.config
        extractor_before = self.extractor_checksum()
        rows: list[LogRow] = []
        stab_reports: list[StabilizationReport] = []
        for level in range(1, cfg.levels + 1):
            self.level = level
            self.alpha = fade_in_factor(level, cfg.levels)
            view = resize_samples(self.data, level, self.alpha, cfg.levels)
            log.info("level %d/%d (alpha=%.3f): %d iterations",
                     level, cfg.levels, self.alpha, cfg.iters_per_level)
            for _ in range(cfg.iters_per_level):
                idx = self._sample_batch_indices(view.n)
                br = self.train_step(view.features[idx], view.labels[idx])
                rows.append(LogRow(self.step_count, level, self.alpha, br))
            if cfg.stabilization_steps > 0:
                stab_reports.append(self.stabilization_phase(view))
        if self.extractor_checksum() != extractor_before:  # pragma: no cover
            raise RuntimeError("feature extractor parameters changed during training")
        return TrainResult(self.models, rows, stab_reports)


def train(config: TrainConfig, data: DatasetTable) -> TrainResult:
    """Run the full progressive schedule; reproducible from (config, data)."""
    return Trainer(config, data).run()


# ---------------------------------------------------------------------------
# Synthesis
# ---------------------------------------------------------------------------


def _resolve_label_counts(n: int, labels) -> np.ndarray:
    if labels is None:
        return largest_remainder_counts(n, np.array(DEFAULT_PROPORTIONS))
    if isinstance(labels, dict):
        counts = np.zeros(N_CLASSES, dtype=int)
        for c, k in labels.items():
            if not 0 <= int(c) < N_CLASSES:
                raise ConfigurationError(f"label class {c} outside 0..{N_CLASSES - 1}")
            counts[int(c)] = int(k)
    else:
        counts = np.asarray(list(labels), dtype=int)
        if counts.shape != (N_CLASSES,):
            raise ConfigurationError(f"label mix must have {N_CLASSES} entries")
    if counts.min() < 0 or counts.sum() != n:
        raise ConfigurationError(
            f"label counts must be nonnegative and sum to n={n}, got {counts.tolist()}"
        )
    return counts


def _harden(features: np.ndarray, kinds: tuple[str, ...]) -> np.ndarray:
    """Enforce table invariants on raw generator output."""
    out = features.copy()
    for i, kind in enumerate(kinds):
        if kind == KIND_COUNT:
            out[:, i] = np.clip(np.round(out[:, i]), 0, None)
        elif kind == KIND_RATE:
            out[:, i] = np.clip(out[:, i], 0.0, 1.0)
    for members in categorical_groups().values():
        block = out[:, members]
        hard = np.zeros_like(block)
        hard[np.arange(block.shape[0]), block.argmax(axis=1)] = 1.0
        out[:, members] = hard
    return out


def synthesize(
    models: PhantomModels,
    n: int,
    labels=None,
    seed: int = 0,
    batch_rows: int = 8192,
) -> DatasetTable:
    """Draw n synthetic rows from the trained generator at full resolution.

    Labels default to the benchmark class mix; pass per-class counts (dict
    or length-5 sequence) to override. Counts are rounded, rates clipped,
    and one-hot groups hardened so the output satisfies table invariants.
    """
    if n < 0:
        raise ConfigurationError(f"n must be >= 0, got {n}")
    names = models.feature_names
    kinds = DatasetTable(np.zeros((0, len(names))), np.zeros(0, dtype=int), names,
                         models.block_map).kinds()
    if n == 0:
        return DatasetTable(np.zeros((0, len(names))), np.zeros(0, dtype=int),
                            names, models.block_map)

    counts = _resolve_label_counts(n, labels)
    children = np.random.SeedSequence(seed).spawn(2)
    label_vec = np.repeat(np.arange(N_CLASSES), counts)
    label_vec = label_vec[np.random.default_rng(children[0]).permutation(n)]
    z_all = np.random.default_rng(children[1]).standard_normal((n, models.latent_dim))

    outputs = []
    with torch.no_grad():
        for start in range(0, n, batch_rows):
            stop = min(start + batch_rows, n)
            z = torch.from_numpy(z_all[start:stop])
            y = one_hot(label_vec[start:stop])
            norm = models.generator(z, y, models.num_levels, 1.0)
            outputs.append(models.normalizer.inverse(norm).numpy())
    features = _harden(np.concatenate(outputs, axis=0), kinds)
    table = DatasetTable(features, label_vec, names, models.block_map)
    table.validate()
    return table


# ---------------------------------------------------------------------------
# Persistence: checkpoints and loss logs
# ---------------------------------------------------------------------------


def save_checkpoint(models: PhantomModels, config: TrainConfig, out_dir: str | Path,
                    step: int) -> Path:
    """Write a checkpoint directory: JSON manifest + portable .npz arrays."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    arrays: dict[str, np.ndarray] = {}
    for net_name, module in models.trainable().items():
        for pname, p in module.named_parameters():
            arrays[f"{net_name}.{pname}"] = p.detach().numpy()
        for bname, b in module.named_buffers():
            arrays[f"{net_name}.buffer.{bname}"] = b.detach().numpy()
    for block, weight in models.extractor.weights.items():
        arrays[f"extractor.{block}.weight"] = np.asarray(weight)
        arrays[f"extractor.{block}.bias"] = np.asarray(models.extractor.biases[block])
    arrays["normalizer.shift"] = np.asarray(models.normalizer.shift)
    arrays["normalizer.scale"] = np.asarray(models.normalizer.scale)

    manifest = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "step": step,
        "latent_dim": models.latent_dim,
        "num_levels": models.num_levels,
        "feature_names": list(models.feature_names),
        "block_map": list(models.block_map),
        "architecture": {
            "family": "mlp",
            "activation": "leaky_relu_0.2",
            "layer_shapes": {
                f"{net}.{pname}": list(p.shape)
                for net, module in models.trainable().items()
                for pname, p in module.named_parameters()
            },
            "extractor_nonlinearity": models.extractor.nonlinearity,
            "extractor_seed": models.extractor.seed,
        },
        "optimizer": asdict(config.optimizer),
        "seeds": {"train_seed": config.seed},
        "config": asdict(config),
    }
    def _write_npz(tmp: Path) -> None:
        with tmp.open("wb") as fh:
            np.savez(fh, **arrays)

    atomic_write(out_dir / "params.npz", _write_npz)
    atomic_write_text(
        out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True)
    )
    return out_dir


def load_checkpoint(path: str | Path) -> tuple[PhantomModels, dict]:
    """Rebuild models from a checkpoint directory written by save_checkpoint."""
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.exists():
        raise FormatError(f"{path}: missing manifest.json")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise FormatError(
            f"{path}: unsupported checkpoint format {manifest.get('format_version')!r}"
        )
    with np.load(path / "params.npz") as loaded:
        arrays = {k: loaded[k] for k in loaded.files}

    block_map = tuple(manifest["block_map"])
    normalizer = FeatureNormalizer(arrays["normalizer.shift"], arrays["normalizer.scale"])
    extractor = extractor_from_arrays(
        seed=manifest["architecture"]["extractor_seed"],
        block_map=block_map,
        weights={b: arrays[f"extractor.{b}.weight"] for b in ("network", "temporal", "behavioral")},
        biases={b: arrays[f"extractor.{b}.bias"] for b in ("network", "temporal", "behavioral")},
    )
    models = build_models(
        latent_dim=manifest["latent_dim"],
        num_levels=manifest["num_levels"],
        seed=0,
        normalizer=normalizer,
        extractor=extractor,
    )
    models.feature_names = tuple(manifest["feature_names"])
    models.block_map = block_map
    with torch.no_grad():
        for net_name, module in models.trainable().items():
            for pname, p in module.named_parameters():
                p.copy_(torch.from_numpy(arrays[f"{net_name}.{pname}"]))
            for bname, b in module.named_buffers():
                b.copy_(torch.from_numpy(arrays[f"{net_name}.buffer.{bname}"]))
    return models, manifest


def write_loss_log(rows: list[LogRow], path: str | Path) -> None:
    """Per-step loss breakdown as CSV, one row per training step."""

    def _write(tmp: Path) -> None:
        with tmp.open("w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(LOG_FIELDS) + "\n")
            for row in rows:
                values = row.as_list()
                fh.write("%d,%d,%.17g," % (values[0], values[1], values[2]))
                fh.write(",".join("%.17g" % v for v in values[3:]))
                fh.write("\n")

    atomic_write(path, _write)


def read_loss_log(path: str | Path) -> list[dict[str, float]]:
    path = Path(path)
    out = []
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header != list(LOG_FIELDS):
            raise FormatError(f"{path}: unexpected loss log header")
        for line in fh:
            if line.strip():
                out.append(dict(zip(LOG_FIELDS, map(float, line.strip().split(",")))))
    return out
