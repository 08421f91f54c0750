"""Trainable components: encoder, conditional generator, critic, classifier.

All four are small MLPs over the 40-column tabular space (float64, leaky
rectifier activations; the critic carries no normalization layers, which
Wasserstein-gradient-penalty training requires). Conditioning is one-hot
label concatenation on the generator and critic inputs.

The generator owns the progressive-level conditioning: feature blocks are
introduced on a coarse-to-fine schedule (network -> temporal ->
behavioral), columns of not-yet-introduced blocks are emitted at a
placeholder (the dataset column mean), and the block introduced at the
current level is blended in by the fade-in factor alpha.

Parameter initialization draws from numpy generators only, so a model is
a pure function of its seed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .benchmark import (
    BLOCK_MAP,
    BLOCK_NAMES,
    FEATURE_KINDS,
    FEATURE_NAMES,
    KIND_CATEGORICAL,
    KIND_RATE,
    N_CLASSES,
    N_FEATURES,
    categorical_groups,
)
from .errors import ConfigurationError, InputError, ShapeError
from .extractors import ExtractorParams

DTYPE = torch.float64

_ENCODER_HIDDEN = (128, 128)
_GENERATOR_HIDDEN = (128, 256)
_CRITIC_HIDDEN = (128, 128)
_CLASSIFIER_HIDDEN = (128, 128)
_LEAK = 0.2
# one-hot labels are tiled this many times before concatenation so the
# conditioning signal is not drowned out by the latent/feature dimensions
_LABEL_TILE = 8


def one_hot(labels, num_classes: int = N_CLASSES) -> torch.Tensor:
    """One-hot encode an int label vector as a float64 tensor."""
    labels = torch.as_tensor(np.asarray(labels), dtype=torch.long)
    if labels.numel() and (labels.min() < 0 or labels.max() >= num_classes):
        raise InputError(f"labels must lie in 0..{num_classes - 1}")
    return torch.nn.functional.one_hot(labels, num_classes).to(DTYPE)


def reparameterize(mu, sigma, epsilon):
    """z = mu + sigma * epsilon, elementwise; differentiable in mu and sigma."""
    if tuple(mu.shape) != tuple(sigma.shape) or tuple(mu.shape) != tuple(epsilon.shape):
        raise ShapeError(
            f"shape mismatch: mu {tuple(mu.shape)}, sigma {tuple(sigma.shape)}, "
            f"epsilon {tuple(epsilon.shape)}"
        )
    return mu + sigma * epsilon


def block_intro_levels(num_levels: int) -> tuple[int, ...]:
    """Level at which each feature block becomes active, in BLOCK_NAMES order."""
    if num_levels < 1:
        raise ConfigurationError(f"num_levels must be >= 1, got {num_levels}")
    return tuple(b * num_levels // len(BLOCK_NAMES) + 1 for b in range(len(BLOCK_NAMES)))


def column_intro_levels(block_map: tuple[str, ...], num_levels: int) -> np.ndarray:
    """Per-column introduction level derived from the block schedule."""
    per_block = dict(zip(BLOCK_NAMES, block_intro_levels(num_levels)))
    return np.array([per_block[b] for b in block_map], dtype=np.int64)


def _check_level(level: int, num_levels: int, alpha: float) -> None:
    if not 1 <= level <= num_levels:
        raise ConfigurationError(f"level {level} outside 1..{num_levels}")
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"alpha {alpha} outside [0, 1]")


def _mlp(widths: tuple[int, ...]) -> nn.Sequential:
    layers: list[nn.Module] = []
    for a, b in zip(widths[:-1], widths[1:]):
        layers.append(nn.Linear(a, b, dtype=DTYPE))
        layers.append(nn.LeakyReLU(_LEAK))
    return nn.Sequential(*layers)


def _require_finite(x: torch.Tensor, what: str) -> None:
    if not torch.isfinite(x).all():
        raise InputError(f"{what} contains non-finite values")


def _tile_labels(y_onehot: torch.Tensor) -> torch.Tensor:
    return torch.as_tensor(y_onehot, dtype=DTYPE).repeat(1, _LABEL_TILE)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureNormalizer:
    """Fixed per-column affine map used to train in a well-scaled space.

    Continuous and count columns are z-scored against the training table;
    rate and one-hot columns pass through untouched (shift 0, scale 1) so
    bounded generator heads stay meaningful.
    """

    shift: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        shift = np.asarray(self.shift, dtype=np.float64).copy()
        scale = np.asarray(self.scale, dtype=np.float64).copy()
        shift.setflags(write=False)
        scale.setflags(write=False)
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "_t_shift", torch.from_numpy(shift.copy()))
        object.__setattr__(self, "_t_scale", torch.from_numpy(scale.copy()))

    @classmethod
    def from_table(cls, features: np.ndarray, kinds: tuple[str, ...]) -> "FeatureNormalizer":
        shift = np.zeros(features.shape[1])
        scale = np.ones(features.shape[1])
        for i, kind in enumerate(kinds):
            if kind in ("continuous", "count"):
                shift[i] = features[:, i].mean()
                scale[i] = max(features[:, i].std(), 1e-6)
        return cls(shift, scale)

    @classmethod
    def identity(cls, n_features: int = N_FEATURES) -> "FeatureNormalizer":
        return cls(np.zeros(n_features), np.ones(n_features))

    def transform(self, x):
        if torch.is_tensor(x):
            return (x - self._t_shift) / self._t_scale
        return (x - self.shift) / self.scale

    def inverse(self, x):
        if torch.is_tensor(x):
            return x * self._t_scale + self._t_shift
        return x * self.scale + self.shift


@dataclass(frozen=True)
class FeatureLayout:
    """Column metadata the generator needs: output heads and block schedule.

    ``runs`` lists contiguous column spans with a shared output transform:
    'linear' for continuous/count columns, 'sigmoid' for rates, 'softmax'
    for each one-hot group.
    """

    n_features: int = N_FEATURES
    kinds: tuple[str, ...] = FEATURE_KINDS
    block_map: tuple[str, ...] = BLOCK_MAP
    runs: tuple[tuple[int, int, str], ...] = field(default=None)

    def __post_init__(self):
        if self.runs is None:
            object.__setattr__(self, "runs", self._build_runs())

    def _build_runs(self) -> tuple[tuple[int, int, str], ...]:
        groups = categorical_groups()
        group_start = {min(v): (min(v), max(v) + 1) for v in groups.values()}
        runs: list[tuple[int, int, str]] = []
        i = 0
        while i < self.n_features:
            if i in group_start:
                a, b = group_start[i]
                runs.append((a, b, "softmax"))
                i = b
                continue
            head = "sigmoid" if self.kinds[i] == KIND_RATE else "linear"
            j = i + 1
            while (
                j < self.n_features
                and self.kinds[j] != KIND_CATEGORICAL
                and ("sigmoid" if self.kinds[j] == KIND_RATE else "linear") == head
            ):
                j += 1
            runs.append((i, j, head))
            i = j
        return tuple(runs)


class Encoder(nn.Module):
    """Maps a feature batch to a diagonal-Gaussian posterior (mu, sigma)."""

    def __init__(self, n_features: int = N_FEATURES, latent_dim: int = 64):
        super().__init__()
        self.latent_dim = latent_dim
        self.backbone = _mlp((n_features,) + _ENCODER_HIDDEN)
        self.mu_head = nn.Linear(_ENCODER_HIDDEN[-1], latent_dim, dtype=DTYPE)
        self.logvar_head = nn.Linear(_ENCODER_HIDDEN[-1], latent_dim, dtype=DTYPE)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        x = torch.as_tensor(x, dtype=DTYPE)
        _require_finite(x, "encoder input")
        h = self.backbone(x)
        mu = self.mu_head(h)
        # log-variance parameterization keeps sigma strictly positive
        logvar = torch.clamp(self.logvar_head(h), -14.0, 14.0)
        return mu, torch.exp(0.5 * logvar)


class Generator(nn.Module):
    """Conditional generator with per-kind output heads and fade-in blending."""

    def __init__(
        self,
        latent_dim: int = 64,
        num_levels: int = 1,
        layout: FeatureLayout | None = None,
        num_classes: int = N_CLASSES,
    ):
        super().__init__()
        self.latent_dim = latent_dim
        self.num_levels = num_levels
        self.layout = layout or FeatureLayout()
        self.backbone = _mlp((latent_dim + num_classes * _LABEL_TILE,) + _GENERATOR_HIDDEN)
        self.head = nn.Linear(_GENERATOR_HIDDEN[-1], self.layout.n_features, dtype=DTYPE)
        intro = column_intro_levels(self.layout.block_map, num_levels)
        self.register_buffer("column_intro", torch.from_numpy(intro))
        self.register_buffer(
            "placeholder", torch.zeros(self.layout.n_features, dtype=DTYPE)
        )

    def set_placeholder(self, values) -> None:
        """Install the dataset-mean placeholder (in the generator's own space)."""
        vec = torch.as_tensor(np.asarray(values, dtype=np.float64), dtype=DTYPE)
        if vec.shape != (self.layout.n_features,):
            raise ShapeError(f"placeholder must have shape ({self.layout.n_features},)")
        with torch.no_grad():
            self.placeholder.copy_(vec)

    def _apply_heads(self, raw: torch.Tensor) -> torch.Tensor:
        pieces = []
        for a, b, head in self.layout.runs:
            chunk = raw[:, a:b]
            if head == "sigmoid":
                pieces.append(torch.sigmoid(chunk))
            elif head == "softmax":
                pieces.append(torch.softmax(chunk, dim=1))
            else:
                pieces.append(chunk)
        return torch.cat(pieces, dim=1)

    def blend_weights(self, level: int, alpha: float) -> torch.Tensor:
        """Per-column mix weight: 1 for active blocks, alpha for the newest, 0 beyond."""
        _check_level(level, self.num_levels, alpha)
        w = torch.zeros(self.layout.n_features, dtype=DTYPE)
        w[self.column_intro < level] = 1.0
        w[self.column_intro == level] = alpha
        return w

    def forward(self, z: torch.Tensor, y_onehot: torch.Tensor, level: int, alpha: float) -> torch.Tensor:
        z = torch.as_tensor(z, dtype=DTYPE)
        y_onehot = torch.as_tensor(y_onehot, dtype=DTYPE)
        if z.shape[0] != y_onehot.shape[0]:
            raise ShapeError("z and y batches must have equal length")
        cond = torch.cat([z, _tile_labels(y_onehot)], dim=1)
        out = self._apply_heads(self.head(self.backbone(cond)))
        w = self.blend_weights(level, alpha)
        if bool((w == 1.0).all()):
            return out
        return w * out + (1.0 - w) * self.placeholder


class Critic(nn.Module):
    """Conditional Wasserstein critic; unbounded scalar scores, no squashing."""

    def __init__(self, n_features: int = N_FEATURES, num_classes: int = N_CLASSES):
        super().__init__()
        self.backbone = _mlp((n_features + num_classes * _LABEL_TILE,) + _CRITIC_HIDDEN)
        self.head = nn.Linear(_CRITIC_HIDDEN[-1], 1, dtype=DTYPE)

    def forward(self, x: torch.Tensor, y_onehot: torch.Tensor) -> torch.Tensor:
        x = torch.as_tensor(x, dtype=DTYPE)
        y_onehot = torch.as_tensor(y_onehot, dtype=DTYPE)
        if x.shape[0] != y_onehot.shape[0]:
            raise ShapeError("x and y batches must have equal length")
        return self.head(self.backbone(torch.cat([x, _tile_labels(y_onehot)], dim=1)))


class Classifier(nn.Module):
    """Five-way attack-type classifier used for the auxiliary task."""

    def __init__(self, n_features: int = N_FEATURES, num_classes: int = N_CLASSES):
        super().__init__()
        self.num_classes = num_classes
        self.backbone = _mlp((n_features,) + _CLASSIFIER_HIDDEN)
        self.head = nn.Linear(_CLASSIFIER_HIDDEN[-1], num_classes, dtype=DTYPE)

    def logits(self, x: torch.Tensor) -> torch.Tensor:
        x = torch.as_tensor(x, dtype=DTYPE)
        _require_finite(x, "classifier input")
        return self.head(self.backbone(x))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Probability rows (nonnegative, each summing to 1)."""
        return torch.softmax(self.logits(x), dim=1)


# ---------------------------------------------------------------------------


def init_parameters(module: nn.Module, rng: np.random.Generator) -> None:
    """Deterministic He-style init driven entirely by a numpy generator."""
    with torch.no_grad():
        for layer in module.modules():
            if isinstance(layer, nn.Linear):
                fan_in = layer.weight.shape[1]
                w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=tuple(layer.weight.shape))
                layer.weight.copy_(torch.from_numpy(w))
                layer.bias.zero_()


def parameters_checksum(module: nn.Module) -> str:
    """SHA-256 over parameter bytes in definition order."""
    h = hashlib.sha256()
    for name, p in module.named_parameters():
        h.update(name.encode())
        h.update(p.detach().numpy().tobytes())
    return h.hexdigest()


def parameters_finite(module: nn.Module) -> bool:
    return all(torch.isfinite(p).all() for p in module.parameters())


@dataclass
class PhantomModels:
    """The trainable quartet plus the frozen apparatus a checkpoint carries."""

    encoder: Encoder
    generator: Generator
    critic: Critic
    classifier: Classifier
    latent_dim: int
    num_levels: int
    normalizer: FeatureNormalizer
    extractor: ExtractorParams | None = None
    feature_names: tuple[str, ...] = FEATURE_NAMES
    block_map: tuple[str, ...] = BLOCK_MAP

    def trainable(self) -> dict[str, nn.Module]:
        return {
            "encoder": self.encoder,
            "generator": self.generator,
            "critic": self.critic,
            "classifier": self.classifier,
        }

    def checksums(self) -> dict[str, str]:
        return {name: parameters_checksum(m) for name, m in self.trainable().items()}

    def all_finite(self) -> bool:
        return all(parameters_finite(m) for m in self.trainable().values())


def build_models(
    latent_dim: int,
    num_levels: int,
    seed: int,
    normalizer: FeatureNormalizer | None = None,
    extractor: ExtractorParams | None = None,
) -> PhantomModels:
    """Construct and deterministically initialize the four networks."""
    if latent_dim < 1:
        raise ConfigurationError(f"latent_dim must be >= 1, got {latent_dim}")
    layout = FeatureLayout()
    models = PhantomModels(
        encoder=Encoder(latent_dim=latent_dim),
        generator=Generator(latent_dim=latent_dim, num_levels=num_levels, layout=layout),
        critic=Critic(),
        classifier=Classifier(),
        latent_dim=latent_dim,
        num_levels=num_levels,
        normalizer=normalizer or FeatureNormalizer.identity(),
        extractor=extractor,
    )
    children = np.random.SeedSequence(seed).spawn(4)
    for child, module in zip(children, models.trainable().values()):
        init_parameters(module, np.random.default_rng(child))
    return models
