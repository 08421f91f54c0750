"""Frozen domain feature extractors and the feature-matching distance.

Each of the three feature blocks (network, temporal, behavioral) gets a
fixed random affine projection to 32 dimensions followed by tanh. The
projections are built once from a seed and never trained; random
projections preserve relative geometry well enough for batch-statistic
matching, and keeping them frozen means the matching target cannot drift
during adversarial training.

`extract` and `feature_matching_distance` accept numpy arrays or torch
tensors and return the same flavor, so the trainer can differentiate
through them while tests and offline tooling stay in numpy.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import torch

from .benchmark import BLOCK_NAMES, BLOCK_MAP, N_FEATURES
from .errors import ConfigurationError, ShapeError

EMBED_DIM = 32


@dataclass(frozen=True)
class ExtractorParams:
    """Per-block frozen projection weights; a pure function of (seed, block_map)."""

    seed: int
    block_map: tuple[str, ...]
    weights: dict[str, np.ndarray] = field(repr=False)  # block -> (width, 32)
    biases: dict[str, np.ndarray] = field(repr=False)  # block -> (32,)
    nonlinearity: str = "tanh"
    # torch copies cached at build time so extraction inside autograd does
    # not re-copy per call
    _torch_weights: dict[str, torch.Tensor] = field(repr=False, compare=False, default=None)
    _torch_biases: dict[str, torch.Tensor] = field(repr=False, compare=False, default=None)

    def block_indices(self, block: str) -> np.ndarray:
        return np.array([i for i, b in enumerate(self.block_map) if b == block])

    def checksum(self) -> str:
        """SHA-256 over all parameter bytes; used to assert frozen-ness."""
        h = hashlib.sha256()
        for block in BLOCK_NAMES:
            h.update(self.weights[block].tobytes())
            h.update(self.biases[block].tobytes())
        return h.hexdigest()


def build_extractor(seed: int, block_map: tuple[str, ...] = BLOCK_MAP) -> ExtractorParams:
    """Construct the three frozen projections from a seed."""
    if len(block_map) != N_FEATURES:
        raise ConfigurationError(
            f"block_map must cover {N_FEATURES} features, got {len(block_map)}"
        )
    weights: dict[str, np.ndarray] = {}
    biases: dict[str, np.ndarray] = {}
    children = np.random.SeedSequence(seed).spawn(len(BLOCK_NAMES))
    for block, child in zip(BLOCK_NAMES, children):
        width = sum(1 for b in block_map if b == block)
        if width == 0:
            raise ConfigurationError(f"block {block!r} has no features in block_map")
        rng = np.random.default_rng(child)
        w = rng.normal(0.0, 1.0 / np.sqrt(width), size=(width, EMBED_DIM))
        b = rng.normal(0.0, 0.1, size=EMBED_DIM)
        w.setflags(write=False)
        b.setflags(write=False)
        weights[block] = w
        biases[block] = b
    torch_w = {k: torch.from_numpy(v.copy()) for k, v in weights.items()}
    torch_b = {k: torch.from_numpy(v.copy()) for k, v in biases.items()}
    return ExtractorParams(
        seed=seed,
        block_map=tuple(block_map),
        weights=weights,
        biases=biases,
        _torch_weights=torch_w,
        _torch_biases=torch_b,
    )


def extractor_from_arrays(
    seed: int,
    block_map: tuple[str, ...],
    weights: dict[str, np.ndarray],
    biases: dict[str, np.ndarray],
) -> ExtractorParams:
    """Rehydrate frozen extractor params from persisted arrays."""
    frozen_w = {}
    frozen_b = {}
    for block in BLOCK_NAMES:
        w = np.asarray(weights[block], dtype=np.float64).copy()
        b = np.asarray(biases[block], dtype=np.float64).copy()
        w.setflags(write=False)
        b.setflags(write=False)
        frozen_w[block] = w
        frozen_b[block] = b
    return ExtractorParams(
        seed=seed,
        block_map=tuple(block_map),
        weights=frozen_w,
        biases=frozen_b,
        _torch_weights={k: torch.from_numpy(v.copy()) for k, v in frozen_w.items()},
        _torch_biases={k: torch.from_numpy(v.copy()) for k, v in frozen_b.items()},
    )


@dataclass
class FeatureBundle:
    """The three m x 32 block embeddings of one batch."""

    f_network: np.ndarray | torch.Tensor
    f_temporal: np.ndarray | torch.Tensor
    f_behavioral: np.ndarray | torch.Tensor

    def blocks(self):
        return (self.f_network, self.f_temporal, self.f_behavioral)


def extract(batch, params: ExtractorParams) -> FeatureBundle:
    """Project each feature block of an m x 40 batch to its 32-d embedding."""
    is_torch = torch.is_tensor(batch)
    n_cols = batch.shape[1] if batch.ndim == 2 else -1
    if batch.ndim != 2 or n_cols != len(params.block_map):
        raise ShapeError(
            f"batch must be m x {len(params.block_map)}, got shape {tuple(batch.shape)}"
        )
    outs = []
    for block in BLOCK_NAMES:
        idx = params.block_indices(block)
        if is_torch:
            w = params._torch_weights[block].to(batch.dtype)
            b = params._torch_biases[block].to(batch.dtype)
            outs.append(torch.tanh(batch[:, idx] @ w + b))
        else:
            outs.append(np.tanh(batch[:, idx] @ params.weights[block] + params.biases[block]))
    return FeatureBundle(*outs)


def feature_matching_distance(a: FeatureBundle, b: FeatureBundle, omega) -> float | torch.Tensor:
    """Weighted sum of block-mean embedding gaps: sum_i w_i * ||mean(a_i) - mean(b_i)||_2.

    Matches batch statistics rather than per-sample pairs: generated and
    real batches have no row correspondence, so only their block-wise mean
    embeddings are compared.
    """
    if len(omega) != len(BLOCK_NAMES):
        raise ShapeError(f"omega must have {len(BLOCK_NAMES)} entries")
    blocks_a = a.blocks()
    blocks_b = b.blocks()
    any_torch = any(torch.is_tensor(x) for x in blocks_a + blocks_b)
    total = None
    for w, xa, xb in zip(omega, blocks_a, blocks_b):
        if tuple(xa.shape) != tuple(xb.shape):
            raise ShapeError(
                f"bundle shapes differ: {tuple(xa.shape)} vs {tuple(xb.shape)}"
            )
        if any_torch:
            xa = torch.as_tensor(xa)
            xb = torch.as_tensor(xb)
            gap = torch.linalg.vector_norm(xa.mean(dim=0) - xb.mean(dim=0))
        else:
            gap = np.linalg.norm(xa.mean(axis=0) - xb.mean(axis=0))
        term = w * gap
        total = term if total is None else total + term
    if not any_torch:
        return float(total)
    return total
