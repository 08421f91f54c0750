"""The five loss families driving training, plus the gradient penalty.

Reconstruction (MSE + weighted KL), Wasserstein adversarial pair with
gradient penalty, batch-statistic feature matching (in `extractors`),
two-sided classification cross-entropy, and the domain triple: temporal
first-difference matching, monotone-constraint hinge, and a diversity
hinge on mean pairwise spread.

All functions are pure and operate on torch tensors (numpy input is
converted), returning scalars that stay on the autograd graph when their
inputs carry gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
import torch

from .benchmark import DEFAULT_CONSTRAINTS, N_CLASSES
from .errors import (
    ConfigurationError,
    DomainError,
    InputError,
    NumericalError,
    ShapeError,
)


@dataclass(frozen=True)
class LossWeights:
    """Multi-task weights; defaults are the standard configuration."""

    adversarial: float = 1.0  # lambda_1
    reconstruction: float = 10.0  # lambda_2
    feature_matching: float = 5.0  # lambda_3
    classification: float = 1.0  # lambda_4
    cyber: float = 0.1  # lambda_5
    gradient_penalty: float = 10.0  # lambda_gp
    kl: float = 1.0  # beta
    omega: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def validate(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            vals = value if isinstance(value, tuple) else (value,)
            for v in vals:
                if not math.isfinite(v) or v < 0:
                    raise ConfigurationError(f"loss weight {f.name} must be finite and >= 0")
        if len(self.omega) != 3:
            raise ConfigurationError("omega must have exactly 3 entries")


@dataclass(frozen=True)
class CyberLossConfig:
    """Domain-loss knobs: diversity margin and monotone feature constraints."""

    tau: float = 0.1
    constraints: tuple[tuple[str, str], ...] = DEFAULT_CONSTRAINTS


@dataclass
class LossBreakdown:
    """One training step's loss terms; totals are the optimized objectives."""

    recon: float = 0.0
    kl: float = 0.0
    adv_g: float = 0.0
    adv_d: float = 0.0
    gp: float = 0.0
    fm: float = 0.0
    class_syn: float = 0.0
    class_real: float = 0.0
    temporal: float = 0.0
    causal: float = 0.0
    diversity: float = 0.0
    total_g: float = 0.0
    total_d: float = 0.0
    total_c: float = 0.0

    FIELDS = (
        "recon", "kl", "adv_g", "adv_d", "gp", "fm", "class_syn", "class_real",
        "temporal", "causal", "diversity", "total_g", "total_d", "total_c",
    )

    def as_dict(self) -> dict[str, float]:
        out = {}
        for name in self.FIELDS:
            v = getattr(self, name)
            out[name] = float(v.detach() if torch.is_tensor(v) else v)
        return out


def _as_tensor(x) -> torch.Tensor:
    if torch.is_tensor(x):
        return x.to(torch.float64) if x.dtype != torch.float64 else x
    return torch.as_tensor(np.asarray(x, dtype=np.float64))


def kl_divergence(mu, sigma) -> torch.Tensor:
    """KL(N(mu, diag sigma^2) || N(0, I)), averaged over the batch."""
    mu = _as_tensor(mu)
    sigma = _as_tensor(sigma)
    if mu.shape != sigma.shape:
        raise ShapeError(f"mu shape {tuple(mu.shape)} != sigma shape {tuple(sigma.shape)}")
    if not bool((sigma > 0).all()):
        raise DomainError("sigma must be strictly positive")
    if mu.ndim == 1:
        mu = mu.unsqueeze(0)
        sigma = sigma.unsqueeze(0)
    per_sample = 0.5 * (mu**2 + sigma**2 - 1.0 - torch.log(sigma**2)).sum(dim=1)
    return per_sample.mean()


def reconstruction_loss(x_r, x_recon, mu, sigma, beta: float) -> torch.Tensor:
    """Mean squared reconstruction error plus beta-weighted KL."""
    x_r = _as_tensor(x_r)
    x_recon = _as_tensor(x_recon)
    if x_r.shape != x_recon.shape:
        raise ShapeError(
            f"x_r shape {tuple(x_r.shape)} != x_recon shape {tuple(x_recon.shape)}"
        )
    mse = ((x_r - x_recon) ** 2).mean()
    return mse + beta * kl_divergence(mu, sigma)


def gradient_penalty(
    critic,
    x_real,
    x_fake,
    y_onehot,
    t: torch.Tensor | None = None,
    rng: np.random.Generator | None = None,
    create_graph: bool = True,
) -> torch.Tensor:
    """Two-sided penalty on the critic's input-gradient norm at interpolates.

    Interpolation coefficients come from `t` when given (one per sample),
    otherwise they are drawn Uniform(0,1) from `rng`; exactly one of the
    two must be supplied so callers own the randomness.
    """
    x_real = _as_tensor(x_real)
    x_fake = _as_tensor(x_fake)
    if x_real.shape != x_fake.shape:
        raise ShapeError(
            f"real shape {tuple(x_real.shape)} != fake shape {tuple(x_fake.shape)}"
        )
    m = x_real.shape[0]
    if m == 0:
        raise InputError("gradient penalty needs a nonempty batch")
    if t is None:
        if rng is None:
            raise ConfigurationError("gradient_penalty needs either t or rng")
        t = torch.from_numpy(rng.uniform(size=(m, 1)))
    else:
        t = _as_tensor(t).reshape(m, 1)

    x_hat = (t * x_real + (1.0 - t) * x_fake).detach().requires_grad_(True)
    scores = critic(x_hat, y_onehot)
    grads = torch.autograd.grad(scores.sum(), x_hat, create_graph=create_graph)[0]
    if not torch.isfinite(grads).all():
        raise NumericalError("critic gradient is non-finite at interpolates")
    # epsilon keeps the norm differentiable at zero-gradient points
    norms = torch.sqrt((grads**2).sum(dim=1) + 1e-12)
    return ((norms - 1.0) ** 2).mean()


def adversarial_losses(real_scores, fake_scores, gp, lambda_gp: float):
    """Wasserstein pair: adv_g = -E[fake]; adv_d = E[fake] - E[real] + gp term."""
    real_scores = _as_tensor(real_scores)
    fake_scores = _as_tensor(fake_scores)
    if real_scores.numel() == 0 or fake_scores.numel() == 0:
        raise InputError("score vectors must be nonempty")
    fake_mean = fake_scores.mean()
    adv_g = -fake_mean
    adv_d = fake_mean - real_scores.mean() + lambda_gp * _as_tensor(gp)
    return adv_g, adv_d


def _mean_cross_entropy(classifier, x, labels) -> torch.Tensor:
    labels = torch.as_tensor(np.asarray(labels), dtype=torch.long)
    if labels.numel() == 0:
        raise InputError("empty label batch")
    if labels.min() < 0 or labels.max() >= N_CLASSES:
        raise InputError(f"labels must lie in 0..{N_CLASSES - 1}")
    return torch.nn.functional.cross_entropy(classifier.logits(_as_tensor(x)), labels)


def classification_loss(classifier, x_syn, y_s, x_r, y_r) -> torch.Tensor:
    """Sum of mean cross-entropies on synthetic and real batches."""
    return _mean_cross_entropy(classifier, x_syn, y_s) + _mean_cross_entropy(
        classifier, x_r, y_r
    )


def resolve_constraints(
    constraints: tuple[tuple[str, str], ...], feature_names: tuple[str, ...]
) -> tuple[tuple[int, int], ...]:
    """Map (lhs <= rhs) feature-name pairs to column index pairs."""
    index = {n: i for i, n in enumerate(feature_names)}
    out = []
    for lhs, rhs in constraints:
        if lhs not in index or rhs not in index:
            raise ConfigurationError(f"constraint references unknown feature: {lhs!r} <= {rhs!r}")
        out.append((index[lhs], index[rhs]))
    return tuple(out)


def cyber_loss(
    x_syn,
    x_r,
    block_map: tuple[str, ...],
    constraints: tuple[tuple[int, int], ...] = (),
    tau: float = 0.1,
):
    """Domain triple: (temporal, causal, diversity, total), each >= 0.

    temporal: squared gap between real and synthetic batch-mean first
    differences along the ordered temporal columns. causal: mean hinge
    violation of the configured monotone pairs, evaluated on the synthetic
    batch. diversity: hinge at margin tau on the mean pairwise distance
    within the synthetic batch (0 when fewer than two rows).
    """
    x_syn = _as_tensor(x_syn)
    x_r = _as_tensor(x_r)
    n_cols = len(block_map)
    if x_syn.shape[1] != n_cols or x_r.shape[1] != n_cols:
        raise ShapeError(f"batches must have {n_cols} columns")
    for lhs, rhs in constraints:
        if not (0 <= lhs < n_cols and 0 <= rhs < n_cols):
            raise ConfigurationError(
                f"constraint index pair ({lhs}, {rhs}) outside 0..{n_cols - 1}"
            )

    t_idx = [i for i, b in enumerate(block_map) if b == "temporal"]
    if len(t_idx) >= 2:
        diff_syn = (x_syn[:, t_idx[1:]] - x_syn[:, t_idx[:-1]]).mean(dim=0)
        diff_r = (x_r[:, t_idx[1:]] - x_r[:, t_idx[:-1]]).mean(dim=0)
        temporal = ((diff_r - diff_syn) ** 2).mean()
    else:
        temporal = torch.zeros((), dtype=torch.float64)

    if constraints:
        causal = torch.zeros((), dtype=torch.float64)
        for lhs, rhs in constraints:
            causal = causal + torch.clamp(x_syn[:, lhs] - x_syn[:, rhs], min=0.0).mean()
    else:
        causal = torch.zeros((), dtype=torch.float64)

    if x_syn.shape[0] >= 2:
        m = x_syn.shape[0]
        iu = torch.triu_indices(m, m, offset=1)
        sq = ((x_syn[iu[0]] - x_syn[iu[1]]) ** 2).sum(dim=1)
        spread = torch.sqrt(sq + 1e-12).mean()  # differentiable at duplicates
        diversity = torch.clamp(tau - spread, min=0.0)
    else:
        diversity = torch.zeros((), dtype=torch.float64)

    return temporal, causal, diversity, temporal + causal + diversity


def total_generator_objective(parts: LossBreakdown, w: LossWeights):
    """Weighted multi-task objective the generator and encoder minimize.

    Accepts a breakdown whose fields are floats or torch scalars; raises
    NumericalError on any non-finite part so divergence surfaces here.
    """
    values = {
        name: getattr(parts, name)
        for name in ("recon", "kl", "adv_g", "fm", "class_syn", "class_real",
                     "temporal", "causal", "diversity")
    }
    for name, v in values.items():
        scalar = float(v.detach() if torch.is_tensor(v) else v)
        if not math.isfinite(scalar):
            raise NumericalError(f"loss part {name!r} is non-finite: {scalar!r}")
    recon_term = values["recon"] + w.kl * values["kl"]
    class_term = values["class_syn"] + values["class_real"]
    cyber_term = values["temporal"] + values["causal"] + values["diversity"]
    return (
        w.adversarial * values["adv_g"]
        + w.reconstruction * recon_term
        + w.feature_matching * values["fm"]
        + w.classification * class_term
        + w.cyber * cyber_term
    )
