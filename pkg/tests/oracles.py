"""Brute-force reference implementations used to pin expected values.

Everything here trades speed for obviousness: explicit loops, explicit
counting, no shared code with the package (scalar primitives like float
division and numpy's reduction over a fixed term array are the only
overlap, so that exact-agreement checks are meaningful).
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def ks_oracle(a, b) -> float:
    """Two-sample KS statistic by counting at every pooled sample point."""
    a = list(map(float, a))
    b = list(map(float, b))
    diffs = []
    for x in a + b:
        fa = sum(1 for v in a if v <= x) / len(a)
        fb = sum(1 for v in b if v <= x) / len(b)
        diffs.append(abs(fa - fb))
    return max(diffs)


def wasserstein1_oracle(a, b) -> float:
    """1-D earth-mover distance as the integral of |ECDF_a - ECDF_b|.

    Walks the pooled sorted points, counting each ECDF from scratch, and
    accumulates |F_a - F_b| * segment width term by term.
    """
    a = list(map(float, a))
    b = list(map(float, b))
    pooled = sorted(a + b)
    terms = []
    for left, right in zip(pooled[:-1], pooled[1:]):
        fa = sum(1 for v in a if v <= left) / len(a)
        fb = sum(1 for v in b if v <= left) / len(b)
        terms.append(abs(fa - fb) * (right - left))
    return float(np.sum(np.asarray(terms, dtype=np.float64))) if terms else 0.0


def nn_oracle(X, Y, exclude_self: bool) -> tuple[float, float]:
    """Per-row nearest-neighbor distances via an explicit row loop."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    mins = []
    for i in range(X.shape[0]):
        d = np.sqrt(np.sum((Y - X[i]) ** 2, axis=1))
        if exclude_self:
            d = np.delete(d, i)
        mins.append(d.min())
    mins = np.asarray(mins, dtype=np.float64)
    return float(mins.min()), float(mins.mean())


def kl_monte_carlo(mu, sigma, n_draws: int, seed: int) -> float:
    """KL(N(mu, sigma^2) || N(0, I)) estimated as E_q[log q - log p]."""
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    rng = np.random.default_rng(seed)
    z = mu + sigma * rng.standard_normal((n_draws,) + mu.shape)
    log_q = -0.5 * (((z - mu) / sigma) ** 2 + np.log(2 * np.pi * sigma**2))
    log_p = -0.5 * (z**2 + np.log(2 * np.pi))
    return float(np.mean(np.sum(log_q - log_p, axis=-1)))


def affine_tanh_scalar(row, weights, bias) -> list[float]:
    """Straight-line scalar recomputation of tanh(row @ W + b)."""
    out = []
    for j in range(weights.shape[1]):
        acc = 0.0
        for i in range(weights.shape[0]):
            acc += float(row[i]) * float(weights[i, j])
        out.append(math.tanh(acc + float(bias[j])))
    return out


def largest_remainder_oracle(n_total: int, fractions) -> list[int]:
    """Re-derive largest-remainder counts by explicit candidate ranking."""
    quotas = [n_total * float(f) for f in fractions]
    counts = [int(math.floor(q)) for q in quotas]
    leftover = n_total - sum(counts)
    ranked = sorted(
        range(len(quotas)), key=lambda i: (-(quotas[i] - counts[i]), i)
    )
    for i in ranked[:leftover]:
        counts[i] += 1
    return counts


def stratified_assignments(class_counts: dict[int, int], n_test: int):
    """Enumerate every per-class test-count assignment summing to n_test."""
    classes = sorted(class_counts)
    ranges = [range(class_counts[c] + 1) for c in classes]
    for combo in itertools.product(*ranges):
        if sum(combo) == n_test:
            yield dict(zip(classes, combo))


def satisfies_plus_minus_one(
    assignment: dict[int, int], class_counts: dict[int, int], n_test: int, n_total: int
) -> bool:
    """Check the ±1-sample stratification rule for one assignment."""
    for c, k in assignment.items():
        ideal = class_counts[c] * n_test / n_total
        if abs(k - ideal) >= 1.0 + 1e-12:
            return False
    return True
