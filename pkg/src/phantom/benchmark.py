"""Seedable benchmark generator for labeled tabular network-attack data.

Produces a 40-feature, five-class dataset with a 70/15/10/4/1 class mix
and per-class feature signatures: DoS floods carry high byte volumes and
connection counts, probes scan many distinct ports, remote-to-local
attempts rack up failed logins, privilege escalations run long sessions
over a narrow protocol mix. Features fall into three blocks (network,
temporal, behavioral) that the progressive trainer grows through.

Generation, splitting, and CSV round-trips are pure functions of their
arguments: identical calls yield identical tables.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ConfigurationError,
    FormatError,
    InfeasibleSplitError,
    InputError,
    ShapeError,
)

GENERATOR_VERSION = "1.0"

N_FEATURES = 40
N_CLASSES = 5
CLASS_NAMES = ("benign", "dos", "probe", "r2l", "u2r")

BLOCK_NAMES = ("network", "temporal", "behavioral")

# Feature kinds drive generation, generator output heads, and table
# validation:
#   continuous  - unbounded real (log-scaled byte counts, durations)
#   rate        - normalized value in [0, 1]
#   count       - nonnegative integer stored as a real
#   categorical - member of a one-hot group
KIND_CONTINUOUS = "continuous"
KIND_RATE = "rate"
KIND_COUNT = "count"
KIND_CATEGORICAL = "categorical"


@dataclass(frozen=True)
class FeatureDef:
    name: str
    kind: str
    block: str
    group: str | None = None  # one-hot group id for categorical members


def _onehot(group: str, block: str, names: list[str]) -> list[FeatureDef]:
    return [FeatureDef(n, KIND_CATEGORICAL, block, group) for n in names]


FEATURES: tuple[FeatureDef, ...] = tuple(
    [
        # network block: indices 0..15
        FeatureDef("src_bytes_log", KIND_CONTINUOUS, "network"),
        FeatureDef("dst_bytes_log", KIND_CONTINUOUS, "network"),
        FeatureDef("fwd_packets_log", KIND_CONTINUOUS, "network"),
        FeatureDef("rev_packets_log", KIND_CONTINUOUS, "network"),
        FeatureDef("conn_count", KIND_COUNT, "network"),
        FeatureDef("src_port_entropy", KIND_RATE, "network"),
        FeatureDef("dst_port_entropy", KIND_RATE, "network"),
        FeatureDef("wrong_fragment_rate", KIND_RATE, "network"),
        FeatureDef("urgent_rate", KIND_RATE, "network"),
    ]
    + _onehot("protocol", "network", ["proto_tcp", "proto_udp", "proto_icmp", "proto_other"])
    + _onehot("flag", "network", ["flag_sf", "flag_rej", "flag_other"])
    + [
        # temporal block: indices 16..27
        FeatureDef("duration_log", KIND_CONTINUOUS, "temporal"),
        FeatureDef("iat_mean_log", KIND_CONTINUOUS, "temporal"),
        FeatureDef("iat_std_log", KIND_CONTINUOUS, "temporal"),
        FeatureDef("burstiness", KIND_RATE, "temporal"),
        FeatureDef("session_regularity", KIND_RATE, "temporal"),
        FeatureDef("same_host_rate", KIND_RATE, "temporal"),
        FeatureDef("same_srv_rate", KIND_RATE, "temporal"),
        FeatureDef("window_count", KIND_COUNT, "temporal"),
        FeatureDef("idle_time_log", KIND_CONTINUOUS, "temporal"),
        FeatureDef("active_time_log", KIND_CONTINUOUS, "temporal"),
        FeatureDef("tod_fraction", KIND_RATE, "temporal"),
        FeatureDef("recent_conn_count", KIND_COUNT, "temporal"),
        # behavioral block: indices 28..39
        FeatureDef("failed_logins", KIND_COUNT, "behavioral"),
        FeatureDef("login_attempts", KIND_COUNT, "behavioral"),
        FeatureDef("file_access_count", KIND_COUNT, "behavioral"),
        FeatureDef("root_shell_rate", KIND_RATE, "behavioral"),
        FeatureDef("su_attempt_rate", KIND_RATE, "behavioral"),
        FeatureDef("file_creation_count", KIND_COUNT, "behavioral"),
        FeatureDef("shell_spawn_count", KIND_COUNT, "behavioral"),
        FeatureDef("resource_usage", KIND_RATE, "behavioral"),
        FeatureDef("guest_login_rate", KIND_RATE, "behavioral"),
        FeatureDef("session_continuity", KIND_RATE, "behavioral"),
        FeatureDef("privilege_score", KIND_RATE, "behavioral"),
        FeatureDef("anomaly_score", KIND_RATE, "behavioral"),
    ]
)

assert len(FEATURES) == N_FEATURES

FEATURE_NAMES: tuple[str, ...] = tuple(f.name for f in FEATURES)
BLOCK_MAP: tuple[str, ...] = tuple(f.block for f in FEATURES)
FEATURE_KINDS: tuple[str, ...] = tuple(f.kind for f in FEATURES)
_NAME_TO_INDEX = {f.name: i for i, f in enumerate(FEATURES)}


def feature_index(name: str) -> int:
    """Index of a feature in the canonical 40-column schema."""
    try:
        return _NAME_TO_INDEX[name]
    except KeyError:
        raise ConfigurationError(f"unknown feature name: {name!r}") from None


def categorical_groups(features: tuple[FeatureDef, ...] = FEATURES) -> dict[str, list[int]]:
    """Map of one-hot group id to its member column indices."""
    groups: dict[str, list[int]] = {}
    for i, f in enumerate(features):
        if f.group is not None:
            groups.setdefault(f.group, []).append(i)
    return groups


def default_block_map(n_features: int = N_FEATURES) -> tuple[str, ...]:
    """Index-based block partition: 0-15 network, 16-27 temporal, 28-39 behavioral."""
    out = []
    for i in range(n_features):
        if i < 16:
            out.append("network")
        elif i < 28:
            out.append("temporal")
        else:
            out.append("behavioral")
    return tuple(out)


# Monotone feature-pair constraints (lhs <= rhs) that hold by construction
# in generated data; the causal penalty in `losses.cyber_loss` uses these
# as its default configuration.
DEFAULT_CONSTRAINTS: tuple[tuple[str, str], ...] = (
    ("failed_logins", "login_attempts"),
)


# ---------------------------------------------------------------------------
# Class specifications
# ---------------------------------------------------------------------------

# Signature descriptor formats, keyed by feature name (or one-hot group id):
#   continuous -> ("normal", loc, scale)
#   rate       -> ("rate", loc, scale)          clipped to [0, 1]
#   count      -> ("poisson", lam)
#              -> ("poisson_add", base, lam)    value = base feature + Poisson(lam)
#   group id   -> ("choice", weights)           one draw per row, one-hot encoded
Signature = dict[str, tuple]


@dataclass(frozen=True)
class ClassSpec:
    class_id: int
    name: str
    proportion: float
    signature: Signature = field(repr=False)


# Per-class parameters below are artifact defaults chosen to give every
# class a distinct, well-separated profile; only a handful of facts are
# externally fixed (DoS byte/connection volume, U2R session length and
# narrow protocol mix, R2L login failures). Locations/scales are in the
# feature's own space (log-space for *_log columns).
_SIGNATURES: dict[str, Signature] = {
    "benign": {
        "src_bytes_log": ("normal", 6.0, 1.0),
        "dst_bytes_log": ("normal", 7.0, 1.2),
        "fwd_packets_log": ("normal", 4.5, 0.8),
        "rev_packets_log": ("normal", 4.3, 0.8),
        "conn_count": ("poisson", 8.0),
        "src_port_entropy": ("rate", 0.55, 0.10),
        "dst_port_entropy": ("rate", 0.35, 0.10),
        "wrong_fragment_rate": ("rate", 0.02, 0.02),
        "urgent_rate": ("rate", 0.01, 0.01),
        "protocol": ("choice", (0.60, 0.30, 0.05, 0.05)),
        "flag": ("choice", (0.85, 0.05, 0.10)),
        "duration_log": ("normal", 3.0, 0.9),
        "iat_mean_log": ("normal", 2.0, 0.7),
        "iat_std_log": ("normal", 1.0, 0.6),
        "burstiness": ("rate", 0.30, 0.10),
        "session_regularity": ("rate", 0.70, 0.10),
        "same_host_rate": ("rate", 0.50, 0.15),
        "same_srv_rate": ("rate", 0.60, 0.15),
        "window_count": ("poisson", 12.0),
        "idle_time_log": ("normal", 2.5, 0.8),
        "active_time_log": ("normal", 2.8, 0.8),
        "tod_fraction": ("rate", 0.50, 0.20),
        "recent_conn_count": ("poisson", 6.0),
        "failed_logins": ("poisson", 0.2),
        "login_attempts": ("poisson_add", "failed_logins", 1.3),
        "file_access_count": ("poisson", 9.0),
        "root_shell_rate": ("rate", 0.01, 0.01),
        "su_attempt_rate": ("rate", 0.02, 0.02),
        "file_creation_count": ("poisson", 1.2),
        "shell_spawn_count": ("poisson", 0.3),
        "resource_usage": ("rate", 0.30, 0.10),
        "guest_login_rate": ("rate", 0.03, 0.02),
        "session_continuity": ("rate", 0.80, 0.08),
        "privilege_score": ("rate", 0.05, 0.03),
        "anomaly_score": ("rate", 0.10, 0.05),
    },
    # flood traffic: huge outbound volume, many connections, tiny replies
    "dos": {
        "src_bytes_log": ("normal", 11.5, 0.8),
        "dst_bytes_log": ("normal", 2.0, 1.0),
        "fwd_packets_log": ("normal", 9.0, 0.7),
        "rev_packets_log": ("normal", 1.0, 0.7),
        "conn_count": ("poisson", 180.0),
        "src_port_entropy": ("rate", 0.25, 0.08),
        "dst_port_entropy": ("rate", 0.15, 0.08),
        "wrong_fragment_rate": ("rate", 0.30, 0.10),
        "urgent_rate": ("rate", 0.05, 0.03),
        "protocol": ("choice", (0.45, 0.25, 0.28, 0.02)),
        "flag": ("choice", (0.30, 0.60, 0.10)),
        "duration_log": ("normal", 1.2, 0.8),
        "iat_mean_log": ("normal", -1.5, 0.6),
        "iat_std_log": ("normal", -1.0, 0.6),
        "burstiness": ("rate", 0.90, 0.05),
        "session_regularity": ("rate", 0.20, 0.10),
        "same_host_rate": ("rate", 0.95, 0.04),
        "same_srv_rate": ("rate", 0.90, 0.06),
        "window_count": ("poisson", 3.0),
        "idle_time_log": ("normal", 0.5, 0.5),
        "active_time_log": ("normal", 1.5, 0.6),
        "tod_fraction": ("rate", 0.50, 0.25),
        "recent_conn_count": ("poisson", 140.0),
        "failed_logins": ("poisson", 0.1),
        "login_attempts": ("poisson_add", "failed_logins", 0.2),
        "file_access_count": ("poisson", 0.5),
        "root_shell_rate": ("rate", 0.01, 0.01),
        "su_attempt_rate": ("rate", 0.01, 0.01),
        "file_creation_count": ("poisson", 0.1),
        "shell_spawn_count": ("poisson", 0.05),
        "resource_usage": ("rate", 0.85, 0.07),
        "guest_login_rate": ("rate", 0.01, 0.01),
        "session_continuity": ("rate", 0.30, 0.10),
        "privilege_score": ("rate", 0.08, 0.04),
        "anomaly_score": ("rate", 0.80, 0.08),
    },
    # reconnaissance: sweeps many ports/services, short bursts, little payload
    "probe": {
        "src_bytes_log": ("normal", 2.5, 0.8),
        "dst_bytes_log": ("normal", 1.5, 0.8),
        "fwd_packets_log": ("normal", 3.5, 0.7),
        "rev_packets_log": ("normal", 0.8, 0.6),
        "conn_count": ("poisson", 90.0),
        "src_port_entropy": ("rate", 0.85, 0.06),
        "dst_port_entropy": ("rate", 0.90, 0.05),
        "wrong_fragment_rate": ("rate", 0.10, 0.05),
        "urgent_rate": ("rate", 0.02, 0.02),
        "protocol": ("choice", (0.35, 0.25, 0.38, 0.02)),
        "flag": ("choice", (0.25, 0.65, 0.10)),
        "duration_log": ("normal", 0.8, 0.7),
        "iat_mean_log": ("normal", -0.5, 0.6),
        "iat_std_log": ("normal", 0.5, 0.5),
        "burstiness": ("rate", 0.70, 0.10),
        "session_regularity": ("rate", 0.30, 0.10),
        "same_host_rate": ("rate", 0.20, 0.10),
        "same_srv_rate": ("rate", 0.15, 0.08),
        "window_count": ("poisson", 40.0),
        "idle_time_log": ("normal", 1.0, 0.6),
        "active_time_log": ("normal", 1.0, 0.6),
        "tod_fraction": ("rate", 0.45, 0.25),
        "recent_conn_count": ("poisson", 70.0),
        "failed_logins": ("poisson", 0.3),
        "login_attempts": ("poisson_add", "failed_logins", 0.2),
        "file_access_count": ("poisson", 0.8),
        "root_shell_rate": ("rate", 0.02, 0.02),
        "su_attempt_rate": ("rate", 0.02, 0.02),
        "file_creation_count": ("poisson", 0.2),
        "shell_spawn_count": ("poisson", 0.1),
        "resource_usage": ("rate", 0.25, 0.10),
        "guest_login_rate": ("rate", 0.05, 0.03),
        "session_continuity": ("rate", 0.25, 0.10),
        "privilege_score": ("rate", 0.10, 0.05),
        "anomaly_score": ("rate", 0.60, 0.10),
    },
    # remote-to-local: credential guessing, repeated failed logins
    "r2l": {
        "src_bytes_log": ("normal", 5.5, 1.0),
        "dst_bytes_log": ("normal", 8.5, 1.0),
        "fwd_packets_log": ("normal", 4.0, 0.8),
        "rev_packets_log": ("normal", 4.5, 0.8),
        "conn_count": ("poisson", 6.0),
        "src_port_entropy": ("rate", 0.50, 0.10),
        "dst_port_entropy": ("rate", 0.35, 0.10),
        "wrong_fragment_rate": ("rate", 0.05, 0.03),
        "urgent_rate": ("rate", 0.12, 0.05),
        "protocol": ("choice", (0.85, 0.10, 0.02, 0.03)),
        "flag": ("choice", (0.60, 0.30, 0.10)),
        "duration_log": ("normal", 4.5, 0.9),
        "iat_mean_log": ("normal", 2.2, 0.7),
        "iat_std_log": ("normal", 1.2, 0.6),
        "burstiness": ("rate", 0.35, 0.10),
        "session_regularity": ("rate", 0.60, 0.10),
        "same_host_rate": ("rate", 0.55, 0.15),
        "same_srv_rate": ("rate", 0.55, 0.15),
        "window_count": ("poisson", 10.0),
        "idle_time_log": ("normal", 2.8, 0.8),
        "active_time_log": ("normal", 3.5, 0.8),
        "tod_fraction": ("rate", 0.60, 0.20),
        "recent_conn_count": ("poisson", 5.0),
        "failed_logins": ("poisson", 6.0),
        "login_attempts": ("poisson_add", "failed_logins", 3.0),
        "file_access_count": ("poisson", 4.0),
        "root_shell_rate": ("rate", 0.10, 0.05),
        "su_attempt_rate": ("rate", 0.15, 0.06),
        "file_creation_count": ("poisson", 1.0),
        "shell_spawn_count": ("poisson", 0.4),
        "resource_usage": ("rate", 0.35, 0.10),
        "guest_login_rate": ("rate", 0.55, 0.12),
        "session_continuity": ("rate", 0.60, 0.10),
        "privilege_score": ("rate", 0.40, 0.10),
        "anomaly_score": ("rate", 0.50, 0.10),
    },
    # user-to-root: long interactive sessions, narrow protocol use, shells
    "u2r": {
        "src_bytes_log": ("normal", 4.5, 1.0),
        "dst_bytes_log": ("normal", 6.0, 1.2),
        "fwd_packets_log": ("normal", 3.5, 0.9),
        "rev_packets_log": ("normal", 3.8, 0.9),
        "conn_count": ("poisson", 4.0),
        "src_port_entropy": ("rate", 0.45, 0.10),
        "dst_port_entropy": ("rate", 0.30, 0.10),
        "wrong_fragment_rate": ("rate", 0.08, 0.05),
        "urgent_rate": ("rate", 0.15, 0.06),
        "protocol": ("choice", (0.93, 0.04, 0.01, 0.02)),
        "flag": ("choice", (0.80, 0.10, 0.10)),
        "duration_log": ("normal", 7.5, 0.8),
        "iat_mean_log": ("normal", 3.0, 0.8),
        "iat_std_log": ("normal", 2.2, 0.7),
        "burstiness": ("rate", 0.25, 0.10),
        "session_regularity": ("rate", 0.50, 0.12),
        "same_host_rate": ("rate", 0.60, 0.15),
        "same_srv_rate": ("rate", 0.50, 0.15),
        "window_count": ("poisson", 9.0),
        "idle_time_log": ("normal", 4.0, 0.8),
        "active_time_log": ("normal", 5.5, 0.8),
        "tod_fraction": ("rate", 0.70, 0.15),
        "recent_conn_count": ("poisson", 4.0),
        "failed_logins": ("poisson", 2.5),
        "login_attempts": ("poisson_add", "failed_logins", 1.5),
        "file_access_count": ("poisson", 18.0),
        "root_shell_rate": ("rate", 0.75, 0.10),
        "su_attempt_rate": ("rate", 0.65, 0.12),
        "file_creation_count": ("poisson", 6.0),
        "shell_spawn_count": ("poisson", 5.0),
        "resource_usage": ("rate", 0.55, 0.12),
        "guest_login_rate": ("rate", 0.10, 0.05),
        "session_continuity": ("rate", 0.70, 0.10),
        "privilege_score": ("rate", 0.90, 0.05),
        "anomaly_score": ("rate", 0.70, 0.10),
    },
}

DEFAULT_PROPORTIONS: tuple[float, ...] = (0.70, 0.15, 0.10, 0.04, 0.01)

# Additive Gaussian noise applied to continuous and rate features, as a
# fraction of each feature's scale. Counts and one-hot columns stay exact
# so the table invariants (integer counts, hard one-hots) hold.
NOISE_FRACTION = 0.05


def default_class_specs(
    proportions: tuple[float, ...] | list[float] = DEFAULT_PROPORTIONS,
) -> list[ClassSpec]:
    """The five canonical class specs, optionally with custom proportions."""
    if len(proportions) != N_CLASSES:
        raise ConfigurationError(
            f"expected {N_CLASSES} proportions, got {len(proportions)}"
        )
    return [
        ClassSpec(i, name, float(proportions[i]), _SIGNATURES[name])
        for i, name in enumerate(CLASS_NAMES)
    ]


def _validate_specs(specs: list[ClassSpec]) -> None:
    if sorted(s.class_id for s in specs) != list(range(N_CLASSES)):
        raise ConfigurationError("specs must cover class ids 0..4 exactly once")
    total = sum(s.proportion for s in specs)
    if abs(total - 1.0) > 1e-9:
        raise ConfigurationError(f"proportions sum to {total!r}, expected 1.0")
    if any(s.proportion < 0 for s in specs):
        raise ConfigurationError("proportions must be nonnegative")
    groups = categorical_groups()
    for spec in specs:
        for i, f in enumerate(FEATURES):
            key = f.group if f.group is not None else f.name
            if key not in spec.signature:
                raise ConfigurationError(
                    f"class {spec.name!r}: signature missing feature index {i} ({key!r})"
                )
        for gname, members in groups.items():
            tag, weights = spec.signature[gname][0], spec.signature[gname][1]
            if tag != "choice" or len(weights) != len(members):
                raise ConfigurationError(
                    f"class {spec.name!r}: group {gname!r} needs 'choice' weights of length {len(members)}"
                )
            if min(weights) < 0 or sum(weights) <= 0:
                raise ConfigurationError(
                    f"class {spec.name!r}: group {gname!r} weights must be nonnegative with positive sum"
                )


def largest_remainder_counts(n_total: int, fractions: np.ndarray) -> np.ndarray:
    """Integer counts summing to n_total, each within 1 of n_total * fraction.

    Floors the ideal quotas and hands the leftover units to the largest
    fractional remainders (ties broken by lower index), which is
    deterministic and keeps every count within one unit of its quota.
    """
    quotas = np.asarray(fractions, dtype=float) * n_total
    counts = np.floor(quotas).astype(int)
    short = n_total - int(counts.sum())
    if short > 0:
        remainders = quotas - counts
        order = np.lexsort((np.arange(len(counts)), -remainders))
        counts[order[:short]] += 1
    return counts


# ---------------------------------------------------------------------------
# DatasetTable
# ---------------------------------------------------------------------------


@dataclass
class DatasetTable:
    """Labeled sample matrix plus the schema metadata the pipeline shares."""

    features: np.ndarray  # (n, 40) float64
    labels: np.ndarray  # (n,) int64
    feature_names: tuple[str, ...] = FEATURE_NAMES
    block_map: tuple[str, ...] = BLOCK_MAP

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {self.features.shape}")
        if self.features.shape[1] != len(self.feature_names):
            raise ShapeError(
                f"features have {self.features.shape[1]} columns, "
                f"expected {len(self.feature_names)}"
            )
        if self.labels.shape != (self.features.shape[0],):
            raise ShapeError("labels length must match feature row count")
        if len(self.block_map) != len(self.feature_names):
            raise ShapeError("block_map length must match feature count")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    def class_counts(self) -> dict[int, int]:
        counts = {c: 0 for c in range(N_CLASSES)}
        values, freq = np.unique(self.labels, return_counts=True)
        counts.update({int(v): int(f) for v, f in zip(values, freq)})
        return counts

    def block_indices(self, block: str) -> np.ndarray:
        if block not in BLOCK_NAMES:
            raise ConfigurationError(f"unknown block {block!r}")
        return np.array([i for i, b in enumerate(self.block_map) if b == block])

    def kinds(self) -> tuple[str, ...]:
        """Feature kinds resolved by name against the canonical schema."""
        return tuple(
            FEATURE_KINDS[_NAME_TO_INDEX[n]] if n in _NAME_TO_INDEX else "unknown"
            for n in self.feature_names
        )

    def validate(self) -> None:
        """Check structural invariants; raises InputError on violation."""
        if not np.isfinite(self.features).all():
            raise InputError("features contain non-finite values")
        if self.n and (self.labels.min() < 0 or self.labels.max() >= N_CLASSES):
            raise InputError("labels must lie in 0..4")
        for i, kind in enumerate(self.kinds()):
            col = self.features[:, i]
            if kind in (KIND_RATE, KIND_CATEGORICAL):
                if col.size and (col.min() < 0.0 or col.max() > 1.0):
                    raise InputError(f"column {self.feature_names[i]!r} outside [0, 1]")
            elif kind == KIND_COUNT:
                if col.size and (col.min() < 0 or not np.array_equal(col, np.round(col))):
                    raise InputError(
                        f"column {self.feature_names[i]!r} must hold nonnegative integers"
                    )

    def equals(self, other: "DatasetTable") -> bool:
        return (
            self.feature_names == other.feature_names
            and self.block_map == other.block_map
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.features, other.features)
        )


@dataclass
class SplitPair:
    train: DatasetTable
    test: DatasetTable


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def _generate_class_rows(spec: ClassSpec, n_rows: int, rng: np.random.Generator) -> np.ndarray:
    """Sample n_rows feature rows for one class, in fixed column order."""
    out = np.empty((n_rows, N_FEATURES), dtype=np.float64)
    done_groups: set[str] = set()
    for i, f in enumerate(FEATURES):
        if f.kind == KIND_CATEGORICAL:
            if f.group in done_groups:
                continue
            members = [j for j, g in enumerate(FEATURES) if g.group == f.group]
            weights = np.asarray(spec.signature[f.group][1], dtype=float)
            weights = weights / weights.sum()
            draws = rng.choice(len(members), size=n_rows, p=weights)
            block = np.zeros((n_rows, len(members)))
            block[np.arange(n_rows), draws] = 1.0
            out[:, members] = block
            done_groups.add(f.group)
            continue
        desc = spec.signature[f.name]
        if f.kind == KIND_CONTINUOUS:
            _, loc, scale = desc
            vals = rng.normal(loc, scale, size=n_rows)
            vals += rng.normal(0.0, NOISE_FRACTION * scale, size=n_rows)
        elif f.kind == KIND_RATE:
            _, loc, scale = desc
            vals = rng.normal(loc, scale, size=n_rows)
            vals += rng.normal(0.0, NOISE_FRACTION * scale, size=n_rows)
            vals = np.clip(vals, 0.0, 1.0)
        elif f.kind == KIND_COUNT:
            if desc[0] == "poisson_add":
                _, base_name, lam = desc
                base_idx = feature_index(base_name)
                if base_idx >= i:
                    raise ConfigurationError(
                        f"derived count {f.name!r} must reference an earlier column"
                    )
                vals = out[:, base_idx] + rng.poisson(lam, size=n_rows)
            else:
                _, lam = desc
                vals = rng.poisson(lam, size=n_rows).astype(np.float64)
        else:  # pragma: no cover - schema is static
            raise ConfigurationError(f"unhandled feature kind {f.kind!r}")
        out[:, i] = vals
    return out


def generate_benchmark(
    n_total: int,
    specs: list[ClassSpec] | None = None,
    seed: int = 0,
) -> DatasetTable:
    """Generate the shuffled benchmark table with exact per-class counts.

    Counts follow the largest-remainder rule so they sum to n_total exactly;
    every class with a positive proportion must receive at least one row.
    Each class draws from its own child RNG stream, so the result is a pure
    function of (n_total, specs, seed).
    """
    if n_total < 100:
        raise ConfigurationError(f"n_total must be >= 100, got {n_total}")
    if specs is None:
        specs = default_class_specs()
    _validate_specs(specs)

    specs = sorted(specs, key=lambda s: s.class_id)
    counts = largest_remainder_counts(n_total, np.array([s.proportion for s in specs]))
    for spec, count in zip(specs, counts):
        if spec.proportion > 0 and count == 0:
            raise InfeasibleSplitError(
                f"n_total={n_total} gives class {spec.name!r} zero samples"
            )

    children = np.random.SeedSequence(seed).spawn(N_CLASSES + 1)
    blocks = []
    labels = []
    for spec, count, child in zip(specs, counts, children[:N_CLASSES]):
        rng = np.random.default_rng(child)
        blocks.append(_generate_class_rows(spec, int(count), rng))
        labels.append(np.full(int(count), spec.class_id, dtype=np.int64))

    features = np.concatenate(blocks, axis=0)
    label_vec = np.concatenate(labels)
    perm = np.random.default_rng(children[N_CLASSES]).permutation(n_total)
    return DatasetTable(features[perm], label_vec[perm])


def stratified_split(table: DatasetTable, test_fraction: float, seed: int) -> SplitPair:
    """Split into disjoint train/test parts preserving class mix within ±1 row."""
    if not 0.0 < test_fraction < 1.0:
        raise ConfigurationError(f"test_fraction must be in (0, 1), got {test_fraction}")
    counts = table.class_counts()
    present = [c for c in range(N_CLASSES) if counts[c] > 0]
    for c in present:
        if counts[c] < 2:
            raise InfeasibleSplitError(f"class {c} has a single sample; cannot split")

    n_test = int(math.floor(table.n * test_fraction + 0.5))
    fractions = np.array([counts[c] / table.n for c in present])
    test_counts = largest_remainder_counts(n_test, fractions)

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    test_idx = []
    train_idx = []
    for c, k in zip(present, test_counts):
        rows = np.flatnonzero(table.labels == c)
        order = rng.permutation(len(rows))
        test_idx.append(rows[order[:k]])
        train_idx.append(rows[order[k:]])
    test_rows = np.sort(np.concatenate(test_idx))
    train_rows = np.sort(np.concatenate(train_idx))

    make = lambda idx: DatasetTable(
        table.features[idx], table.labels[idx], table.feature_names, table.block_map
    )
    return SplitPair(train=make(train_rows), test=make(test_rows))


# ---------------------------------------------------------------------------
# CSV persistence
# ---------------------------------------------------------------------------

_ROW_ARITY = N_FEATURES + 1  # 40 features + label


def write_csv(table: DatasetTable, path: str | Path, metadata: dict | None = None) -> None:
    """Write the table as UTF-8 CSV; optionally drop a JSON sidecar next to it.

    Values are written with 17 significant digits so a round-trip restores
    features bit-for-bit. The sidecar (``<path>.meta.json``) records seeds,
    specs, block_map, and the generator version when provided.
    """
    path = Path(path)
    fmt = ",".join(["%.17g"] * len(table.feature_names))
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(table.feature_names) + ",label\n")
        feats = table.features
        labels = table.labels
        for i in range(table.n):
            fh.write(fmt % tuple(feats[i]))
            fh.write(",%d\n" % labels[i])
    if metadata is not None:
        sidecar = {"block_map": list(table.block_map), **metadata}
        sidecar.setdefault("generator_version", GENERATOR_VERSION)
        Path(str(path) + ".meta.json").write_text(
            json.dumps(sidecar, indent=2, sort_keys=True), encoding="utf-8"
        )


def read_csv(path: str | Path) -> DatasetTable:
    """Read a table written by write_csv; errors name the offending line."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"{path}: no such file")
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if len(header) != _ROW_ARITY or header[-1] != "label":
            raise FormatError(
                f"{path}: header must hold {N_FEATURES} feature names then 'label', "
                f"got {len(header)} fields"
            )
        names = tuple(header[:-1])
        rows: list[list[float]] = []
        labels: list[int] = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != _ROW_ARITY:
                raise FormatError(
                    f"{path}: line {lineno}: expected {_ROW_ARITY} fields, got {len(rec)}"
                )
            try:
                rows.append([float(c) for c in rec[:-1]])
            except ValueError:
                for col, cell in enumerate(rec[:-1]):
                    try:
                        float(cell)
                    except ValueError:
                        raise FormatError(
                            f"{path}: line {lineno}: column {names[col]!r} "
                            f"has non-numeric value {cell!r}"
                        ) from None
                raise  # pragma: no cover - loop above always raises
            try:
                labels.append(int(rec[-1]))
            except ValueError:
                raise FormatError(
                    f"{path}: line {lineno}: label {rec[-1]!r} is not an integer"
                ) from None

    sidecar = Path(str(path) + ".meta.json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
        block_map = tuple(meta.get("block_map", default_block_map(len(names))))
    else:
        block_map = default_block_map(len(names))

    features = np.asarray(rows, dtype=np.float64).reshape(len(rows), N_FEATURES)
    return DatasetTable(features, np.asarray(labels, dtype=np.int64), names, block_map)
