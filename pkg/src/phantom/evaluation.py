"""Evaluation harness: utility, fidelity, diversity, classification report.

Fidelity metrics (two-sample KS statistic, 1-D earth-mover distance) and
nearest-neighbor diversity run per feature on min-max-normalized columns,
with normalization bounds taken from the real table so a shifted
synthetic column shows up at full scale. Utility follows the
train-on-synthetic/test-on-real protocol with a fixed seeded downstream
detector, binarized benign-vs-attack; the five-class report comes from
the same protocol without binarization.

Every operation is a deterministic function of its inputs; the detector
seed and the evaluation seed are explicit arguments.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.neural_network import MLPClassifier
from sklearn.pipeline import Pipeline
from sklearn.preprocessing import StandardScaler
from sklearn.metrics import f1_score, roc_auc_score

from .benchmark import N_CLASSES, DatasetTable, stratified_split
from .errors import (
    ConfigurationError,
    DegenerateTrainingError,
    InputError,
    SchemaError,
)
from .ioutil import atomic_write_text

# broadcast memory guard for exact pairwise distances; larger inputs take
# the chunked quadratic-expansion path
_EXACT_NN_ELEMENTS = 20_000_000


# ---------------------------------------------------------------------------
# Two-sample statistics
# ---------------------------------------------------------------------------


def _as_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64).ravel()
    if v.size == 0:
        raise InputError(f"{name} must be nonempty")
    return v


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic, exact over pooled points."""
    a = _as_vector(a, "a")
    b = _as_vector(b, "b")
    sa = np.sort(a)
    sb = np.sort(b)
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(sa, pooled, side="right") / a.size
    fb = np.searchsorted(sb, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def wasserstein1(a, b) -> float:
    """1-D earth-mover distance between empirical distributions.

    Integrates |ECDF_a - ECDF_b| over the pooled support; for equal-size
    samples this equals the mean absolute difference of sorted values.
    """
    a = _as_vector(a, "a")
    b = _as_vector(b, "b")
    pooled = np.sort(np.concatenate([a, b]))
    fa = np.searchsorted(np.sort(a), pooled, side="right") / a.size
    fb = np.searchsorted(np.sort(b), pooled, side="right") / b.size
    terms = np.abs(fa[:-1] - fb[:-1]) * np.diff(pooled)
    return float(np.sum(terms))


def _nn_min_distances(X: np.ndarray, Y: np.ndarray, exclude_self: bool) -> np.ndarray:
    """Distance from each row of X to its nearest row of Y."""
    n, d = X.shape
    m = Y.shape[0]
    if n * m * d <= _EXACT_NN_ELEMENTS:
        diff = X[:, None, :] - Y[None, :, :]
        d2 = np.sum(diff * diff, axis=2)
        if exclude_self:
            np.fill_diagonal(d2, np.inf)
        return np.sqrt(np.min(d2, axis=1))
    # chunked quadratic expansion for large inputs
    y_sq = np.sum(Y * Y, axis=1)
    mins = np.empty(n)
    chunk = max(1, _EXACT_NN_ELEMENTS // (m * d))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        block = X[start:stop]
        d2 = np.sum(block * block, axis=1)[:, None] + y_sq[None, :] - 2.0 * block @ Y.T
        np.clip(d2, 0.0, None, out=d2)
        if exclude_self:
            for i in range(start, stop):
                d2[i - start, i] = np.inf
        mins[start:stop] = np.sqrt(np.min(d2, axis=1))
    return mins


def nn_distances(X, Y, exclude_self: bool = False) -> tuple[float, float]:
    """(min, mean) of per-row nearest-neighbor distances from X into Y."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] == 0 or Y.shape[0] == 0:
        raise InputError("X and Y must be nonempty 2-D matrices")
    if X.shape[1] != Y.shape[1]:
        raise InputError("X and Y must share the feature dimension")
    if exclude_self:
        if X.shape != Y.shape:
            raise InputError("exclude_self requires X and Y to be the same set")
        if X.shape[0] < 2:
            raise InputError("exclude_self needs at least 2 rows")
    mins = _nn_min_distances(X, Y, exclude_self)
    return float(np.min(mins)), float(np.mean(mins))


# ---------------------------------------------------------------------------
# Fidelity over tables
# ---------------------------------------------------------------------------


@dataclass
class FidelitySummary:
    ks_per_feature: np.ndarray
    w1_per_feature: np.ndarray
    ks_mean: float
    w1_mean: float


def _minmax_params(real_features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = real_features.min(axis=0)
    span = real_features.max(axis=0) - lo
    span = np.where(span > 0, span, 1.0)  # constant columns map to 0 width 1
    return lo, span


def fidelity_summary(real: DatasetTable, synth: DatasetTable) -> FidelitySummary:
    """Per-feature KS and W1 on min-max-normalized columns plus their means.

    Normalization bounds come from the real table, so a synthetic column
    displaced by the full real range scores W1 near 1 for that column.
    """
    if real.feature_names != synth.feature_names:
        raise SchemaError("real and synthetic tables have different feature schemas")
    if real.n == 0 or synth.n == 0:
        raise InputError("both tables must be nonempty")
    lo, span = _minmax_params(real.features)
    r = (real.features - lo) / span
    s = (synth.features - lo) / span
    n_feat = r.shape[1]
    ks = np.empty(n_feat)
    w1 = np.empty(n_feat)
    for j in range(n_feat):
        ks[j] = ks_statistic(r[:, j], s[:, j])
        w1[j] = wasserstein1(r[:, j], s[:, j])
    return FidelitySummary(ks, w1, float(ks.mean()), float(w1.mean()))


# ---------------------------------------------------------------------------
# Classification report
# ---------------------------------------------------------------------------


@dataclass
class ClassRow:
    class_id: int
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class ClassReport:
    rows: list[ClassRow]
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    total_support: int

    @classmethod
    def from_rows(cls, rows: list[ClassRow], accuracy: float = 0.0) -> "ClassReport":
        """Aggregate per-class rows; 0/0 ratios were already settled per row."""
        total = sum(r.support for r in rows)
        k = len(rows)
        macro = lambda attr: sum(getattr(r, attr) for r in rows) / k
        weighted = lambda attr: (
            sum(getattr(r, attr) * r.support for r in rows) / total if total else 0.0
        )
        return cls(
            rows=rows,
            accuracy=accuracy,
            macro_precision=macro("precision"),
            macro_recall=macro("recall"),
            macro_f1=macro("f1"),
            weighted_precision=weighted("precision"),
            weighted_recall=weighted("recall"),
            weighted_f1=weighted("f1"),
            total_support=total,
        )


def classification_report(y_true, y_pred) -> ClassReport:
    """Per-class precision/recall/F1/support with macro and weighted averages.

    Empty ratios (0/0) report 0 by convention, so a class absent from both
    vectors contributes zeros at support 0.
    """
    y_true = np.asarray(y_true, dtype=np.int64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.int64).ravel()
    if y_true.shape != y_pred.shape:
        raise InputError("y_true and y_pred must have equal length")
    if y_true.size == 0:
        raise InputError("empty label vectors")
    for v in (y_true, y_pred):
        if v.min() < 0 or v.max() >= N_CLASSES:
            raise InputError(f"labels must lie in 0..{N_CLASSES - 1}")

    rows = []
    for c in range(N_CLASSES):
        tp = int(np.sum((y_pred == c) & (y_true == c)))
        fp = int(np.sum((y_pred == c) & (y_true != c)))
        fn = int(np.sum((y_pred != c) & (y_true == c)))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
        rows.append(ClassRow(c, precision, recall, f1, tp + fn))
    accuracy = float(np.mean(y_true == y_pred))
    return ClassReport.from_rows(rows, accuracy=accuracy)


# ---------------------------------------------------------------------------
# TSTR utility
# ---------------------------------------------------------------------------


@dataclass
class UtilityRow:
    regime: str  # real_only | synthetic_only | combined
    f1: float
    auc: float


def _make_detector(seed: int) -> Pipeline:
    # one fixed downstream detector; regimes differ only in training data
    return Pipeline(
        [
            ("scale", StandardScaler()),
            (
                "mlp",
                MLPClassifier(
                    hidden_layer_sizes=(64,),
                    max_iter=300,
                    random_state=seed,
                ),
            ),
        ]
    )


def _fit(detector: Pipeline, X: np.ndarray, y: np.ndarray) -> Pipeline:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        detector.fit(X, y)
    return detector


def tstr_utility(
    real_train: DatasetTable,
    synth_train: DatasetTable,
    real_test: DatasetTable,
    seed: int = 0,
) -> list[UtilityRow]:
    """Binary benign-vs-attack F1/AUC for the three training regimes."""
    for t in (real_train, synth_train, real_test):
        if t.feature_names != real_train.feature_names:
            raise SchemaError("tables must share a feature schema")
    y_test = (real_test.labels != 0).astype(int)
    if len(np.unique(y_test)) < 2:
        raise DegenerateTrainingError("real test set holds a single binary class")

    regimes = [
        ("real_only", real_train.features, real_train.labels),
        ("synthetic_only", synth_train.features, synth_train.labels),
        (
            "combined",
            np.concatenate([real_train.features, synth_train.features]),
            np.concatenate([real_train.labels, synth_train.labels]),
        ),
    ]
    rows = []
    for regime, X, labels in regimes:
        y = (labels != 0).astype(int)
        if X.shape[0] == 0 or len(np.unique(y)) < 2:
            raise DegenerateTrainingError(f"regime {regime!r} holds a single class")
        detector = _fit(_make_detector(seed), X, y)
        pred = detector.predict(real_test.features)
        proba = detector.predict_proba(real_test.features)[:, 1]
        rows.append(
            UtilityRow(
                regime=regime,
                f1=float(f1_score(y_test, pred)),
                auc=float(roc_auc_score(y_test, proba)),
            )
        )
    return rows


def tstr_class_report(
    synth_train: DatasetTable, real_test: DatasetTable, seed: int = 0
) -> ClassReport:
    """Five-class report of a detector trained on synthetic, tested on real."""
    if len(np.unique(synth_train.labels)) < 2:
        raise DegenerateTrainingError("synthetic training set holds a single class")
    detector = _fit(_make_detector(seed), synth_train.features, synth_train.labels)
    pred = detector.predict(real_test.features)
    return classification_report(real_test.labels, pred)


# ---------------------------------------------------------------------------
# Plot-data series
# ---------------------------------------------------------------------------


@dataclass
class PlotSeries:
    kind: str  # density_profile | nn_histogram
    x: np.ndarray
    y: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.x.shape != self.y.shape:
            raise InputError("x and y must have equal length")

    def to_csv(self, path: str | Path) -> None:
        lines = ["x,y"] + ["%.17g,%.17g" % (xv, yv) for xv, yv in zip(self.x, self.y)]
        atomic_write_text(path, "\n".join(lines) + "\n")


def density_profile(values, grid_points: int = 256) -> PlotSeries:
    """Gaussian-kernel density estimate on an evenly spaced padded grid.

    Bandwidth follows Silverman's rule, 0.9 * min(std, IQR/1.34) * n^(-1/5),
    skipping degenerate terms. A constant sample yields a documented spike
    series: zero everywhere except the grid point at the value, scaled so
    the trapezoid integral is 1.
    """
    v = _as_vector(values, "values")
    if v.size < 2:
        raise InputError("density_profile needs at least 2 samples")
    if grid_points < 3:
        raise ConfigurationError("grid_points must be >= 3")
    std = float(np.std(v, ddof=1))
    q75, q25 = np.percentile(v, [75, 25])
    candidates = [c for c in (std, (q75 - q25) / 1.34) if c > 0]
    if not candidates:
        center = float(v[0])
        x = np.linspace(center - 0.5, center + 0.5, grid_points)
        y = np.zeros(grid_points)
        dx = x[1] - x[0]
        y[int(np.argmin(np.abs(x - center)))] = 1.0 / dx
        return PlotSeries(
            "density_profile", x, y,
            metadata={"n": int(v.size), "bandwidth": 0.0, "degenerate_spike": True},
        )
    h = 0.9 * min(candidates) * v.size ** (-0.2)
    x = np.linspace(v.min() - h, v.max() + h, grid_points)
    z = (x[:, None] - v[None, :]) / h
    y = np.exp(-0.5 * z * z).sum(axis=1) / (v.size * h * np.sqrt(2 * np.pi))
    return PlotSeries(
        "density_profile", x, y,
        metadata={"n": int(v.size), "bandwidth": h, "degenerate_spike": False},
    )


def nn_histogram(synth, bins: int = 50) -> PlotSeries:
    """Histogram of self-excluded nearest-neighbor distances within a set."""
    X = synth.features if isinstance(synth, DatasetTable) else np.asarray(synth, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InputError("nn_histogram needs at least 2 rows")
    if bins < 1:
        raise ConfigurationError("bins must be >= 1")
    dists = _nn_min_distances(X, X, exclude_self=True)
    counts, edges = np.histogram(dists, bins=bins)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return PlotSeries(
        "nn_histogram",
        centers,
        counts.astype(np.float64),
        metadata={"n": int(X.shape[0]), "bin_edges": edges.tolist()},
    )


# ---------------------------------------------------------------------------
# Full report
# ---------------------------------------------------------------------------


@dataclass
class DiversitySummary:
    min_nn_distance: float  # synthetic-to-synthetic, self-excluded
    avg_nn_distance: float
    synth_to_real_min: float
    synth_to_real_avg: float


@dataclass
class MetricsReport:
    utility: list[UtilityRow]
    fidelity: FidelitySummary
    diversity: DiversitySummary
    per_class: ClassReport
    metadata: dict = field(default_factory=dict)

    def validate(self) -> None:
        for row in self.utility:
            if not (0.0 <= row.f1 <= 1.0 and 0.0 <= row.auc <= 1.0):
                raise InputError(f"utility rates outside [0, 1] in regime {row.regime}")
        if self.per_class.total_support != sum(r.support for r in self.per_class.rows):
            raise InputError("per-class supports do not sum to the test size")
        total = self.per_class.total_support
        for attr in ("precision", "recall", "f1"):
            weighted = sum(getattr(r, attr) * r.support for r in self.per_class.rows) / total
            if abs(weighted - getattr(self.per_class, f"weighted_{attr}")) > 1e-6:
                raise InputError(f"weighted {attr} inconsistent with per-class rows")

    def to_json_dict(self) -> dict:
        return {
            "utility": [row.__dict__ for row in self.utility],
            "fidelity": {
                "ks_mean": self.fidelity.ks_mean,
                "w1_mean": self.fidelity.w1_mean,
                "ks_per_feature": self.fidelity.ks_per_feature.tolist(),
                "w1_per_feature": self.fidelity.w1_per_feature.tolist(),
            },
            "diversity": self.diversity.__dict__,
            "per_class": {
                "rows": [row.__dict__ for row in self.per_class.rows],
                "accuracy": self.per_class.accuracy,
                "macro": {
                    "precision": self.per_class.macro_precision,
                    "recall": self.per_class.macro_recall,
                    "f1": self.per_class.macro_f1,
                },
                "weighted": {
                    "precision": self.per_class.weighted_precision,
                    "recall": self.per_class.weighted_recall,
                    "f1": self.per_class.weighted_f1,
                },
                "total_support": self.per_class.total_support,
            },
            "metadata": self.metadata,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "MetricsReport":
        fidelity = FidelitySummary(
            np.asarray(doc["fidelity"]["ks_per_feature"]),
            np.asarray(doc["fidelity"]["w1_per_feature"]),
            doc["fidelity"]["ks_mean"],
            doc["fidelity"]["w1_mean"],
        )
        rows = [ClassRow(**row) for row in doc["per_class"]["rows"]]
        per_class = ClassReport.from_rows(rows, accuracy=doc["per_class"]["accuracy"])
        return cls(
            utility=[UtilityRow(**row) for row in doc["utility"]],
            fidelity=fidelity,
            diversity=DiversitySummary(**doc["diversity"]),
            per_class=per_class,
            metadata=doc.get("metadata", {}),
        )

    def to_text(self) -> str:
        """Human-readable tables: per-class report then metric summaries."""
        lines = []
        lines.append("Classification report (trained on synthetic, tested on real)")
        lines.append(f"{'class':>8} {'precision':>10} {'recall':>10} {'f1':>10} {'support':>10}")
        for row in self.per_class.rows:
            lines.append(
                f"{row.class_id:>8} {row.precision:>10.2f} {row.recall:>10.2f} "
                f"{row.f1:>10.2f} {row.support:>10}"
            )
        pc = self.per_class
        lines.append(f"{'accuracy':>8} {'':>10} {'':>10} {pc.accuracy:>10.2f} {pc.total_support:>10}")
        lines.append(
            f"{'macro':>8} {pc.macro_precision:>10.2f} {pc.macro_recall:>10.2f} "
            f"{pc.macro_f1:>10.2f} {pc.total_support:>10}"
        )
        lines.append(
            f"{'weighted':>8} {pc.weighted_precision:>10.2f} {pc.weighted_recall:>10.2f} "
            f"{pc.weighted_f1:>10.2f} {pc.total_support:>10}"
        )
        lines.append("")
        lines.append("Evaluation summary")
        for row in self.utility:
            label = row.regime.replace("_", " ")
            lines.append(f"  {label + ' (F1)':<28} {row.f1:.4f}")
        for row in self.utility:
            label = row.regime.replace("_", " ")
            lines.append(f"  {label + ' (AUC)':<28} {row.auc:.4f}")
        lines.append(f"  {'KS statistic (mean)':<28} {self.fidelity.ks_mean:.4f}")
        lines.append(f"  {'Wasserstein distance (mean)':<28} {self.fidelity.w1_mean:.4f}")
        lines.append(f"  {'Min NN distance':<28} {self.diversity.min_nn_distance:.4f}")
        lines.append(f"  {'Avg NN distance':<28} {self.diversity.avg_nn_distance:.4f}")
        return "\n".join(lines) + "\n"


def evaluate_pipeline(
    real: DatasetTable,
    synth: DatasetTable,
    seed: int = 0,
    test_fraction: float = 0.2,
    nn_max_rows: int = 5000,
    density_feature: str = "src_bytes_log",
    grid_points: int = 256,
    bins: int = 50,
) -> tuple[MetricsReport, dict[str, PlotSeries]]:
    """Full evaluation: TSTR utility + report, fidelity, diversity, plots.

    Both tables get the same seeded stratified split so that evaluating a
    synthetic table equal to the real one reproduces the real-only regime
    exactly. Nearest-neighbor metrics run on at most nn_max_rows rows
    (deterministic subsample) in the real-bounded min-max space.
    """
    if real.feature_names != synth.feature_names:
        raise SchemaError("real and synthetic tables have different feature schemas")
    real_split = stratified_split(real, test_fraction, seed)
    synth_split = stratified_split(synth, test_fraction, seed)
    real_train, real_test = real_split.train, real_split.test
    synth_train = synth_split.train

    utility = tstr_utility(real_train, synth_train, real_test, seed=seed)
    per_class = tstr_class_report(synth_train, real_test, seed=seed)
    fidelity = fidelity_summary(real, synth)

    lo, span = _minmax_params(real.features)
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    sub = lambda X: (
        X if X.shape[0] <= nn_max_rows
        else X[np.sort(rng.choice(X.shape[0], nn_max_rows, replace=False))]
    )
    synth_sub = (sub(synth.features) - lo) / span
    real_sub = (sub(real.features) - lo) / span
    ss_min, ss_avg = nn_distances(synth_sub, synth_sub, exclude_self=True)
    sr_min, sr_avg = nn_distances(synth_sub, real_sub, exclude_self=False)
    diversity = DiversitySummary(ss_min, ss_avg, sr_min, sr_avg)

    try:
        feat_idx = real.feature_names.index(density_feature)
    except ValueError:
        raise ConfigurationError(f"unknown density feature {density_feature!r}") from None
    plots = {
        "density_real": density_profile(real.features[:, feat_idx], grid_points),
        "density_synthetic": density_profile(synth.features[:, feat_idx], grid_points),
        "nn_histogram_synthetic": nn_histogram(synth_sub, bins),
    }
    for name, series in plots.items():
        series.metadata["series"] = name
        series.metadata.setdefault("feature", density_feature)

    report = MetricsReport(
        utility=utility,
        fidelity=fidelity,
        diversity=diversity,
        per_class=per_class,
        metadata={
            "seed": seed,
            "test_fraction": test_fraction,
            "real_rows": real.n,
            "synthetic_rows": synth.n,
            "nn_rows": int(min(nn_max_rows, synth.n)),
            "density_feature": density_feature,
        },
    )
    report.validate()
    return report, plots


def write_report(report: MetricsReport, out_dir: str | Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(
        out_dir / "metrics.json",
        json.dumps(report.to_json_dict(), indent=2, sort_keys=True),
    )
    atomic_write_text(out_dir / "report.txt", report.to_text())
