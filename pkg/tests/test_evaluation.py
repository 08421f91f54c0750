"""Metric contracts: exact oracles, report arithmetic, TSTR determinism."""

import numpy as np
import pytest

from phantom.benchmark import DatasetTable, generate_benchmark
from phantom.errors import (
    ConfigurationError,
    DegenerateTrainingError,
    InputError,
    SchemaError,
)
from phantom.evaluation import (
    ClassRow,
    ClassReport,
    MetricsReport,
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

from oracles import ks_oracle, nn_oracle, wasserstein1_oracle


def test_ks_identical_samples():
    v = np.array([0.3, 1.2, -0.5, 0.3])
    assert ks_statistic(v, v.copy()) == 0.0


def test_ks_hand_cases():
    assert ks_statistic([0.0, 1.0], [0.5, 1.5]) == 0.5
    assert ks_statistic([0.0], [1.0]) == 1.0


def test_ks_exact_oracle_agreement():
    rng = np.random.default_rng(0)
    for trial in range(120):
        na, nb = rng.integers(1, 60, size=2)
        a = rng.normal(size=na)
        b = rng.normal(loc=rng.uniform(-1, 1), size=nb)
        if trial % 3 == 0:  # force ties across samples
            b[: min(na, nb) // 2] = a[: min(na, nb) // 2]
        assert ks_statistic(a, b) == ks_oracle(a, b)


def test_ks_empty_input():
    with pytest.raises(InputError):
        ks_statistic([], [1.0])


def test_w1_identical_samples():
    v = np.array([2.0, -1.0, 0.5])
    assert wasserstein1(v, v.copy()) == 0.0


def test_w1_hand_case():
    assert wasserstein1([0.0, 1.0], [1.0, 2.0]) == pytest.approx(1.0)


def test_w1_translation_property():
    rng = np.random.default_rng(1)
    a = rng.normal(size=20)
    for c in (0.25, -1.5, 3.0):
        assert wasserstein1(a, a + c) == pytest.approx(abs(c), rel=1e-12)


def test_w1_exact_oracle_agreement():
    rng = np.random.default_rng(2)
    for trial in range(120):
        na, nb = rng.integers(1, 60, size=2)
        a = rng.normal(size=na)
        b = rng.normal(loc=rng.uniform(-1, 1), scale=rng.uniform(0.5, 2), size=nb)
        assert wasserstein1(a, b) == wasserstein1_oracle(a, b)


def test_w1_equal_sizes_matches_sorted_pairing():
    rng = np.random.default_rng(3)
    for _ in range(25):
        n = int(rng.integers(2, 50))
        a = rng.normal(size=n)
        b = rng.normal(size=n)
        sorted_pairing = float(np.mean(np.abs(np.sort(a) - np.sort(b))))
        assert wasserstein1(a, b) == pytest.approx(sorted_pairing, rel=1e-10)


def test_nn_hand_geometry():
    X = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert nn_distances(X, X, exclude_self=True) == (1.0, 1.0)
    Y = np.array([[0.0, 0.0]])
    assert nn_distances(X, Y) == (0.0, 0.5)
    assert nn_distances(X, X.copy()) == (0.0, 0.0)


def test_nn_exact_oracle_agreement():
    rng = np.random.default_rng(4)
    for trial in range(60):
        n, m = rng.integers(2, 40, size=2)
        d = int(rng.integers(1, 10))
        X = rng.normal(size=(n, d))
        if trial % 2 == 0:
            got = nn_distances(X, X, exclude_self=True)
            want = nn_oracle(X, X, exclude_self=True)
        else:
            Y = rng.normal(size=(m, d))
            got = nn_distances(X, Y)
            want = nn_oracle(X, Y, exclude_self=False)
        assert got == want


def test_nn_exclude_self_single_row():
    with pytest.raises(InputError):
        nn_distances(np.zeros((1, 3)), np.zeros((1, 3)), exclude_self=True)


def test_nn_exact_oracle_at_500_rows():
    rng = np.random.default_rng(31)
    X = rng.normal(size=(500, 8))
    assert nn_distances(X, X, exclude_self=True) == nn_oracle(X, X, True)


def test_fidelity_identity_is_zero():
    for seed in (1, 22, 333):
        table = generate_benchmark(300, seed=seed)
        summary = fidelity_summary(table, table)
        assert summary.ks_mean == 0.0
        assert summary.w1_mean == 0.0
        assert np.all(summary.ks_per_feature == 0.0)
        assert np.all(summary.w1_per_feature == 0.0)


def test_fidelity_single_column_shift():
    table = generate_benchmark(400, seed=2)
    shifted = DatasetTable(
        table.features.copy(), table.labels.copy(), table.feature_names, table.block_map
    )
    col = 0
    span = table.features[:, col].max() - table.features[:, col].min()
    # strictly beyond the full range: disjoint supports, KS saturates at 1
    shifted.features[:, col] += span * (1.0 + 1e-9)
    summary = fidelity_summary(table, shifted)
    assert summary.ks_per_feature[col] == 1.0
    assert summary.w1_per_feature[col] == pytest.approx(1.0, rel=1e-6)
    assert summary.ks_mean == pytest.approx(1.0 / 40)
    assert summary.w1_mean == pytest.approx(1.0 / 40, rel=1e-6)
    # shift by exactly the range: supports touch at one point, KS = 1 - 1/n
    touching = DatasetTable(
        table.features.copy(), table.labels.copy(), table.feature_names, table.block_map
    )
    touching.features[:, col] += span
    ks_touch = fidelity_summary(table, touching).ks_per_feature[col]
    assert ks_touch == pytest.approx(1.0 - 1.0 / table.n)


def test_fidelity_ranges_random_tables():
    rng = np.random.default_rng(5)
    base = generate_benchmark(200, seed=3)
    noisy = DatasetTable(
        base.features + rng.normal(scale=0.5, size=base.features.shape),
        base.labels, base.feature_names, base.block_map,
    )
    summary = fidelity_summary(base, noisy)
    assert np.all(summary.ks_per_feature >= 0.0)
    assert np.all(summary.ks_per_feature <= 1.0)
    assert np.all(summary.w1_per_feature >= 0.0)
    assert 0.0 <= summary.ks_mean <= 1.0


def test_fidelity_schema_mismatch():
    a = generate_benchmark(200, seed=4)
    b = DatasetTable(a.features, a.labels, tuple(f"x{i}" for i in range(40)), a.block_map)
    with pytest.raises(SchemaError):
        fidelity_summary(a, b)


def test_classification_report_perfect():
    y = np.array([0, 1, 2, 3, 4, 0, 1])
    report = classification_report(y, y.copy())
    assert report.accuracy == 1.0
    for row in report.rows:
        assert (row.precision, row.recall, row.f1) == (1.0, 1.0, 1.0)
    assert report.total_support == 7


def test_classification_report_absent_class_convention():
    y_true = np.array([0, 0, 1, 1])
    y_pred = np.array([0, 1, 1, 1])
    report = classification_report(y_true, y_pred)
    for c in (2, 3, 4):
        row = report.rows[c]
        assert (row.precision, row.recall, row.f1, row.support) == (0.0, 0.0, 0.0, 0)


def test_classification_report_reference_rows():
    # per-class values with supports 14000/3000/2000/800/200
    rows = [
        ClassRow(0, 1.00, 1.00, 1.00, 14000),
        ClassRow(1, 1.00, 1.00, 1.00, 3000),
        ClassRow(2, 0.88, 0.99, 0.93, 2000),
        ClassRow(3, 1.00, 0.87, 0.93, 800),
        ClassRow(4, 0.00, 0.00, 0.00, 200),
    ]
    report = ClassReport.from_rows(rows)
    assert abs(report.macro_precision - 0.776) < 1e-9
    assert abs(report.weighted_precision - 0.98) <= 0.005
    assert abs(report.weighted_recall - 0.98) <= 0.005
    assert abs(report.weighted_f1 - 0.98) <= 0.005
    assert report.total_support == 20000


def test_classification_report_weighted_wiring():
    rng = np.random.default_rng(6)
    y_true = rng.integers(0, 5, size=200)
    y_pred = rng.integers(0, 5, size=200)
    report = classification_report(y_true, y_pred)
    total = report.total_support
    for attr in ("precision", "recall", "f1"):
        weighted = sum(getattr(r, attr) * r.support for r in report.rows) / total
        assert getattr(report, f"weighted_{attr}") == pytest.approx(weighted, abs=1e-6)
    assert total == 200


def test_classification_report_length_mismatch():
    with pytest.raises(InputError):
        classification_report([0, 1], [0])


@pytest.fixture(scope="module")
def tstr_tables():
    table = generate_benchmark(400, seed=7)
    from phantom.benchmark import stratified_split

    pair = stratified_split(table, 0.25, seed=7)
    return pair.train, pair.test


def test_tstr_identity_regime(tstr_tables):
    train, test = tstr_tables
    rows = tstr_utility(train, train, test, seed=11)
    real_only = next(r for r in rows if r.regime == "real_only")
    synth_only = next(r for r in rows if r.regime == "synthetic_only")
    assert synth_only.f1 == real_only.f1
    assert synth_only.auc == real_only.auc


def test_tstr_deterministic(tstr_tables):
    train, test = tstr_tables
    rows_a = tstr_utility(train, train, test, seed=13)
    rows_b = tstr_utility(train, train, test, seed=13)
    assert [(r.f1, r.auc) for r in rows_a] == [(r.f1, r.auc) for r in rows_b]


def test_tstr_degenerate_regime(tstr_tables):
    train, test = tstr_tables
    benign_rows = train.labels == 0
    single = DatasetTable(
        train.features[benign_rows], train.labels[benign_rows],
        train.feature_names, train.block_map,
    )
    with pytest.raises(DegenerateTrainingError):
        tstr_utility(train, single, test, seed=1)


def test_density_profile_shapes_and_integral():
    rng = np.random.default_rng(3)
    v = rng.normal(size=10_000)
    series = density_profile(v, grid_points=512)
    assert series.x.shape == (512,)
    assert series.y.shape == (512,)
    assert np.all(series.y >= 0.0)
    integral = np.trapezoid(series.y, series.x)
    assert 0.98 <= integral <= 1.02
    peak = series.x[int(np.argmax(series.y))]
    assert abs(peak) <= 0.05


def test_density_profile_values_match_kernel_sum():
    # brute-force Gaussian kernel sum at a handful of grid points
    rng = np.random.default_rng(21)
    v = rng.normal(size=200)
    series = density_profile(v, grid_points=64)
    h = series.metadata["bandwidth"]
    for idx in (0, 10, 31, 63):
        x = series.x[idx]
        total = 0.0
        for s in v:
            total += np.exp(-0.5 * ((x - s) / h) ** 2)
        expected = total / (len(v) * h * np.sqrt(2 * np.pi))
        assert series.y[idx] == pytest.approx(expected, rel=1e-12)


def test_density_profile_uniform_integral():
    rng = np.random.default_rng(9)
    series = density_profile(rng.uniform(size=5000), grid_points=256)
    assert 0.98 <= np.trapezoid(series.y, series.x) <= 1.02


def test_density_profile_constant_spike():
    series = density_profile(np.full(10, 3.25), grid_points=101)
    assert series.metadata["degenerate_spike"] is True
    assert np.count_nonzero(series.y) == 1
    assert series.x[int(np.argmax(series.y))] == pytest.approx(3.25, abs=0.01)
    assert np.trapezoid(series.y, series.x) == pytest.approx(1.0, rel=0.02)


def test_density_profile_needs_two_samples():
    with pytest.raises(InputError):
        density_profile([1.0], grid_points=32)


def test_nn_histogram_counts_sum():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(40, 5))
    series = nn_histogram(X, bins=8)
    assert series.y.sum() == 40
    assert series.x.shape == series.y.shape


def test_nn_histogram_duplicates_mass_at_zero():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(15, 4))
    doubled = np.concatenate([X, X])
    series = nn_histogram(doubled, bins=10)
    # every row's nearest neighbor is its twin at distance exactly 0
    idx = int(np.argmax(series.y))
    assert series.y[idx] == 30
    width = series.metadata["bin_edges"][1] - series.metadata["bin_edges"][0]
    assert abs(series.x[idx]) <= width


def test_nn_histogram_collinear_distances():
    X = np.array([[0.0], [1.0], [3.0]])
    series = nn_histogram(X, bins=2)
    # self-excluded NN distances are (1, 1, 2)
    assert series.y.tolist() == [2.0, 1.0]
    assert series.metadata["bin_edges"] == [1.0, 1.5, 2.0]


def test_nn_histogram_single_row():
    with pytest.raises(InputError):
        nn_histogram(np.zeros((1, 3)), bins=4)


def test_evaluate_pipeline_identity(tstr_tables):
    table = generate_benchmark(400, seed=12)
    report, plots = evaluate_pipeline(table, table, seed=5, nn_max_rows=200)
    report.validate()
    assert report.fidelity.ks_mean == 0.0
    assert report.fidelity.w1_mean == 0.0
    real_only = next(r for r in report.utility if r.regime == "real_only")
    synth_only = next(r for r in report.utility if r.regime == "synthetic_only")
    assert synth_only.f1 == real_only.f1
    assert synth_only.auc == real_only.auc
    assert set(plots) == {"density_real", "density_synthetic", "nn_histogram_synthetic"}
    # identical tables still carry distinct rows, so min NN distance is positive
    assert report.diversity.min_nn_distance > 0.0


def test_metrics_report_json_round_trip(tmp_path):
    table = generate_benchmark(400, seed=13)
    report, _ = evaluate_pipeline(table, table, seed=3, nn_max_rows=150)
    doc = report.to_json_dict()
    back = MetricsReport.from_json_dict(doc)
    assert back.to_json_dict() == doc
    text = back.to_text()
    assert "Classification report" in text
    assert "KS statistic" in text


def test_evaluate_unknown_density_feature():
    table = generate_benchmark(300, seed=14)
    with pytest.raises(ConfigurationError):
        evaluate_pipeline(table, table, seed=1, density_feature="nope")
