"""Acceptance criteria, one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. Criteria 5 and 6 share one full desk-scale pipeline run (plus the
repeat run that criterion 5 compares against).
"""

import json
import time

import numpy as np
import pytest
import torch

from phantom.benchmark import (
    DatasetTable,
    generate_benchmark,
    read_csv,
    stratified_split,
    write_csv,
)
from phantom.cli import main
from phantom.evaluation import ClassReport, ClassRow, ks_statistic, nn_distances, wasserstein1
from phantom.losses import (
    LossBreakdown,
    LossWeights,
    adversarial_losses,
    gradient_penalty,
    kl_divergence,
    total_generator_objective,
)
from phantom.networks import parameters_checksum
from phantom.trainer import (
    ReplayConfig,
    TrainConfig,
    Trainer,
    fade_in_factor,
    resize_samples,
)

from oracles import kl_monte_carlo, ks_oracle, nn_oracle, wasserstein1_oracle

PIPELINE_SEED = 7


def _run_pipeline(base_dir):
    """gen-data -> train (reference defaults) -> synthesize 2000 -> evaluate."""
    base_dir.mkdir(parents=True, exist_ok=True)
    real = base_dir / "real.csv"
    ckpt = base_dir / "checkpoint"
    synth = base_dir / "synthetic.csv"
    report_dir = base_dir / "report"
    assert main([
        "gen-data", "--seed", str(PIPELINE_SEED), "--out", str(real),
        "--set", "data.n_total=5000",
    ]) == 0
    assert main([
        "train", "--seed", str(PIPELINE_SEED), "--out", str(ckpt),
        "--set", f"train.data={json.dumps(str(real))}",
    ]) == 0
    # reference defaults: 1 level x 500 iterations -> 500 log rows
    assert len((ckpt / "loss_log.csv").read_text().strip().splitlines()) == 501
    assert main([
        "synthesize", "--seed", str(PIPELINE_SEED + 1), "--out", str(synth),
        "--set", f"synthesize.checkpoint={json.dumps(str(ckpt))}",
        "--set", "synthesize.n=2000",
    ]) == 0
    assert main([
        "evaluate", "--seed", str(PIPELINE_SEED + 2), "--out", str(report_dir),
        "--set", f"evaluate.real={json.dumps(str(real))}",
        "--set", f"evaluate.synth={json.dumps(str(synth))}",
    ]) == 0
    return {
        "real": real,
        "checkpoint": ckpt,
        "synthetic": synth,
        "loss_log": ckpt / "loss_log.csv",
        "metrics": report_dir / "metrics.json",
    }


@pytest.fixture(scope="module")
def pipeline_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipeline")
    t0 = time.monotonic()
    first = _run_pipeline(root / "run1")
    second = _run_pipeline(root / "run2")
    elapsed = time.monotonic() - t0
    return {"first": first, "second": second, "elapsed": elapsed}


def test_criterion_1_benchmark_exactness(tmp_path):
    t0 = time.monotonic()
    out = tmp_path / "real.csv"
    assert main([
        "gen-data", "--seed", "11", "--out", str(out), "--set", "data.n_total=100000",
    ]) == 0
    gen_elapsed = time.monotonic() - t0
    table = read_csv(out)
    assert table.class_counts() == {0: 70_000, 1: 15_000, 2: 10_000, 3: 4_000, 4: 1_000}
    pair = stratified_split(table, 0.2, seed=11)
    assert pair.test.class_counts() == {0: 14_000, 1: 3_000, 2: 2_000, 3: 800, 4: 200}
    assert gen_elapsed < 30.0
    print(f"\nPASS criterion 1: benchmark counts exact at n=100000; "
          f"split supports exact; gen-data took {gen_elapsed:.1f}s (< 30s)")


def test_criterion_2_metric_oracles():
    t0 = time.monotonic()
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        na, nb = rng.integers(1, 201, size=2)
        a = rng.normal(scale=rng.uniform(0.5, 2.0), size=na)
        b = rng.normal(loc=rng.uniform(-1, 1), size=nb)
        assert ks_statistic(a, b) == ks_oracle(a, b)
    for _ in range(1000):
        na, nb = rng.integers(1, 201, size=2)
        a = rng.normal(size=na)
        b = rng.normal(loc=rng.uniform(-2, 2), scale=rng.uniform(0.5, 2.0), size=nb)
        assert wasserstein1(a, b) == wasserstein1_oracle(a, b)
    for trial in range(1000):
        n, m = rng.integers(2, 201, size=2)
        d = int(rng.integers(1, 11))
        X = rng.normal(size=(n, d))
        if trial % 2 == 0:
            assert nn_distances(X, X, exclude_self=True) == nn_oracle(X, X, True)
        else:
            Y = rng.normal(size=(m, d))
            assert nn_distances(X, Y) == nn_oracle(X, Y, False)
    elapsed = time.monotonic() - t0
    assert elapsed < 60.0
    print(f"\nPASS criterion 2: ks/w1/nn match brute-force oracles exactly on "
          f"1000 instances each in {elapsed:.1f}s (< 60s)")


class _LinearCritic(torch.nn.Module):
    def __init__(self, w):
        super().__init__()
        self.w = torch.as_tensor(np.asarray(w, dtype=np.float64)).reshape(-1, 1)

    def forward(self, x, y):
        return x @ self.w


class _RandomCritic(torch.nn.Module):
    def __init__(self, dim, seed):
        super().__init__()
        rng = np.random.default_rng(seed)
        self.w1 = torch.from_numpy(rng.normal(size=(dim, 12)))
        self.b1 = torch.from_numpy(rng.normal(size=12))
        self.w2 = torch.from_numpy(rng.normal(size=(12, 1)))

    def forward(self, x, y):
        return torch.tanh(x @ self.w1 + self.b1) @ self.w2


def test_criterion_3_loss_analytics():
    # KL closed form vs Monte Carlo with 1e5 draws
    rng = np.random.default_rng(33)
    for case in range(5):
        mu = rng.normal(0.6, 0.4, size=int(rng.integers(2, 7)))
        sigma = rng.uniform(0.4, 1.8, size=mu.size)
        exact = float(kl_divergence(mu, sigma))
        mc = kl_monte_carlo(mu, sigma, n_draws=100_000, seed=900 + case)
        assert abs(exact - mc) / abs(mc) <= 0.02

    # gradient penalty on linear critics equals (||w|| - 1)^2
    for norm in (0.25, 0.5, 1.0, 2.0, 3.7):
        w = np.zeros(7)
        w[2] = norm
        gp = gradient_penalty(
            _LinearCritic(w),
            rng.normal(size=(9, 7)), rng.normal(size=(9, 7)),
            None, rng=np.random.default_rng(5),
        )
        assert abs(float(gp) - (norm - 1.0) ** 2) <= 1e-6

    # critic input-gradients vs central finite differences, 20 random critics
    h = 1e-6
    for seed in range(20):
        dim = int(np.random.default_rng(seed).integers(3, 11))
        critic = _RandomCritic(dim, seed)
        x = torch.from_numpy(np.random.default_rng(100 + seed).normal(size=(4, dim)))
        x_req = x.clone().requires_grad_(True)
        grad = torch.autograd.grad(critic(x_req, None).sum(), x_req)[0].numpy()
        for i in range(x.shape[0]):
            for j in range(dim):
                up = x.clone(); up[i, j] += h
                down = x.clone(); down[i, j] -= h
                fd = (float(critic(up, None).sum()) - float(critic(down, None).sum())) / (2 * h)
                assert abs(fd - grad[i, j]) <= 1e-4 * max(abs(grad[i, j]), 1e-4)
    print("\nPASS criterion 3: KL matches Monte Carlo within 2%; linear-critic "
          "gradient penalty exact within 1e-6; critic gradients match finite "
          "differences within 1e-4 relative on 20 critics")


def test_criterion_4_report_arithmetic():
    rows = [
        ClassRow(0, 1.00, 1.00, 1.00, 14000),
        ClassRow(1, 1.00, 1.00, 1.00, 3000),
        ClassRow(2, 0.88, 0.99, 0.93, 2000),
        ClassRow(3, 1.00, 0.87, 0.93, 800),
        ClassRow(4, 0.00, 0.00, 0.00, 200),
    ]
    report = ClassReport.from_rows(rows)
    assert abs(report.macro_precision - 0.776) < 1e-9
    for attr in ("weighted_precision", "weighted_recall", "weighted_f1"):
        assert abs(getattr(report, attr) - 0.98) <= 0.005
    print(f"\nPASS criterion 4: macro precision {report.macro_precision:.4f} "
          f"(0.776 exact); weighted P/R/F1 = {report.weighted_precision:.4f}/"
          f"{report.weighted_recall:.4f}/{report.weighted_f1:.4f}, all within "
          f"0.005 of 0.98")


def test_criterion_5_pipeline_determinism(pipeline_runs):
    first, second = pipeline_runs["first"], pipeline_runs["second"]
    assert first["real"].read_bytes() == second["real"].read_bytes()
    assert first["synthetic"].read_bytes() == second["synthetic"].read_bytes()
    assert first["loss_log"].read_bytes() == second["loss_log"].read_bytes()
    assert first["metrics"].read_bytes() == second["metrics"].read_bytes()
    assert pipeline_runs["elapsed"] < 15 * 60
    print(f"\nPASS criterion 5: two full pipeline runs byte-identical "
          f"(dataset, synthetic set, loss log, metrics JSON); both runs took "
          f"{pipeline_runs['elapsed']:.0f}s (< 900s)")


def test_criterion_6_desk_scale_utility(pipeline_runs):
    metrics = json.loads(pipeline_runs["first"]["metrics"].read_text())
    rows = {r["regime"]: r for r in metrics["utility"]}
    synth_f1 = rows["synthetic_only"]["f1"]
    real_f1 = rows["real_only"]["f1"]
    combined_f1 = rows["combined"]["f1"]
    min_nn = metrics["diversity"]["min_nn_distance"]
    assert synth_f1 >= 0.80
    assert combined_f1 >= real_f1 - 0.02
    assert min_nn > 0.0
    print(f"\nPASS criterion 6: synthetic-only F1 {synth_f1:.4f} (>= 0.80); "
          f"combined F1 {combined_f1:.4f} >= real-only {real_f1:.4f} - 0.02; "
          f"min NN distance {min_nn:.4f} > 0")


def test_criterion_7_frozen_contracts():
    data = generate_benchmark(1000, seed=5)
    cfg = TrainConfig(
        latent_dim=16, batch_size=32, levels=2, iters_per_level=30,
        stabilization_steps=15, seed=5, replay=ReplayConfig(capacity=256),
    )
    trainer = Trainer(cfg, data)
    extractor_before = trainer.extractor_checksum()
    phase_checks = []
    for level in (1, 2):
        trainer.level = level
        trainer.alpha = fade_in_factor(level, cfg.levels)
        view = resize_samples(data, level, trainer.alpha, cfg.levels)
        for _ in range(cfg.iters_per_level):
            idx = trainer._sample_batch_indices(view.n)
            trainer.train_step(view.features[idx], view.labels[idx])
        d_before = parameters_checksum(trainer.models.critic)
        c_before = parameters_checksum(trainer.models.classifier)
        trainer.stabilization_phase(view)
        phase_checks.append(
            parameters_checksum(trainer.models.critic) == d_before
            and parameters_checksum(trainer.models.classifier) == c_before
        )
    assert trainer.extractor_checksum() == extractor_before
    assert all(phase_checks)
    print(f"\nPASS criterion 7: extractor checksum unchanged across a "
          f"{cfg.levels}-level training run; critic/classifier checksums "
          f"unchanged across {len(phase_checks)} stabilization phases")


def test_criterion_8_structural_invariants(tmp_path):
    rng = np.random.default_rng(88)

    # translation invariance of the critic objective
    real, fake = rng.normal(size=10), rng.normal(size=10)
    _, d0 = adversarial_losses(real, fake, 0.3, 10.0)
    _, d1 = adversarial_losses(real + 5.0, fake + 5.0, 0.3, 10.0)
    assert abs(float(d0) - float(d1)) < 1e-9

    # lambda-linearity of the generator objective
    parts = LossBreakdown(*rng.uniform(0.1, 1.0, size=11))
    base = LossWeights()
    v1 = total_generator_objective(parts, base)
    doubled = LossWeights(**{**base.__dict__, "feature_matching": 10.0})
    assert total_generator_objective(parts, doubled) - v1 == pytest.approx(
        5.0 * parts.fm, rel=1e-9
    )

    # fade-in factor table
    assert [fade_in_factor(l, 4) for l in (1, 2, 3, 4)] == [0.25, 0.5, 0.75, 1.0]
    assert fade_in_factor(1, 1) == 1.0

    # level-view identity at a single level
    table = generate_benchmark(200, seed=9)
    assert resize_samples(table, 1, 1.0, 1) is table

    # CSV round trip
    path = tmp_path / "t.csv"
    write_csv(table, path)
    back = read_csv(path)
    assert np.array_equal(back.labels, table.labels)
    assert np.allclose(back.features, table.features, atol=1e-9)

    # stratified split within one sample of ideal per class
    for trial in range(10):
        counts = rng.integers(2, 30, size=5)
        labels = np.repeat(np.arange(5), counts)
        t = DatasetTable(rng.normal(size=(labels.size, 40)), labels)
        frac = float(rng.uniform(0.2, 0.8))
        pair = stratified_split(t, frac, seed=trial)
        n_test = int(np.floor(t.n * frac + 0.5))
        for c in range(5):
            ideal = counts[c] * n_test / t.n
            assert abs(pair.test.class_counts()[c] - ideal) < 1.0 + 1e-9

    print("\nPASS criterion 8: structural invariants hold (adv_d translation "
          "invariance, objective lambda-linearity, fade-in table, level-view "
          "identity, CSV round trip, split stratification within one sample)")
