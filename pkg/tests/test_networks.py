"""Network contracts: shapes, reparameterization, conditioning, determinism."""

import numpy as np
import pytest
import torch

from phantom.benchmark import BLOCK_MAP
from phantom.errors import ConfigurationError, InputError, ShapeError
from phantom.networks import (
    Classifier,
    FeatureLayout,
    block_intro_levels,
    build_models,
    column_intro_levels,
    one_hot,
    parameters_checksum,
    reparameterize,
)


@pytest.fixture(scope="module")
def models():
    return build_models(latent_dim=64, num_levels=1, seed=0)


def _randn(*shape, seed=0):
    return torch.from_numpy(np.random.default_rng(seed).normal(size=shape))


def test_encode_shapes(models):
    mu, sigma = models.encoder(_randn(7, 40, seed=1))
    assert mu.shape == (7, 64)
    assert sigma.shape == (7, 64)
    assert bool((sigma > 0).all())


def test_encode_rowwise(models):
    row = _randn(1, 40, seed=2)
    mu, sigma = models.encoder(torch.cat([row, row], dim=0))
    assert torch.equal(mu[0], mu[1])
    assert torch.equal(sigma[0], sigma[1])


def test_encode_deterministic():
    a = build_models(64, 1, seed=3)
    b = build_models(64, 1, seed=3)
    x = _randn(5, 40, seed=4)
    mu_a, sig_a = a.encoder(x)
    mu_b, sig_b = b.encoder(x)
    assert torch.equal(mu_a, mu_b)
    assert torch.equal(sig_a, sig_b)


def test_encode_rejects_non_finite(models):
    x = torch.zeros(3, 40, dtype=torch.float64)
    x[1, 5] = float("nan")
    with pytest.raises(InputError):
        models.encoder(x)


def test_reparameterize_zero_noise():
    mu = _randn(4, 8, seed=5)
    z = reparameterize(mu, torch.ones_like(mu), torch.zeros_like(mu))
    assert torch.equal(z, mu)


def test_reparameterize_passthrough():
    eps = _randn(4, 8, seed=6)
    z = reparameterize(torch.zeros_like(eps), torch.ones_like(eps), eps)
    assert torch.equal(z, eps)


def test_reparameterize_hand_case():
    mu = torch.tensor([1.0, 2.0], dtype=torch.float64)
    sigma = torch.tensor([0.5, 2.0], dtype=torch.float64)
    eps = torch.tensor([2.0, -1.0], dtype=torch.float64)
    assert torch.equal(reparameterize(mu, sigma, eps), torch.tensor([2.0, 0.0], dtype=torch.float64))


def test_reparameterize_shape_mismatch():
    with pytest.raises(ShapeError):
        reparameterize(torch.zeros(2, 3), torch.ones(2, 4), torch.zeros(2, 3))


def test_reparameterize_gradients():
    mu = _randn(3, 5, seed=7).requires_grad_(True)
    sigma = torch.exp(_randn(3, 5, seed=8)).requires_grad_(True)
    eps = _randn(3, 5, seed=9)
    reparameterize(mu, sigma, eps).sum().backward()
    assert torch.allclose(mu.grad, torch.ones_like(mu))
    assert torch.allclose(sigma.grad, eps)
    # finite-difference check on one coordinate
    h = 1e-6
    base_mu = mu.detach().clone()
    base_sigma = sigma.detach().clone()

    def z00(m, s):
        return float(reparameterize(m, s, eps)[0, 0])

    bumped = base_mu.clone()
    bumped[0, 0] += h
    d_mu = (z00(bumped, base_sigma) - z00(base_mu, base_sigma)) / h
    assert d_mu == pytest.approx(1.0, abs=1e-5)
    bumped_s = base_sigma.clone()
    bumped_s[0, 0] += h
    d_sigma = (z00(base_mu, bumped_s) - z00(base_mu, base_sigma)) / h
    assert d_sigma == pytest.approx(float(eps[0, 0]), abs=1e-5)


def test_block_intro_levels():
    assert block_intro_levels(1) == (1, 1, 1)
    assert block_intro_levels(2) == (1, 1, 2)
    assert block_intro_levels(3) == (1, 2, 3)
    assert block_intro_levels(4) == (1, 2, 3)
    with pytest.raises(ConfigurationError):
        block_intro_levels(0)


def test_generate_single_level_all_active(models):
    z = _randn(6, 64, seed=10)
    y = one_hot(np.zeros(6, dtype=int))
    gen = models.generator
    gen.set_placeholder(np.full(40, 123.0))
    try:
        out = gen(z, y, level=1, alpha=1.0)
        assert out.shape == (6, 40)
        # alpha=1 at the only level: placeholder must not leak through
        assert not torch.isclose(out, torch.tensor(123.0, dtype=torch.float64)).any()
    finally:
        gen.set_placeholder(np.zeros(40))


def test_generate_fade_in_boundary():
    models3 = build_models(latent_dim=16, num_levels=3, seed=11)
    gen = models3.generator
    placeholder = np.linspace(-1.0, 1.0, 40)
    gen.set_placeholder(placeholder)
    z = _randn(5, 16, seed=12)
    y = one_hot(np.ones(5, dtype=int))
    # level 3 introduces the behavioral block; alpha=0 pins it to placeholder
    out = gen(z, y, level=3, alpha=0.0)
    behavioral = [i for i, b in enumerate(BLOCK_MAP) if b == "behavioral"]
    expected = torch.from_numpy(placeholder[behavioral])
    assert torch.equal(out[:, behavioral], expected.expand(5, len(behavioral)))
    # at level 1 the later blocks sit at the placeholder too
    out1 = gen(z, y, level=1, alpha=1.0)
    later = [i for i, b in enumerate(BLOCK_MAP) if b != "network"]
    assert torch.equal(out1[:, later], torch.from_numpy(placeholder[later]).expand(5, len(later)))


def test_generate_deterministic(models):
    z = _randn(4, 64, seed=13)
    y = one_hot(np.array([0, 1, 2, 3]))
    a = models.generator(z, y, 1, 1.0)
    b = models.generator(z, y, 1, 1.0)
    assert torch.equal(a, b)


def test_generate_bounded_heads(models):
    z = 5.0 * _randn(50, 64, seed=14)
    y = one_hot(np.zeros(50, dtype=int))
    out = models.generator(z, y, 1, 1.0)
    layout = FeatureLayout()
    for a, b, head in layout.runs:
        chunk = out[:, a:b]
        if head == "sigmoid":
            assert bool((chunk >= 0).all()) and bool((chunk <= 1).all())
        elif head == "softmax":
            assert torch.allclose(chunk.sum(dim=1), torch.ones(50, dtype=torch.float64))


def test_generate_level_out_of_range(models):
    z = _randn(2, 64, seed=15)
    y = one_hot(np.zeros(2, dtype=int))
    with pytest.raises(ConfigurationError):
        models.generator(z, y, level=2, alpha=1.0)
    with pytest.raises(ConfigurationError):
        models.generator(z, y, level=1, alpha=1.5)


def test_criticize_shape_and_rowwise(models):
    x = _randn(8, 40, seed=16)
    y = one_hot(np.zeros(8, dtype=int))
    scores = models.critic(x, y)
    assert scores.shape == (8, 1)
    two = torch.cat([x[:1], x[:1]], dim=0)
    s2 = models.critic(two, one_hot(np.zeros(2, dtype=int)))
    assert torch.equal(s2[0], s2[1])


def test_classify_rows_sum_to_one(models):
    probs = models.classifier(_randn(9, 40, seed=17))
    assert probs.shape == (9, 5)
    assert torch.allclose(probs.sum(dim=1), torch.ones(9, dtype=torch.float64), atol=1e-6)
    assert bool((probs >= 0).all())


def test_classify_zero_head_uniform():
    clf = Classifier()
    with torch.no_grad():
        clf.head.weight.zero_()
        clf.head.bias.zero_()
    probs = clf(_randn(4, 40, seed=18))
    assert torch.allclose(probs, torch.full((4, 5), 0.2, dtype=torch.float64))


def test_classify_rejects_non_finite(models):
    x = torch.full((2, 40), float("inf"), dtype=torch.float64)
    with pytest.raises(InputError):
        models.classifier(x)


def test_column_intro_levels_match_blocks():
    intro = column_intro_levels(BLOCK_MAP, 3)
    assert intro[:16].tolist() == [1] * 16
    assert intro[16:28].tolist() == [2] * 12
    assert intro[28:].tolist() == [3] * 12


def test_checksum_changes_with_seed():
    a = build_models(16, 1, seed=1)
    b = build_models(16, 1, seed=2)
    assert parameters_checksum(a.generator) != parameters_checksum(b.generator)


def test_one_hot_rejects_bad_labels():
    with pytest.raises(InputError):
        one_hot(np.array([0, 5]))
