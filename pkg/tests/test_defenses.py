import numpy as np
import pytest

from serforge.corpus import CorpusSpec, generate_synthetic_corpus
from serforge.defenses import (
    GanParams,
    GanTrainConfig,
    MixSpec,
    augment_random_noise,
    discriminator_backward,
    discriminator_forward,
    gan_clean,
    gan_pretrain,
    gan_train,
    generator_backward,
    generator_forward,
    init_gan,
    mix_adversarial,
    reconstruction_mse,
)
from serforge.errors import (
    DimensionMismatch,
    EmptySet,
    InsufficientAdversarialPool,
    ShapeMismatch,
)
from serforge.features import FeatureSequence


def _corpus():
    spec = CorpusSpec(num_speakers=3, utterances_per_speaker=4, duration_s=0.5)
    return generate_synthetic_corpus(spec)


def test_mix_spec_bounds():
    MixSpec(0.0)
    MixSpec(1.0)
    with pytest.raises(ValueError):
        MixSpec(1.1)
    with pytest.raises(ValueError):
        MixSpec(-0.1)


def test_mix_adversarial_count_is_floor():
    clean = _corpus()  # 12 items
    pool = clean * 2
    for fraction, expected in ((0.0, 0), (0.3, 3), (0.5, 6), (1.0, 12)):
        mixed = mix_adversarial(clean, pool, MixSpec(fraction), seed=0)
        assert len(mixed) == 12 + expected
        assert mixed[:12] == clean


def test_mix_adversarial_deterministic_and_no_repeats():
    from serforge.corpus import LabeledUtterance

    clean = _corpus()
    pool = [
        LabeledUtterance(u.waveform, u.label, u.speaker_id, "adversarial")
        for u in clean * 3
    ]
    a = mix_adversarial(clean, pool, MixSpec(0.75), seed=4)
    b = mix_adversarial(clean, pool, MixSpec(0.75), seed=4)
    assert [id(u) for u in a] == [id(u) for u in b]
    extras = a[len(clean):]
    assert len({id(u) for u in extras}) == len(extras)  # without replacement


def test_mix_adversarial_pool_too_small():
    clean = _corpus()
    with pytest.raises(InsufficientAdversarialPool):
        mix_adversarial(clean, clean[:5], MixSpec(1.0), seed=0)


def test_augment_zero_std_is_identity():
    clean = _corpus()
    assert augment_random_noise(clean, 0.0) == clean


def test_augment_adds_expected_variance():
    clean = _corpus()
    std = 0.02
    out = augment_random_noise(clean, std, seed=1)
    diffs = np.concatenate(
        [
            o.waveform.samples - c.waveform.samples
            for o, c in zip(out, clean)
        ]
    )
    assert diffs.var() == pytest.approx(std**2, rel=0.1)
    assert abs(diffs.mean()) < 0.005
    assert all(o.provenance == "augmented" for o in out)
    assert all(o.label == c.label for o, c in zip(out, clean))


def test_augment_deterministic():
    clean = _corpus()
    a = augment_random_noise(clean, 0.01, seed=3)
    b = augment_random_noise(clean, 0.01, seed=3)
    for ua, ub in zip(a, b):
        assert np.array_equal(ua.waveform.samples, ub.waveform.samples)


def _small_gan(seed=0, dim=3):
    rng = np.random.default_rng(seed)
    return init_gan(rng, dim, encoder_hidden=5, bottleneck=4, decoder_hidden=5)


def _fd_check(loss_fn, params_dict, grads, rng, picks=10, eps=1e-6):
    for part, sub in params_dict.items():
        for k, arr in sub.items():
            flat = arr.reshape(-1)
            for j in rng.choice(flat.size, size=min(picks, flat.size), replace=False):
                old = flat[j]
                flat[j] = old + eps
                up = loss_fn()
                flat[j] = old - eps
                down = loss_fn()
                flat[j] = old
                fd = (up - down) / (2 * eps)
                g = grads[part][k].reshape(-1)[j]
                if abs(fd) < 1e-7:
                    assert g == pytest.approx(fd, abs=1e-7)
                else:
                    assert g == pytest.approx(fd, rel=1e-4, abs=1e-7)


def test_generator_gradients_match_finite_differences():
    rng = np.random.default_rng(5)
    params = _small_gan(5)
    x = rng.normal(size=(2, 4, 3))
    target = rng.normal(size=(2, 4, 3))

    def loss():
        y, _ = generator_forward(params.generator, x)
        return float(((y - target) ** 2).sum())

    y, cache = generator_forward(params.generator, x)
    grads, _ = generator_backward(params.generator, cache, 2.0 * (y - target))
    _fd_check(loss, params.generator, grads, rng)


def test_discriminator_gradients_match_finite_differences():
    rng = np.random.default_rng(6)
    params = _small_gan(6)
    x = rng.normal(size=(3, 4, 3))
    weights = rng.normal(size=3)

    def loss():
        logit, _ = discriminator_forward(params.discriminator, x)
        return float((weights * logit).sum())

    logit, cache = discriminator_forward(params.discriminator, x)
    grads, _ = discriminator_backward(params.discriminator, cache, weights)
    _fd_check(loss, params.discriminator, grads, rng)


def test_discriminator_input_gradient():
    rng = np.random.default_rng(7)
    params = _small_gan(7)
    x = rng.normal(size=(2, 3, 3))
    weights = rng.normal(size=2)
    logit, cache = discriminator_forward(params.discriminator, x)
    _, dx = discriminator_backward(params.discriminator, cache, weights)
    eps = 1e-6
    for _ in range(10):
        idx = tuple(rng.integers(0, s) for s in x.shape)
        old = x[idx]
        x[idx] = old + eps
        up = float((weights * discriminator_forward(params.discriminator, x)[0]).sum())
        x[idx] = old - eps
        down = float((weights * discriminator_forward(params.discriminator, x)[0]).sum())
        x[idx] = old
        fd = (up - down) / (2 * eps)
        assert dx[idx] == pytest.approx(fd, rel=1e-4, abs=1e-8)


def test_pretrain_reduces_reconstruction_error():
    rng = np.random.default_rng(8)
    params = _small_gan(8)
    # constant-per-item sequences: learnable through the bottleneck
    clean = [np.full((6, 3), rng.uniform(-1, 1, 3)) for _ in range(16)]
    before = reconstruction_mse(params.generator, clean)
    gan_pretrain(
        params.generator,
        clean,
        GanTrainConfig(lr=3e-3, batch_size=8, pretrain_epochs=60, seed=0),
    )
    after = reconstruction_mse(params.generator, clean)
    assert after < 0.5 * before


def test_gan_train_step_accounting_and_finite_losses():
    rng = np.random.default_rng(9)
    params = _small_gan(9)
    pairs = [
        (rng.normal(size=(5, 3)), rng.normal(size=(5, 3))) for _ in range(12)
    ]
    config = GanTrainConfig(
        lr=1e-3, batch_size=6, d_steps_per_g_step=2, max_steps=30, seed=0
    )
    best, losses = gan_train(pairs, config, params)
    assert len(losses) == 30
    assert all(np.isfinite(entry["loss"]) for entry in losses)
    kinds = [entry["kind"] for entry in losses]
    assert kinds[:3] == ["d", "d", "g"]
    assert [entry["step"] for entry in losses] == list(range(1, 31))
    assert isinstance(best, GanParams)


def test_gan_train_denoises_structured_pairs():
    # clean sequences are constant per item; noisy adds white noise. The
    # MSE anchor alone should pull reconstructions toward the clean target.
    rng = np.random.default_rng(10)
    clean = [np.full((6, 3), rng.uniform(-1, 1, 3)) for _ in range(24)]
    pairs = [(c + rng.normal(0, 0.5, c.shape), c) for c in clean]
    params = _small_gan(10)
    gan_pretrain(
        params.generator,
        [c for _, c in pairs],
        GanTrainConfig(lr=3e-3, batch_size=8, pretrain_epochs=40, seed=1),
    )
    config = GanTrainConfig(lr=1e-3, batch_size=12, max_steps=300, seed=1)
    best, _ = gan_train(pairs, config, params)
    before = np.mean([((n - c) ** 2).mean() for n, c in pairs])
    after = np.mean(
        [
            ((generator_forward(best.generator, n[None])[0][0] - c) ** 2).mean()
            for n, c in pairs
        ]
    )
    assert after < 0.5 * before


def test_gan_train_validation():
    with pytest.raises(EmptySet):
        gan_train([], GanTrainConfig(max_steps=1))
    rng = np.random.default_rng(11)
    bad = [(rng.normal(size=(4, 3)), rng.normal(size=(5, 3)))]
    with pytest.raises(ShapeMismatch):
        gan_train(bad, GanTrainConfig(max_steps=1))


def test_gan_clean_shape_and_determinism():
    rng = np.random.default_rng(12)
    params = _small_gan(12)
    frames = rng.normal(size=(7, 3))
    seq = FeatureSequence(frames, ("a", "b", "c"))
    out1 = gan_clean(params, seq)
    out2 = gan_clean(params, seq)
    assert out1.frames.shape == frames.shape
    assert out1.descriptor_names == seq.descriptor_names
    assert np.array_equal(out1.frames, out2.frames)


def test_gan_clean_dim_mismatch():
    params = _small_gan(13)
    with pytest.raises(DimensionMismatch):
        gan_clean(params, np.zeros((4, 5)))
