"""The three defenses: adversarial-training mixing, random-noise
augmentation, and the GAN feature denoiser.

The GAN is conditional: the generator maps attacked feature sequences
toward their clean counterparts. Its adversarial loss is anchored by an
auxiliary MSE term (weight `mse_weight`); without it the denoising task
would be underdetermined.
"""

from dataclasses import dataclass

import numpy as np

from .corpus import LabeledUtterance
from .errors import (
    DimensionMismatch,
    EmptySet,
    InsufficientAdversarialPool,
    ShapeMismatch,
)
from .features import FeatureSequence
from .lstm import init_lstm, lstm_backward, lstm_forward


@dataclass(frozen=True)
class MixSpec:
    """Adversarial share of the training data."""

    fraction: float

    def __post_init__(self):
        if not (0.0 <= self.fraction <= 1.0):
            raise ValueError("fraction must lie in [0, 1]")


def mix_adversarial(clean_train, adv_pool, spec: MixSpec, seed: int = 0):
    """clean_train plus floor(fraction * |clean_train|) sampled adversarial items."""
    clean = list(clean_train)
    pool = list(adv_pool)
    wanted = int(np.floor(spec.fraction * len(clean)))
    if wanted > len(pool):
        raise InsufficientAdversarialPool(
            f"need {wanted} adversarial items, pool holds {len(pool)}"
        )
    if wanted == 0:
        return clean
    picked = np.random.default_rng(seed).choice(len(pool), wanted, replace=False)
    return clean + [pool[i] for i in sorted(picked)]


def augment_random_noise(train, noise_std: float, seed: int = 0):
    """Add seeded Gaussian noise of the given std to every waveform."""
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    items = list(train)
    if noise_std == 0.0:
        return items
    rng = np.random.default_rng(seed)
    out = []
    for item in items:
        samples = item.waveform.samples + rng.normal(
            0.0, noise_std, len(item.waveform)
        )
        wave = type(item.waveform)(
            np.clip(samples, -1.0, 1.0), item.waveform.sample_rate
        )
        out.append(
            LabeledUtterance(wave, item.label, item.speaker_id, "augmented")
        )
    return out


# ---------------------------------------------------------------------------
# GAN denoiser
# ---------------------------------------------------------------------------


@dataclass
class GanParams:
    """Generator (LSTM autoencoder) and discriminator (encoder + sigmoid head)."""

    generator: dict
    discriminator: dict
    dims: tuple  # (feature_dim, encoder_hidden, bottleneck, decoder_hidden)

    def copy(self) -> "GanParams":
        def copy_net(net):
            return {part: {k: v.copy() for k, v in sub.items()} for part, sub in net.items()}

        return GanParams(copy_net(self.generator), copy_net(self.discriminator), self.dims)


@dataclass(frozen=True)
class GanTrainConfig:
    lr: float = 1e-4
    batch_size: int = 32
    d_steps_per_g_step: int = 2
    pretrain_epochs: int = 20
    max_steps: int = 10000
    mse_weight: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")


def init_gan(
    rng: np.random.Generator,
    feature_dim: int,
    encoder_hidden: int = 64,
    bottleneck: int = 32,
    decoder_hidden: int = 64,
) -> GanParams:
    def linear(fan_in, fan_out):
        bound = 1.0 / np.sqrt(fan_in)
        return {
            "W": rng.uniform(-bound, bound, (fan_in, fan_out)),
            "b": np.zeros(fan_out),
        }

    generator = {
        "enc": init_lstm(rng, feature_dim, encoder_hidden),
        "bottleneck": linear(encoder_hidden, bottleneck),
        "dec": init_lstm(rng, bottleneck, decoder_hidden),
        "out": linear(decoder_hidden, feature_dim),
    }
    discriminator = {
        "enc": init_lstm(rng, feature_dim, encoder_hidden),
        "bottleneck": linear(encoder_hidden, bottleneck),
        "head": linear(bottleneck, 1),
    }
    dims = (feature_dim, encoder_hidden, bottleneck, decoder_hidden)
    return GanParams(generator, discriminator, dims)


def generator_forward(gen: dict, x: np.ndarray):
    """Encoder -> bottleneck -> repeated-code decoder -> per-frame linear."""
    h_enc, cache_enc = lstm_forward(gen["enc"], x)
    code = h_enc[:, -1] @ gen["bottleneck"]["W"] + gen["bottleneck"]["b"]
    code_rep = np.repeat(code[:, None, :], x.shape[1], axis=1)
    h_dec, cache_dec = lstm_forward(gen["dec"], code_rep)
    y = h_dec @ gen["out"]["W"] + gen["out"]["b"]
    cache = {
        "cache_enc": cache_enc,
        "cache_dec": cache_dec,
        "h_enc_last": h_enc[:, -1],
        "h_dec": h_dec,
    }
    return y, cache


def generator_backward(gen: dict, cache: dict, dy: np.ndarray):
    """Gradients (summed over the batch) of a loss with gradient dy at the output."""
    h_dec = cache["h_dec"]
    batch, steps, _ = dy.shape
    flat_h = h_dec.reshape(batch * steps, -1)
    flat_dy = dy.reshape(batch * steps, -1)
    grads = {
        "out": {"W": flat_h.T @ flat_dy, "b": flat_dy.sum(axis=0)}
    }
    dh_dec = dy @ gen["out"]["W"].T
    grads["dec"], dcode_rep = lstm_backward(gen["dec"], cache["cache_dec"], dh_dec)
    dcode = dcode_rep.sum(axis=1)
    grads["bottleneck"] = {
        "W": cache["h_enc_last"].T @ dcode,
        "b": dcode.sum(axis=0),
    }
    dh_last = dcode @ gen["bottleneck"]["W"].T
    dh_enc = np.zeros_like(cache["cache_enc"]["h_seq"])
    dh_enc[:, -1] = dh_last
    grads["enc"], dx = lstm_backward(gen["enc"], cache["cache_enc"], dh_enc)
    return grads, dx


def discriminator_forward(disc: dict, x: np.ndarray):
    """Real/fake logit per sequence; probability is sigmoid(logit)."""
    h_enc, cache_enc = lstm_forward(disc["enc"], x)
    code = h_enc[:, -1] @ disc["bottleneck"]["W"] + disc["bottleneck"]["b"]
    logit = code @ disc["head"]["W"] + disc["head"]["b"]
    cache = {"cache_enc": cache_enc, "h_enc_last": h_enc[:, -1], "code": code}
    return logit[:, 0], cache


def discriminator_backward(disc: dict, cache: dict, dlogit: np.ndarray):
    dlogit = dlogit[:, None]
    grads = {
        "head": {
            "W": cache["code"].T @ dlogit,
            "b": dlogit.sum(axis=0),
        }
    }
    dcode = dlogit @ disc["head"]["W"].T
    grads["bottleneck"] = {
        "W": cache["h_enc_last"].T @ dcode,
        "b": dcode.sum(axis=0),
    }
    dh_last = dcode @ disc["bottleneck"]["W"].T
    dh_enc = np.zeros_like(cache["cache_enc"]["h_seq"])
    dh_enc[:, -1] = dh_last
    grads["enc"], dx = lstm_backward(disc["enc"], cache["cache_enc"], dh_enc)
    return grads, dx


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500, 500)))


class _RmsProp:
    """RMSProp over a nested {part: {name: array}} parameter dict."""

    def __init__(self, lr: float, decay: float = 0.9, eps: float = 1e-8):
        self.lr = lr
        self.decay = decay
        self.eps = eps
        self.cache = {}

    def update(self, params: dict, grads: dict) -> None:
        for part in params:
            store = self.cache.setdefault(part, {})
            for k in params[part]:
                g = grads[part][k]
                r = store.get(k)
                r = (
                    (1 - self.decay) * g**2
                    if r is None
                    else self.decay * r + (1 - self.decay) * g**2
                )
                store[k] = r
                params[part][k] -= self.lr * g / (np.sqrt(r) + self.eps)


def _as_array(seq) -> np.ndarray:
    if isinstance(seq, FeatureSequence):
        return seq.frames
    return np.asarray(seq, dtype=np.float64)


def _group_indices(arrays, indices):
    groups = {}
    for i in indices:
        groups.setdefault(arrays[i].shape[0], []).append(i)
    return groups


def reconstruction_mse(gen: dict, sequences) -> float:
    """Mean squared error of the generator reconstructing its own input."""
    arrays = [_as_array(s) for s in sequences]
    total, count = 0.0, 0
    for _, idx in sorted(_group_indices(arrays, range(len(arrays))).items()):
        x = np.stack([arrays[i] for i in idx])
        y, _ = generator_forward(gen, x)
        total += float(((y - x) ** 2).sum())
        count += x.size
    return total / count


def gan_pretrain(gen: dict, clean, config: GanTrainConfig) -> dict:
    """Plain autoencoder pretraining of the generator on clean sequences."""
    arrays = [_as_array(s) for s in clean]
    if not arrays:
        raise EmptySet("no clean sequences to pretrain on")
    rng = np.random.default_rng(config.seed)
    opt = _RmsProp(config.lr)
    for _ in range(config.pretrain_epochs):
        order = rng.permutation(len(arrays))
        for start in range(0, len(order), config.batch_size):
            chunk = order[start : start + config.batch_size]
            for _, idx in sorted(_group_indices(arrays, chunk).items()):
                x = np.stack([arrays[i] for i in idx])
                y, cache = generator_forward(gen, x)
                dy = 2.0 * (y - x) / x.size
                grads, _ = generator_backward(gen, cache, dy)
                opt.update(gen, grads)
    return gen


def gan_train(pairs, config: GanTrainConfig, params: GanParams | None = None):
    """Alternating D/G optimization on (noisy, clean) sequence pairs.

    Every optimizer update counts as one step; each cycle runs
    d_steps_per_g_step discriminator updates then one generator update.
    Returns the best-MSE checkpoint plus the per-step loss log.
    """
    pair_list = [( _as_array(noisy), _as_array(clean)) for noisy, clean in pairs]
    if not pair_list:
        raise EmptySet("no training pairs")
    for noisy, clean in pair_list:
        if noisy.shape != clean.shape:
            raise ShapeMismatch("noisy/clean shapes differ within a pair")
    feature_dim = pair_list[0][0].shape[1]

    rng = np.random.default_rng(config.seed)
    if params is None:
        params = init_gan(rng, feature_dim)
    gen, disc = params.generator, params.discriminator
    g_opt = _RmsProp(config.lr)
    d_opt = _RmsProp(config.lr)

    noisy_arrays = [p[0] for p in pair_list]
    clean_arrays = [p[1] for p in pair_list]

    losses = []
    step = 0
    best = params.copy()
    best_mse = np.inf
    mse_ema = None

    def sample(k):
        return rng.choice(len(pair_list), size=min(k, len(pair_list)), replace=False)

    while step < config.max_steps:
        for _ in range(config.d_steps_per_g_step):
            idx = sample(config.batch_size)
            d_loss = 0.0
            d_grads = None
            count = 0
            for _, group in sorted(_group_indices(noisy_arrays, idx).items()):
                real = np.stack([clean_arrays[i] for i in group])
                fake, _ = generator_forward(gen, np.stack([noisy_arrays[i] for i in group]))
                logit_r, cache_r = discriminator_forward(disc, real)
                logit_f, cache_f = discriminator_forward(disc, fake)
                d_loss += float(_softplus(-logit_r).sum() + _softplus(logit_f).sum())
                grads_r, _ = discriminator_backward(disc, cache_r, _sigmoid(logit_r) - 1.0)
                grads_f, _ = discriminator_backward(disc, cache_f, _sigmoid(logit_f))
                merged = {
                    part: {
                        k: grads_r[part][k] + grads_f[part][k]
                        for k in grads_r[part]
                    }
                    for part in grads_r
                }
                if d_grads is None:
                    d_grads = merged
                else:
                    for part in d_grads:
                        for k in d_grads[part]:
                            d_grads[part][k] += merged[part][k]
                count += len(group)
            for part in d_grads:
                for k in d_grads[part]:
                    d_grads[part][k] /= count
            d_opt.update(disc, d_grads)
            step += 1
            losses.append({"step": step, "kind": "d", "loss": d_loss / count})

        idx = sample(config.batch_size)
        g_loss = 0.0
        mse_sum = 0.0
        g_grads = None
        count = 0
        elements = 0
        for _, group in sorted(_group_indices(noisy_arrays, idx).items()):
            noisy = np.stack([noisy_arrays[i] for i in group])
            clean = np.stack([clean_arrays[i] for i in group])
            fake, g_cache = generator_forward(gen, noisy)
            logit_f, d_cache = discriminator_forward(disc, fake)
            # adversarial term: log(1 - D(G(noisy))), minimized by G
            g_loss += float(-_softplus(logit_f).sum())
            mse_sum += float(((fake - clean) ** 2).sum())
            _, dfake_adv = discriminator_backward(disc, d_cache, -_sigmoid(logit_f))
            dfake = dfake_adv + 2.0 * config.mse_weight * (fake - clean) / fake[0].size
            grads, _ = generator_backward(gen, g_cache, dfake)
            if g_grads is None:
                g_grads = grads
            else:
                for part in g_grads:
                    for k in g_grads[part]:
                        g_grads[part][k] += grads[part][k]
            count += len(group)
            elements += fake.size
        for part in g_grads:
            for k in g_grads[part]:
                g_grads[part][k] /= count
        g_opt.update(gen, g_grads)
        step += 1
        batch_mse = mse_sum / elements
        total_g = g_loss / count + config.mse_weight * batch_mse
        losses.append(
            {"step": step, "kind": "g", "loss": total_g, "mse": batch_mse}
        )
        mse_ema = batch_mse if mse_ema is None else 0.9 * mse_ema + 0.1 * batch_mse
        if mse_ema < best_mse:
            best_mse = mse_ema
            best = params.copy()

    return best, losses


def save_gan(params: GanParams, path) -> None:
    """Versioned npz checkpoint mirroring the classifier's scheme."""
    arrays = {"format_version": np.array([1]), "dims": np.array(params.dims)}
    for net_name, net in (
        ("generator", params.generator),
        ("discriminator", params.discriminator),
    ):
        for part, sub in net.items():
            for k, v in sub.items():
                arrays[f"{net_name}_{part}_{k}"] = v
    np.savez(path, **arrays)


def load_gan(path) -> GanParams:
    data = np.load(path)
    if int(data["format_version"][0]) != 1:
        raise ValueError("unknown checkpoint version")
    nets = {"generator": {}, "discriminator": {}}
    for key in data.files:
        if key in ("format_version", "dims"):
            continue
        net_name, part, name = key.split("_", 2)
        nets[net_name].setdefault(part, {})[name] = data[key]
    return GanParams(
        nets["generator"],
        nets["discriminator"],
        tuple(int(v) for v in data["dims"]),
    )


def gan_clean(params: GanParams, seq: FeatureSequence) -> FeatureSequence:
    """Generator output for one sequence; shape-preserving and deterministic."""
    arr = _as_array(seq)
    if arr.shape[1] != params.dims[0]:
        raise DimensionMismatch(
            f"feature dim {arr.shape[1]} != generator input dim {params.dims[0]}"
        )
    y, _ = generator_forward(params.generator, arr[None])
    if isinstance(seq, FeatureSequence):
        return FeatureSequence(y[0], seq.descriptor_names, seq.frame_config)
    return FeatureSequence(y[0])
