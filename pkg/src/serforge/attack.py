"""Black-box adversarial crafting.

An adversarial example is the clean utterance plus a scaled noise segment
whose sample mean and variance have been matched to the utterance's own
estimated background noise.
"""

import math
from dataclasses import dataclass

import numpy as np

from .audio import FrameConfig, Waveform
from .errors import EmptySegment, LengthMismatch, SampleRateMismatch
from .noise import NoiseProfile, estimate_noise_profile

NOISE_KINDS = ("cafe", "meeting", "station", "user_supplied")


@dataclass(frozen=True)
class AttackConfig:
    """Perturbation factor, noise texture and segment-selection seed."""

    epsilon: float
    noise_kind: str = "cafe"
    seed: int = 0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {NOISE_KINDS}")


@dataclass(frozen=True)
class NoiseSource:
    """A long noise recording segments are drawn from."""

    audio: Waveform
    label: str = "user_supplied"


def match_noise_statistics(
    noise_segment: Waveform, profile: NoiseProfile
) -> Waveform:
    """Rescale a noise segment to the profile's time mean and variance.

    A constant segment (zero spread) or a zero-variance profile both yield
    the constant profile mean; the latter makes the perturbation
    energy-free before epsilon scaling.
    """
    if len(noise_segment) < 1:
        raise EmptySegment("noise segment holds no samples")
    seg = noise_segment.samples
    mu_ref = profile.time_mean
    sigma_ref = math.sqrt(profile.time_variance)
    sigma_n = float(seg.std())
    if sigma_n == 0.0 or sigma_ref == 0.0:
        matched = np.full(seg.size, mu_ref)
    else:
        matched = (seg - seg.mean()) / sigma_n * sigma_ref + mu_ref
    return Waveform(matched, noise_segment.sample_rate)


def select_segment(source: NoiseSource, length: int, seed: int) -> Waveform:
    """Seeded segment of given length, wrapping cyclically past the end."""
    audio = source.audio.samples
    offset = int(np.random.default_rng(seed).integers(0, audio.size))
    idx = (offset + np.arange(length)) % audio.size
    return Waveform(audio[idx], source.audio.sample_rate)


def craft_adversarial(
    x: Waveform,
    source: NoiseSource,
    config: AttackConfig,
    frame_config: FrameConfig = FrameConfig(),
    profile: NoiseProfile | None = None,
) -> Waveform:
    """Return x + epsilon * delta, clipped to [-1, 1].

    delta is a seeded segment of the source matched to the utterance's own
    noise profile. A precomputed profile may be passed to skip
    re-estimation in batch sweeps.
    """
    if x.sample_rate != source.audio.sample_rate:
        raise SampleRateMismatch(
            f"utterance at {x.sample_rate} Hz, source at {source.audio.sample_rate} Hz"
        )
    if profile is None:
        profile = estimate_noise_profile(x, frame_config)
    segment = select_segment(source, len(x), config.seed)
    delta = match_noise_statistics(segment, profile)
    perturbed = np.clip(x.samples + config.epsilon * delta.samples, -1.0, 1.0)
    return Waveform(perturbed, x.sample_rate)


def perceptibility_snr(x: Waveform, x_adv: Waveform) -> float:
    """Signal-to-perturbation ratio in dB; math.inf when the perturbation is zero."""
    if len(x) != len(x_adv):
        raise LengthMismatch(f"lengths differ: {len(x)} vs {len(x_adv)}")
    signal_energy = float(np.sum(x.samples**2))
    pert_energy = float(np.sum((x_adv.samples - x.samples) ** 2))
    if pert_energy == 0.0:
        return math.inf
    return 10.0 * math.log10(signal_energy / pert_energy)
