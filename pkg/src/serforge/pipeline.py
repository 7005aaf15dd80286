"""Dataset-level glue between audio, attack, features and classifier."""

import numpy as np

from .attack import AttackConfig, NoiseSource, craft_adversarial
from .audio import FrameConfig
from .corpus import LabeledUtterance, label_index
from .features import (
    StandardizationStats,
    apply_standardization,
    extract_lld,
    fit_standardization,
)
from .noise import estimate_noise_profile


def utterance_seed(base_seed: int, index: int) -> int:
    """Stable per-utterance sub-seed for segment selection."""
    return (base_seed * 1_000_003 + index) % (2**63)


def craft_dataset(
    utterances,
    source: NoiseSource,
    epsilon: float,
    seed: int,
    frame_config: FrameConfig = FrameConfig(),
    profiles=None,
):
    """Adversarial copy of every utterance, original labels preserved."""
    out = []
    for i, item in enumerate(utterances):
        config = AttackConfig(epsilon, source.label if source.label in
                              ("cafe", "meeting", "station") else "user_supplied",
                              utterance_seed(seed, i))
        profile = profiles[i] if profiles is not None else None
        adv = craft_adversarial(item.waveform, source, config, frame_config, profile)
        out.append(
            LabeledUtterance(
                adv,
                item.label,
                item.speaker_id,
                f"adversarial({source.label},{epsilon})",
            )
        )
    return out


def noise_profiles(utterances, frame_config: FrameConfig = FrameConfig()):
    return [estimate_noise_profile(u.waveform, frame_config) for u in utterances]


def featurize(
    utterances,
    stats: StandardizationStats | None = None,
    frame_config: FrameConfig = FrameConfig(),
):
    """(FeatureSequence, label index) pairs, optionally standardized."""
    out = []
    for item in utterances:
        seq = extract_lld(item.waveform, frame_config)
        if stats is not None:
            seq = apply_standardization(seq, stats)
        out.append((seq, label_index(item.label)))
    return out


def fit_stats_on(
    utterances, frame_config: FrameConfig = FrameConfig()
) -> StandardizationStats:
    raw = [extract_lld(u.waveform, frame_config) for u in utterances]
    return fit_standardization(raw)


def dataset_digest(feature_sets) -> str:
    """Order-sensitive content hash of a featurized dataset."""
    import hashlib

    h = hashlib.sha256()
    for seq, label in feature_sets:
        h.update(np.ascontiguousarray(seq.frames).tobytes())
        h.update(bytes([label]))
    return h.hexdigest()
