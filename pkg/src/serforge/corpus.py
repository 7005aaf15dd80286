"""Dataset plumbing: binary-valence label mapping, synthetic corpus and
noise-source generation, and speaker-independent splitting.

No licensed audio ships with the toolkit; loaders accept user-supplied
directories, and a deterministic synthetic corpus stands in for desk-scale
experiments. Synthetic "emotion" lives in F0 and energy dynamics, the same
families the feature extractor measures.
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attack import NoiseSource
from .audio import Waveform, load_wav
from .errors import DataError, TooFewSpeakers, UnknownLabel

SAMPLE_RATE = 16000

LABELS = ("negative", "positive")

# Binary valence mapping for the two supported corpora. "excited" is
# accepted alongside the "exited" spelling used in some IEMOCAP exports.
LABEL_MAP = {
    "iemocap": {
        "happiness": "positive",
        "exited": "positive",
        "excited": "positive",
        "neutral": "positive",
        "anger": "negative",
        "sadness": "negative",
    },
    "fau_aibo": {
        "neutral": "positive",
        "motherese": "positive",
        "joyful": "positive",
        "angry": "negative",
        "touchy": "negative",
        "reprimanding": "negative",
        "emphatic": "negative",
    },
}


def label_index(label: str) -> int:
    return LABELS.index(label)


@dataclass(frozen=True)
class LabeledUtterance:
    waveform: Waveform
    label: str
    speaker_id: str
    provenance: str = "clean"

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}")


@dataclass(frozen=True)
class CorpusSpec:
    num_speakers: int = 5
    utterances_per_speaker: int = 40
    duration_s: float = 2.0
    class_separation: float = 2.0
    base_noise_variance: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if min(self.num_speakers, self.utterances_per_speaker) < 1:
            raise ValueError("speaker and utterance counts must be positive")
        if self.duration_s <= 0 or self.class_separation < 0:
            raise ValueError("duration must be positive, separation >= 0")
        if self.base_noise_variance < 0:
            raise ValueError("base_noise_variance must be >= 0")


def map_label(raw: str, scheme: str) -> str:
    """Binary valence class for a raw emotion category (case-insensitive)."""
    if scheme not in LABEL_MAP:
        raise ValueError(f"scheme must be one of {tuple(LABEL_MAP)}")
    key = raw.strip().lower()
    try:
        return LABEL_MAP[scheme][key]
    except KeyError:
        raise UnknownLabel(f"{raw!r} is not a mapped {scheme} category") from None


def _harmonic_utterance(
    rng: np.random.Generator,
    label: str,
    speaker_offset_hz: float,
    spec: CorpusSpec,
) -> Waveform:
    n = int(round(spec.duration_s * SAMPLE_RATE))
    t = np.arange(n) / SAMPLE_RATE
    progress = t / spec.duration_s

    if label == "positive":
        mean_f0 = 220.0 + spec.class_separation * 30.0
        contour = 1.0 + 0.08 * (progress - 0.5)  # rising
        envelope = 1.0 + 0.35 * np.sin(2.0 * np.pi * 4.0 * t)
    else:
        mean_f0 = 140.0
        contour = 1.0 - 0.08 * (progress - 0.5)  # falling
        envelope = np.ones(n)

    f0 = (mean_f0 + speaker_offset_hz + rng.uniform(-4.0, 4.0)) * contour
    phase = 2.0 * np.pi * np.cumsum(f0) / SAMPLE_RATE
    tone = np.zeros(n)
    for harmonic in range(1, 6):
        tone += np.sin(harmonic * phase + rng.uniform(0, 2 * np.pi)) / harmonic
    tone *= envelope

    # noise-only lead-in (like pre-utterance silence) so background noise
    # is observable; kept short at the tail because the classifier reads
    # the final time step. 60 ms raised-cosine fades avoid onset clicks.
    lead = min(int(0.25 * SAMPLE_RATE), n // 4)
    tail = min(int(0.05 * SAMPLE_RATE), n // 16)
    fade = min(int(0.06 * SAMPLE_RATE), lead)
    gate = np.zeros(n)
    gate[lead : n - tail] = 1.0
    if fade > 0:
        ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(fade) / fade))
        gate[lead : lead + fade] = ramp
        gate[n - tail - fade : n - tail] = ramp[::-1]
    tone *= gate

    # per-utterance level and noise-floor variability (+-3 dB / 0.5-1.5x)
    # keeps the classifier from keying on absolute levels
    level = 0.1 * 10.0 ** rng.uniform(-0.15, 0.15)
    tone *= level / max(np.sqrt(np.mean(tone**2)), 1e-12)
    noise_var = spec.base_noise_variance * rng.uniform(0.5, 1.5)
    tone += rng.normal(0.0, np.sqrt(noise_var), n)
    return Waveform(np.clip(tone, -1.0, 1.0), SAMPLE_RATE)


def generate_synthetic_corpus(spec: CorpusSpec):
    """Deterministic harmonic-tone corpus with class-dependent dynamics."""
    rng = np.random.default_rng(spec.seed)
    utterances = []
    for s in range(spec.num_speakers):
        speaker_offset = float(rng.uniform(-12.0, 12.0))
        for u in range(spec.utterances_per_speaker):
            label = LABELS[(u + 1) % 2]  # alternate for exact balance
            wave = _harmonic_utterance(rng, label, speaker_offset, spec)
            utterances.append(
                LabeledUtterance(wave, label, f"spk{s:02d}", "clean")
            )
    return utterances


def generate_noise_source(kind: str, duration_s: float, seed: int) -> NoiseSource:
    """Synthetic noise texture standing in for a real-world recording.

    cafe: pink noise plus sparse transient bursts; meeting: pink noise plus
    a few low-level harmonic voice-like tones; station: brown noise with
    extra rumble below 200 Hz.
    """
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    if kind not in ("cafe", "meeting", "station"):
        raise ValueError("kind must be cafe, meeting or station")
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * SAMPLE_RATE))
    freqs = np.fft.rfftfreq(n, d=1.0 / SAMPLE_RATE)
    white = np.fft.rfft(rng.normal(size=n))
    safe_f = np.maximum(freqs, freqs[1])

    if kind == "station":
        shaped = white / safe_f  # brown
        rumble = white * (freqs < 200.0) / np.sqrt(safe_f)
        base = np.fft.irfft(shaped + 0.5 * rumble, n=n)
    else:
        base = np.fft.irfft(white / np.sqrt(safe_f), n=n)  # pink

    base /= np.sqrt(np.mean(base**2))
    out = base.copy()

    if kind == "cafe":
        t = np.arange(n)
        for _ in range(max(2, int(duration_s))):
            onset = int(rng.integers(0, n))
            length = int(rng.integers(200, 800))
            burst = rng.normal(size=length) * np.exp(-np.arange(length) / (length / 4))
            stop = min(onset + length, n)
            out[onset:stop] += 1.5 * burst[: stop - onset]
    elif kind == "meeting":
        t = np.arange(n) / SAMPLE_RATE
        for _ in range(int(rng.integers(2, 5))):
            f0 = float(rng.uniform(110.0, 280.0))
            onset = float(rng.uniform(0.0, duration_s * 0.5))
            tone = np.sin(2 * np.pi * f0 * t) + 0.5 * np.sin(2 * np.pi * 2 * f0 * t)
            tone *= t >= onset
            out += 0.4 * tone

    out *= 0.1 / np.sqrt(np.mean(out**2))
    return NoiseSource(Waveform(np.clip(out, -1.0, 1.0), SAMPLE_RATE), kind)


def split_speaker_independent(corpus, seed: int = 0):
    """Speaker-disjoint (train, eval, test) split.

    One speaker goes to test. With >= 5 speakers eval also gets its own
    speaker; with 3 or 4 speakers the fallback is the same 1-speaker eval,
    leaving at least one train speaker. Below 3 speakers the protocol is
    undefined.
    """
    utterances = list(corpus)
    speakers = sorted({u.speaker_id for u in utterances})
    if len(speakers) < 3:
        raise TooFewSpeakers(f"need >= 3 speakers, got {len(speakers)}")
    order = list(np.random.default_rng(seed).permutation(speakers))
    test_speaker, eval_speaker = order[0], order[1]
    train = [u for u in utterances if u.speaker_id not in (test_speaker, eval_speaker)]
    eval_set = [u for u in utterances if u.speaker_id == eval_speaker]
    test = [u for u in utterances if u.speaker_id == test_speaker]
    return train, eval_set, test


def load_labeled_corpus(csv_path, scheme: str, base_dir=None):
    """Load user-supplied audio from a `path,raw_label,speaker_id` CSV."""
    csv_path = Path(csv_path)
    base = Path(base_dir) if base_dir is not None else csv_path.parent
    try:
        with open(csv_path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [
                f.strip() for f in reader.fieldnames
            ] != ["path", "raw_label", "speaker_id"]:
                raise DataError(
                    "label CSV must have header: path,raw_label,speaker_id"
                )
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read {csv_path}: {exc}") from exc
    utterances = []
    for row in rows:
        wave = load_wav(base / row["path"])
        label = map_label(row["raw_label"], scheme)
        utterances.append(LabeledUtterance(wave, label, row["speaker_id"]))
    return utterances


def save_manifest(corpus, path) -> None:
    """JSON manifest listing utterances with label and provenance."""
    records = [
        {
            "index": i,
            "label": u.label,
            "speaker_id": u.speaker_id,
            "provenance": u.provenance,
            "num_samples": len(u.waveform),
            "sample_rate": u.waveform.sample_rate,
        }
        for i, u in enumerate(corpus)
    ]
    with open(path, "w") as fh:
        json.dump({"format": "serforge-manifest-v1", "utterances": records}, fh, indent=2)
        fh.write("\n")
