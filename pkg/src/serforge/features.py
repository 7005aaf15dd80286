"""Frame-level acoustic descriptors and utterance-level functionals.

An 18-descriptor subset covering the energy, spectral, pitch, voice
quality and cepstral families: log-energy, ZCR, spectral centroid / flux /
roll-off / slope, F0, voicing probability, HNR, and MFCC 1-9.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct

from .audio import FrameConfig, Waveform, frame_signal
from .errors import EmptyTrainingSet, TooShort

ENERGY_FLOOR = 1e-10
VOICING_THRESHOLD = 0.3
F0_MIN_HZ = 60.0
F0_MAX_HZ = 400.0
ROLLOFF_FRACTION = 0.85
NUM_MEL_BANDS = 26
NUM_MFCC = 9

DESCRIPTOR_NAMES = (
    "log_energy",
    "zcr",
    "spectral_centroid",
    "spectral_flux",
    "spectral_rolloff",
    "spectral_slope",
    "f0",
    "voicing_prob",
    "hnr",
) + tuple(f"mfcc{i}" for i in range(1, NUM_MFCC + 1))

NUM_DESCRIPTORS = len(DESCRIPTOR_NAMES)

FUNCTIONAL_NAMES = ("mean", "std", "p20", "p80")


@dataclass(frozen=True)
class FeatureSequence:
    """Per-frame descriptor matrix (num_frames x D)."""

    frames: np.ndarray
    descriptor_names: tuple = DESCRIPTOR_NAMES
    frame_config: FrameConfig = field(default_factory=FrameConfig)

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        object.__setattr__(self, "frames", frames)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise ValueError("frames must be 2-D with >= 1 row")
        if frames.shape[1] != len(self.descriptor_names):
            raise ValueError("descriptor_names length must match feature dim")
        if not np.all(np.isfinite(frames)):
            raise ValueError("feature values must be finite")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]


@dataclass(frozen=True)
class FeatureVector:
    """Utterance-level functionals, 4 per descriptor."""

    values: np.ndarray
    names: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.names),):
            raise ValueError("values/names length mismatch")
        if not np.all(np.isfinite(values)):
            raise ValueError("functional values must be finite")


@dataclass(frozen=True)
class StandardizationStats:
    """Per-descriptor mean/std fit on the training split only."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)
        if mean.shape != std.shape or mean.ndim != 1:
            raise ValueError("mean/std must be 1-D and equal length")
        if np.any(std <= 0):
            raise ValueError("std entries must be > 0")


def mel_filterbank(num_bands: int, num_bins: int, sample_rate: int) -> np.ndarray:
    """Triangular mel filters over [0, sr/2], shape (num_bands, num_bins)."""
    def hz_to_mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    nyquist = sample_rate / 2.0
    mel_points = np.linspace(0.0, hz_to_mel(nyquist), num_bands + 2)
    hz_points = mel_to_hz(mel_points)
    bin_freqs = np.linspace(0.0, nyquist, num_bins)
    bank = np.zeros((num_bands, num_bins))
    for b in range(num_bands):
        lo, mid, hi = hz_points[b : b + 3]
        rising = (bin_freqs - lo) / max(mid - lo, 1e-12)
        falling = (hi - bin_freqs) / max(hi - mid, 1e-12)
        bank[b] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


def _autocorr_pitch(frames: np.ndarray, sample_rate: int):
    """Normalized-autocorrelation F0 and voicing per frame."""
    n = frames.shape[1]
    lag_min = max(1, int(np.ceil(sample_rate / F0_MAX_HZ)))
    lag_max = min(n - 1, int(np.floor(sample_rate / F0_MIN_HZ)))
    if lag_max < lag_min:
        zeros = np.zeros(frames.shape[0])
        return zeros, zeros

    fft_len = 2 * n
    spectrum = np.fft.rfft(frames, n=fft_len, axis=1)
    raw = np.fft.irfft(np.abs(spectrum) ** 2, n=fft_len, axis=1)[:, : n]

    sq = frames**2
    total = sq.sum(axis=1, keepdims=True)
    tail_cumsum = np.cumsum(sq, axis=1)
    lags = np.arange(lag_min, lag_max + 1)
    # energy of x[0:n-lag] and x[lag:n] for each candidate lag
    head_energy = tail_cumsum[:, n - lags - 1]
    tail_energy = total - tail_cumsum[:, lags - 1]
    denom = np.sqrt(np.maximum(head_energy * tail_energy, 0.0))
    corr = raw[:, lag_min : lag_max + 1]
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(denom > 1e-20, corr / np.maximum(denom, 1e-300), 0.0)
    r = np.clip(r, -1.0, 1.0)

    peak = r.max(axis=1)
    # shortest-lag local maximum within 10% of the global peak; avoids
    # octave-down errors at lag multiples of the true period
    padded = np.pad(r, ((0, 0), (1, 1)), constant_values=-np.inf)
    local_max = (r >= padded[:, :-2]) & (r >= padded[:, 2:])
    near_peak = local_max & (
        r >= np.maximum(0.9 * peak[:, None], VOICING_THRESHOLD)
    )
    has_candidate = near_peak.any(axis=1)
    best = np.where(has_candidate, near_peak.argmax(axis=1), r.argmax(axis=1))
    voicing = np.maximum(peak, 0.0)
    f0 = np.where(
        peak >= VOICING_THRESHOLD, sample_rate / lags[best].astype(float), 0.0
    )
    return f0, voicing


def extract_lld(x: Waveform, config: FrameConfig = FrameConfig()) -> FeatureSequence:
    """Extract the 18-descriptor frame sequence from a waveform."""
    if len(x) < config.frame_length:
        raise TooShort(
            f"need >= {config.frame_length} samples, got {len(x)}"
        )
    frames = frame_signal(x.samples, config)
    count = frames.shape[0]
    window = config.window_values()
    mag = np.abs(np.fft.rfft(frames * window, axis=1))
    power = mag**2
    freqs = np.fft.rfftfreq(config.frame_length, d=1.0 / x.sample_rate)

    out = np.zeros((count, NUM_DESCRIPTORS))

    rms = np.sqrt((frames**2).mean(axis=1))
    out[:, 0] = np.log(np.maximum(rms, ENERGY_FLOOR))

    products = frames[:, :-1] * frames[:, 1:]
    out[:, 1] = (products < 0).mean(axis=1)

    mag_sum = mag.sum(axis=1)
    safe = mag_sum > 1e-20
    out[safe, 2] = (mag[safe] * freqs).sum(axis=1) / mag_sum[safe]

    diff = np.diff(mag, axis=0)
    out[1:, 3] = np.sqrt((diff**2).sum(axis=1))

    power_sum = power.sum(axis=1)
    cum = np.cumsum(power, axis=1)
    psafe = power_sum > 1e-20
    if psafe.any():
        target = ROLLOFF_FRACTION * power_sum[psafe, None]
        idx = (cum[psafe] >= target).argmax(axis=1)
        out[psafe, 4] = freqs[idx]

    fc = freqs - freqs.mean()
    out[:, 5] = (mag * fc).sum(axis=1) / (fc**2).sum()

    f0, voicing = _autocorr_pitch(frames, x.sample_rate)
    out[:, 6] = f0
    out[:, 7] = voicing
    r = np.clip(voicing, 1e-6, 1.0 - 1e-6)
    out[:, 8] = 10.0 * np.log10(r / (1.0 - r))

    bank = mel_filterbank(NUM_MEL_BANDS, config.num_bins, x.sample_rate)
    mel_energy = np.log(np.maximum(power @ bank.T, ENERGY_FLOOR))
    cepstra = dct(mel_energy, type=2, norm="ortho", axis=1)
    out[:, 9 : 9 + NUM_MFCC] = cepstra[:, 1 : NUM_MFCC + 1]

    return FeatureSequence(out, DESCRIPTOR_NAMES, config)


def functionals(seq: FeatureSequence) -> FeatureVector:
    """Per-descriptor mean, std, 20th and 80th percentile (linear interpolation)."""
    frames = seq.frames
    stats = np.concatenate(
        [
            frames.mean(axis=0),
            frames.std(axis=0),
            np.percentile(frames, 20, axis=0),
            np.percentile(frames, 80, axis=0),
        ]
    )
    names = tuple(
        f"{desc}_{func}"
        for func in FUNCTIONAL_NAMES
        for desc in seq.descriptor_names
    )
    return FeatureVector(stats, names)


def fit_standardization(train) -> StandardizationStats:
    """Global per-descriptor mean/std over all frames of all training sequences."""
    sequences = list(train)
    if not sequences:
        raise EmptyTrainingSet("no training sequences")
    stacked = np.concatenate([seq.frames for seq in sequences], axis=0)
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std = np.where(std < 1e-8, 1.0, std)
    return StandardizationStats(mean, std)


def apply_standardization(
    seq: FeatureSequence, stats: StandardizationStats
) -> FeatureSequence:
    """Per-descriptor (v - mean) / std."""
    frames = (seq.frames - stats.mean) / stats.std
    return FeatureSequence(frames, seq.descriptor_names, seq.frame_config)
