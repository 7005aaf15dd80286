"""Background-noise estimation.

Produces the reference statistics (time-domain mean/variance plus a
spectral floor) that adversarial perturbations are matched against. The
floor is a percentile-based minimum-statistics estimate; noise-only frames
are found by gating broadband frame power against that floor.
"""

from dataclasses import dataclass, field

import numpy as np

from .audio import FrameConfig, Waveform, frame_signal
from .errors import TooShort

# Fixed estimator constants, exposed for reproducibility.
FLOOR_PERCENTILE = 10.0
GATE_THRESHOLD_DB = 3.0
SMOOTHING_BINS = 3


@dataclass(frozen=True)
class NoiseProfile:
    """Estimated background-noise statistics of one utterance."""

    time_mean: float
    time_variance: float
    spectral_floor: np.ndarray
    frame_config: FrameConfig = field(default_factory=FrameConfig)

    def __post_init__(self):
        floor = np.asarray(self.spectral_floor, dtype=np.float64)
        object.__setattr__(self, "spectral_floor", floor)
        if self.time_variance < 0:
            raise ValueError("time_variance must be >= 0")
        if floor.shape != (self.frame_config.num_bins,):
            raise ValueError("spectral_floor length must equal frame_length/2 + 1")
        if not np.all(np.isfinite(floor)) or np.any(floor < 0):
            raise ValueError("spectral_floor entries must be finite and >= 0")


def estimate_noise_profile(
    x: Waveform, config: FrameConfig = FrameConfig()
) -> NoiseProfile:
    """Estimate the pre-existing background noise of an utterance.

    Per-bin floor: 10th percentile of per-frame power, smoothed by a 3-bin
    moving average. Frames whose broadband power sits within 3 dB of the
    broadband floor are classified noise-only; their samples supply the
    time-domain mean/variance. If no frame qualifies, the single
    lowest-power frame is used instead.
    """
    if len(x) < 2 * config.frame_length:
        raise TooShort(
            f"need >= {2 * config.frame_length} samples, got {len(x)}"
        )
    frames = frame_signal(x.samples, config)
    window = config.window_values()
    power = np.abs(np.fft.rfft(frames * window, axis=1)) ** 2

    floor = np.percentile(power, FLOOR_PERCENTILE, axis=0)
    kernel = np.ones(SMOOTHING_BINS) / SMOOTHING_BINS
    padded = np.pad(floor, SMOOTHING_BINS // 2, mode="edge")
    floor = np.convolve(padded, kernel, mode="valid")

    broadband = power.sum(axis=1)
    gate = floor.sum() * 10.0 ** (GATE_THRESHOLD_DB / 10.0)
    noise_frames = np.flatnonzero(broadband <= gate)
    if noise_frames.size == 0:
        noise_frames = np.array([int(np.argmin(broadband))])

    noise_samples = frames[noise_frames].ravel()
    time_mean = float(noise_samples.mean())
    time_variance = float(noise_samples.var())
    return NoiseProfile(time_mean, time_variance, floor, config)
