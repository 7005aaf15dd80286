"""Audio ingestion, framing and spectral transforms.

Everything downstream (noise estimation, attack crafting, feature
extraction) goes through the types in this module. All operations are pure
functions; nothing here keeps mutable state.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CorruptHeader,
    EmptyAudio,
    IoFailure,
    TooShort,
    UnsupportedFormat,
)

WINDOWS = ("hann", "hamming", "rectangular")


@dataclass(frozen=True)
class Waveform:
    """Mono audio: float64 samples plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size < 1:
            raise ValueError("waveform must be a nonempty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform contains non-finite samples")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class FrameConfig:
    """Analysis framing: frame/hop in samples plus the window shape."""

    frame_length: int = 512
    hop_length: int = 256
    window: str = "hann"

    def __post_init__(self):
        n = self.frame_length
        if n < 2 or (n & (n - 1)) != 0:
            raise ValueError("frame_length must be a power of two >= 2")
        if not (0 < self.hop_length <= n):
            raise ValueError("hop_length must be in (0, frame_length]")
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {WINDOWS}")

    def window_values(self) -> np.ndarray:
        """Periodic window of length frame_length."""
        n = self.frame_length
        t = np.arange(n)
        if self.window == "hann":
            return 0.5 * (1.0 - np.cos(2.0 * np.pi * t / n))
        if self.window == "hamming":
            return 0.54 - 0.46 * np.cos(2.0 * np.pi * t / n)
        return np.ones(n)

    @property
    def num_bins(self) -> int:
        return self.frame_length // 2 + 1


@dataclass(frozen=True)
class Spectrogram:
    """Complex STFT bins, one row per frame."""

    bins: np.ndarray
    frame_config: FrameConfig = field(default_factory=FrameConfig)
    sample_rate: int = 16000

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.complex128)
        object.__setattr__(self, "bins", bins)
        if bins.ndim != 2 or bins.shape[0] < 1:
            raise ValueError("bins must be a 2-D array with >= 1 frame")
        if bins.shape[1] != self.frame_config.num_bins:
            raise ValueError("bin count must equal frame_length/2 + 1")

    @property
    def num_frames(self) -> int:
        return self.bins.shape[0]


def num_frames(num_samples: int, config: FrameConfig) -> int:
    """Frame count covering num_samples, trailing partial frame included."""
    if num_samples < config.frame_length:
        return 1 if num_samples > 0 else 0
    extra = num_samples - config.frame_length
    return 1 + int(np.ceil(extra / config.hop_length))


def frame_signal(samples: np.ndarray, config: FrameConfig) -> np.ndarray:
    """Slice samples into (num_frames, frame_length); trailing frame zero-padded."""
    n = samples.size
    count = num_frames(n, config)
    frames = np.zeros((count, config.frame_length))
    for t in range(count):
        start = t * config.hop_length
        stop = min(start + config.frame_length, n)
        frames[t, : stop - start] = samples[start:stop]
    return frames


def load_wav(path) -> Waveform:
    """Read a RIFF/WAVE file (PCM16 or float32, mono or stereo downmixed).

    16-bit samples are scaled by 1/32768; stereo is downmixed by channel
    mean. No clipping is applied on load.
    """
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise CorruptHeader(f"{path} is not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack("<I", data[pos + 4 : pos + 8])
        body = data[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise CorruptHeader("fmt chunk truncated")
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif chunk_id == b"data":
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)

    if fmt is None or payload is None:
        raise CorruptHeader("missing fmt or data chunk")

    audio_format, channels, sample_rate, _, _, bits = fmt
    if channels < 1:
        raise CorruptHeader("zero channels")
    if audio_format == 1 and bits == 16:
        raw = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    elif audio_format == 3 and bits == 32:
        raw = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedFormat(
            f"format tag {audio_format} with {bits}-bit samples is not supported"
        )

    if raw.size == 0:
        raise EmptyAudio(f"{path} holds no samples")
    if channels > 1:
        usable = (raw.size // channels) * channels
        raw = raw[:usable].reshape(-1, channels).mean(axis=1)
        if raw.size == 0:
            raise EmptyAudio(f"{path} holds no complete frames")
    return Waveform(raw, sample_rate)


def save_wav(waveform: Waveform, path) -> None:
    """Write mono PCM16: clip to [-1, 1], then quantize round-to-nearest."""
    clipped = np.clip(waveform.samples, -1.0, 1.0)
    quantized = np.clip(np.rint(clipped * 32768.0), -32768, 32767).astype("<i2")
    payload = quantized.tobytes()
    header = b"RIFF"
    header += struct.pack("<I", 36 + len(payload))
    header += b"WAVEfmt "
    header += struct.pack(
        "<IHHIIHH", 16, 1, 1, waveform.sample_rate, waveform.sample_rate * 2, 2, 16
    )
    header += b"data" + struct.pack("<I", len(payload))
    try:
        with open(path, "wb") as fh:
            fh.write(header + payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def stft(waveform: Waveform, config: FrameConfig = FrameConfig()) -> Spectrogram:
    """Windowed short-time transform; frame t covers [t*hop, t*hop + frame_length)."""
    if len(waveform) < config.frame_length:
        raise TooShort(
            f"need >= {config.frame_length} samples, got {len(waveform)}"
        )
    frames = frame_signal(waveform.samples, config)
    bins = np.fft.rfft(frames * config.window_values(), axis=1)
    return Spectrogram(bins, config, waveform.sample_rate)


def istft(spec: Spectrogram) -> Waveform:
    """Overlap-add synthesis with window-sum normalization.

    Output length is (num_frames - 1) * hop + frame_length. Where the
    overlapped window sum vanishes (window edges) samples are zero.
    """
    config = spec.frame_config
    frames = np.fft.irfft(spec.bins, n=config.frame_length, axis=1)
    window = config.window_values()
    out_len = (spec.num_frames - 1) * config.hop_length + config.frame_length
    out = np.zeros(out_len)
    wsum = np.zeros(out_len)
    for t in range(spec.num_frames):
        start = t * config.hop_length
        out[start : start + config.frame_length] += frames[t]
        wsum[start : start + config.frame_length] += window
    nonzero = wsum > 1e-12
    out[nonzero] /= wsum[nonzero]
    out[~nonzero] = 0.0
    return Waveform(out, spec.sample_rate)
