"""Exception hierarchy shared across the toolkit."""


class SerforgeError(Exception):
    """Base class for all toolkit errors."""


class UnsupportedFormat(SerforgeError):
    """WAV file uses a codec or bit depth we do not read."""


class CorruptHeader(SerforgeError):
    """File is not a parsable RIFF/WAVE container."""


class EmptyAudio(SerforgeError):
    """WAV file contains zero samples."""


class IoFailure(SerforgeError):
    """Read or write to the filesystem failed."""


class TooShort(SerforgeError):
    """Waveform shorter than the operation's minimum length."""


class SampleRateMismatch(SerforgeError):
    """Two waveforms that must share a sample rate do not."""


class LengthMismatch(SerforgeError):
    """Two waveforms that must share a length do not."""


class EmptySegment(SerforgeError):
    """Noise segment has no samples."""


class DimensionMismatch(SerforgeError):
    """Feature dimension does not match model parameters."""


class EmptyDataset(SerforgeError):
    """Dataset passed to evaluation is empty."""


class EmptyTrainingSet(SerforgeError):
    """Training set passed to a fit operation is empty."""


class SingleClassTrainingSet(SerforgeError):
    """Classifier training requires both classes present."""


class ShapeMismatch(SerforgeError):
    """Paired sequences have incompatible shapes."""


class EmptySet(SerforgeError):
    """Operation requires a nonempty collection."""


class UnknownLabel(SerforgeError):
    """Raw emotion category not covered by the binary mapping."""


class TooFewSpeakers(SerforgeError):
    """Speaker-independent split needs at least three speakers."""


class InsufficientAdversarialPool(SerforgeError):
    """Adversarial pool too small for the requested mix fraction."""


class ConfigError(SerforgeError):
    """Invalid experiment configuration (CLI exit code 2)."""


class DataError(SerforgeError):
    """Invalid or missing input data (CLI exit code 3)."""
