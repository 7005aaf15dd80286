"""serforge: black-box adversarial noise attacks and defenses for
binary-valence speech emotion recognition."""

__version__ = "0.1.0"

from .kernels import BACKEND as KERNEL_BACKEND  # noqa: F401
