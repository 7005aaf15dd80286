"""Backend selection for the LSTM gate kernels.

Prefers the compiled extension; falls back to the pure-numpy kernels when
the extension is absent or SERFORGE_PURE_PYTHON is set. Both backends
implement identical math.
"""

import os

if os.environ.get("SERFORGE_PURE_PYTHON"):
    from . import _gatekernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _gatekernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _gatekernels_py as _impl

        BACKEND = "python"

lstm_gates_forward = _impl.lstm_gates_forward
lstm_gates_backward = _impl.lstm_gates_backward
lstm_sequence_forward = _impl.lstm_sequence_forward
lstm_sequence_backward = _impl.lstm_sequence_backward
