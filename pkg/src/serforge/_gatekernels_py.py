"""Pure-numpy LSTM gate kernels, the fallback for the compiled extension.

Gate column layout in every (B, 4H) array: [input, forget, cell, output].
"""

import numpy as np


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def lstm_gates_forward(preact, c_prev):
    """One cell step for a batch.

    Args:
        preact: (B, 4H) pre-activation gate values.
        c_prev: (B, H) previous cell state.

    Returns:
        gates: (B, 4H) activated gate values.
        c: (B, H) new cell state.
        h: (B, H) new hidden state.
    """
    hidden = c_prev.shape[1]
    gates = np.empty_like(preact)
    gates[:, : 2 * hidden] = _sigmoid(preact[:, : 2 * hidden])
    gates[:, 2 * hidden : 3 * hidden] = np.tanh(preact[:, 2 * hidden : 3 * hidden])
    gates[:, 3 * hidden :] = _sigmoid(preact[:, 3 * hidden :])
    i = gates[:, :hidden]
    f = gates[:, hidden : 2 * hidden]
    g = gates[:, 2 * hidden : 3 * hidden]
    o = gates[:, 3 * hidden :]
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return gates, c, h


def lstm_sequence_forward(xw, wh):
    """Full-sequence LSTM layer forward.

    Args:
        xw: (B, T, 4H) input pre-activations (x @ Wx + b).
        wh: (H, 4H) recurrent weights.

    Returns:
        h_seq (B, T, H), c_seq (B, T, H), gates_seq (B, T, 4H).
    """
    batch, steps, _ = xw.shape
    hidden = wh.shape[0]
    h_seq = np.empty((batch, steps, hidden))
    c_seq = np.empty((batch, steps, hidden))
    gates_seq = np.empty((batch, steps, 4 * hidden))
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    for t in range(steps):
        preact = xw[:, t] + h @ wh
        gates, c, h = lstm_gates_forward(preact, c)
        gates_seq[:, t] = gates
        c_seq[:, t] = c
        h_seq[:, t] = h
    return h_seq, c_seq, gates_seq


def lstm_sequence_backward(wh, gates_seq, c_seq, h_seq, dh_seq):
    """Full-sequence backpropagation through time for one layer.

    Returns:
        dpre_seq (B, T, 4H) pre-activation gradients and d_wh (H, 4H),
        the recurrent weight gradient summed over batch and time.
    """
    batch, steps, hidden = c_seq.shape
    wh_t = wh.T
    dpre_seq = np.empty((batch, steps, 4 * hidden))
    d_wh = np.zeros_like(wh)
    zeros = np.zeros((batch, hidden))
    dh_rec = np.zeros((batch, hidden))
    dc = np.zeros((batch, hidden))
    for t in range(steps - 1, -1, -1):
        dh_total = dh_seq[:, t] + dh_rec
        c_prev = c_seq[:, t - 1] if t > 0 else zeros
        dpre, dc = lstm_gates_backward(
            dh_total, dc, gates_seq[:, t], c_seq[:, t], c_prev
        )
        dpre_seq[:, t] = dpre
        dh_rec = dpre @ wh_t
        if t > 0:
            d_wh += h_seq[:, t - 1].T @ dpre
    return dpre_seq, d_wh


def lstm_gates_backward(dh, dc_next, gates, c, c_prev):
    """Backward through one cell step.

    Args:
        dh: (B, H) gradient w.r.t. the new hidden state.
        dc_next: (B, H) gradient flowing into the new cell state.
        gates: (B, 4H) activated gates from the forward pass.
        c: (B, H) cell state produced by the forward pass.
        c_prev: (B, H) cell state entering the step.

    Returns:
        dpre: (B, 4H) gradient w.r.t. the pre-activation gates.
        dc_prev: (B, H) gradient w.r.t. the previous cell state.
    """
    hidden = c.shape[1]
    i = gates[:, :hidden]
    f = gates[:, hidden : 2 * hidden]
    g = gates[:, 2 * hidden : 3 * hidden]
    o = gates[:, 3 * hidden :]
    tc = np.tanh(c)
    dc = dc_next + dh * o * (1.0 - tc**2)
    dpre = np.empty_like(gates)
    dpre[:, :hidden] = dc * g * i * (1.0 - i)
    dpre[:, hidden : 2 * hidden] = dc * c_prev * f * (1.0 - f)
    dpre[:, 2 * hidden : 3 * hidden] = dc * i * (1.0 - g**2)
    dpre[:, 3 * hidden :] = dh * tc * o * (1.0 - o)
    dc_prev = dc * f
    return dpre, dc_prev
