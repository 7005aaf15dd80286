"""Batched LSTM sequence forward/backward shared by classifier and GAN.

Parameters are plain dicts: Wx (D, 4H), Wh (H, 4H), b (4H,), gate column
layout [input, forget, cell, output]. The per-step matmuls go through
BLAS; the elementwise gate math goes through the selected kernel backend.
"""

import numpy as np

from . import kernels


def init_lstm(rng: np.random.Generator, input_dim: int, hidden: int) -> dict:
    """Uniform +-1/sqrt(fan_in) init with forget-gate bias 1.0."""
    wx_bound = 1.0 / np.sqrt(input_dim)
    wh_bound = 1.0 / np.sqrt(hidden)
    params = {
        "Wx": rng.uniform(-wx_bound, wx_bound, (input_dim, 4 * hidden)),
        "Wh": rng.uniform(-wh_bound, wh_bound, (hidden, 4 * hidden)),
        "b": np.zeros(4 * hidden),
    }
    params["b"][hidden : 2 * hidden] = 1.0
    return params


def lstm_forward(params: dict, x: np.ndarray):
    """Run a batch of equal-length sequences through one LSTM layer.

    Args:
        params: layer parameter dict.
        x: (B, T, D) input sequences.

    Returns:
        h_seq: (B, T, H) hidden states.
        cache: tensors needed by lstm_backward.
    """
    xw = np.ascontiguousarray(x @ params["Wx"] + params["b"])
    h_seq, c_seq, gates_seq = kernels.lstm_sequence_forward(
        xw, np.ascontiguousarray(params["Wh"])
    )
    cache = {"x": x, "h_seq": h_seq, "c_seq": c_seq, "gates_seq": gates_seq}
    return h_seq, cache


def lstm_backward(params: dict, cache: dict, dh_seq: np.ndarray):
    """Backpropagation through time for one layer.

    Args:
        params: layer parameter dict.
        cache: from lstm_forward.
        dh_seq: (B, T, H) gradient w.r.t. every hidden state (zeros where
            the loss does not touch a step).

    Returns:
        grads: dict with dWx, dWh, db (summed over the batch).
        dx: (B, T, D) gradient w.r.t. the inputs.
    """
    x = cache["x"]
    batch, steps, _ = x.shape
    dpre_seq, d_wh = kernels.lstm_sequence_backward(
        np.ascontiguousarray(params["Wh"]),
        cache["gates_seq"],
        cache["c_seq"],
        cache["h_seq"],
        np.ascontiguousarray(dh_seq),
    )
    flat_x = x.reshape(batch * steps, -1)
    flat_dpre = dpre_seq.reshape(batch * steps, -1)
    grads = {
        "Wx": flat_x.T @ flat_dpre,
        "Wh": d_wh,
        "b": flat_dpre.sum(axis=0),
    }
    dx = (flat_dpre @ params["Wx"].T).reshape(x.shape)
    return grads, dx
