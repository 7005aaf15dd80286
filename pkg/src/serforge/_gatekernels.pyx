# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled LSTM gate kernels.

Same contract as _gatekernels_py; gate column layout [input, forget, cell,
output]. The per-step elementwise gate math is the hot inner loop of both
classifier and GAN training.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()


cdef inline double sigmoid(double x) noexcept nogil:
    return 1.0 / (1.0 + exp(-x))


def lstm_gates_forward(double[:, ::1] preact, double[:, ::1] c_prev):
    cdef Py_ssize_t batch = preact.shape[0]
    cdef Py_ssize_t hidden = c_prev.shape[1]
    gates_arr = np.empty((batch, 4 * hidden))
    c_arr = np.empty((batch, hidden))
    h_arr = np.empty((batch, hidden))
    cdef double[:, ::1] gates = gates_arr
    cdef double[:, ::1] c = c_arr
    cdef double[:, ::1] h = h_arr
    cdef Py_ssize_t b, j
    cdef double i_g, f_g, g_g, o_g, c_new
    with nogil:
        for b in range(batch):
            for j in range(hidden):
                i_g = sigmoid(preact[b, j])
                f_g = sigmoid(preact[b, hidden + j])
                g_g = tanh(preact[b, 2 * hidden + j])
                o_g = sigmoid(preact[b, 3 * hidden + j])
                c_new = f_g * c_prev[b, j] + i_g * g_g
                gates[b, j] = i_g
                gates[b, hidden + j] = f_g
                gates[b, 2 * hidden + j] = g_g
                gates[b, 3 * hidden + j] = o_g
                c[b, j] = c_new
                h[b, j] = o_g * tanh(c_new)
    return gates_arr, c_arr, h_arr


def lstm_gates_backward(double[:, ::1] dh, double[:, ::1] dc_next,
                        double[:, ::1] gates, double[:, ::1] c,
                        double[:, ::1] c_prev):
    cdef Py_ssize_t batch = c.shape[0]
    cdef Py_ssize_t hidden = c.shape[1]
    dpre_arr = np.empty((batch, 4 * hidden))
    dc_prev_arr = np.empty((batch, hidden))
    cdef double[:, ::1] dpre = dpre_arr
    cdef double[:, ::1] dc_prev = dc_prev_arr
    cdef Py_ssize_t b, j
    cdef double i_g, f_g, g_g, o_g, tc, dc
    with nogil:
        for b in range(batch):
            for j in range(hidden):
                i_g = gates[b, j]
                f_g = gates[b, hidden + j]
                g_g = gates[b, 2 * hidden + j]
                o_g = gates[b, 3 * hidden + j]
                tc = tanh(c[b, j])
                dc = dc_next[b, j] + dh[b, j] * o_g * (1.0 - tc * tc)
                dpre[b, j] = dc * g_g * i_g * (1.0 - i_g)
                dpre[b, hidden + j] = dc * c_prev[b, j] * f_g * (1.0 - f_g)
                dpre[b, 2 * hidden + j] = dc * i_g * (1.0 - g_g * g_g)
                dpre[b, 3 * hidden + j] = dh[b, j] * tc * o_g * (1.0 - o_g)
                dc_prev[b, j] = dc * f_g
    return dpre_arr, dc_prev_arr


def lstm_sequence_forward(double[:, :, ::1] xw, double[:, ::1] wh):
    """Full-sequence LSTM layer forward.

    Args:
        xw: (B, T, 4H) input pre-activations (x @ Wx + b).
        wh: (H, 4H) recurrent weights.

    Returns:
        h_seq (B, T, H), c_seq (B, T, H), gates_seq (B, T, 4H).
    """
    cdef Py_ssize_t batch = xw.shape[0]
    cdef Py_ssize_t steps = xw.shape[1]
    cdef Py_ssize_t hidden = wh.shape[0]
    h_arr = np.empty((batch, steps, hidden))
    c_arr = np.empty((batch, steps, hidden))
    gates_arr = np.empty((batch, steps, 4 * hidden))
    pre_arr = np.empty((batch, 4 * hidden))
    hbuf_arr = np.zeros((batch, hidden))
    cbuf_arr = np.zeros((batch, hidden))
    cdef double[:, :, ::1] h_seq = h_arr
    cdef double[:, :, ::1] c_seq = c_arr
    cdef double[:, :, ::1] gates_seq = gates_arr
    cdef double[:, ::1] pre = pre_arr
    cdef double[:, ::1] hbuf = hbuf_arr
    cdef double[:, ::1] cbuf = cbuf_arr
    cdef int m = <int>(4 * hidden), n = <int>batch, k = <int>hidden
    cdef int lda = m, ldb = k, ldc = m
    cdef double one = 1.0
    cdef char trans = b'N'
    cdef Py_ssize_t t, b, j
    cdef double i_g, f_g, g_g, o_g, c_new
    with nogil:
        for t in range(steps):
            for b in range(batch):
                memcpy(&pre[b, 0], &xw[b, t, 0], 4 * hidden * sizeof(double))
            # row-major pre += hbuf @ wh, expressed column-major as
            # pre^T(4H,B) += wh^T(4H,H) x hbuf^T(H,B)
            dgemm(&trans, &trans, &m, &n, &k, &one, &wh[0, 0], &lda,
                  &hbuf[0, 0], &ldb, &one, &pre[0, 0], &ldc)
            # simple unit-stride loops with one libm call each so the
            # compiler can use the vectorized math library
            for b in range(batch):
                for j in range(2 * hidden):  # input and forget gates
                    pre[b, j] = 1.0 / (1.0 + exp(-pre[b, j]))
                for j in range(hidden):  # cell candidate
                    pre[b, 2 * hidden + j] = tanh(pre[b, 2 * hidden + j])
                for j in range(hidden):  # output gate
                    pre[b, 3 * hidden + j] = 1.0 / (
                        1.0 + exp(-pre[b, 3 * hidden + j])
                    )
                for j in range(hidden):
                    cbuf[b, j] = (
                        pre[b, hidden + j] * cbuf[b, j]
                        + pre[b, j] * pre[b, 2 * hidden + j]
                    )
                    c_seq[b, t, j] = cbuf[b, j]
                for j in range(hidden):
                    hbuf[b, j] = tanh(cbuf[b, j])
                for j in range(hidden):
                    hbuf[b, j] = pre[b, 3 * hidden + j] * hbuf[b, j]
                    h_seq[b, t, j] = hbuf[b, j]
                memcpy(&gates_seq[b, t, 0], &pre[b, 0],
                       4 * hidden * sizeof(double))
    return h_arr, c_arr, gates_arr


def lstm_sequence_backward(double[:, ::1] wh, double[:, :, ::1] gates_seq,
                           double[:, :, ::1] c_seq, double[:, :, ::1] h_seq,
                           double[:, :, ::1] dh_seq):
    """Full-sequence backpropagation through time for one layer.

    Returns:
        dpre_seq (B, T, 4H) pre-activation gradients and d_wh (H, 4H),
        the recurrent weight gradient summed over batch and time.
    """
    cdef Py_ssize_t batch = c_seq.shape[0]
    cdef Py_ssize_t steps = c_seq.shape[1]
    cdef Py_ssize_t hidden = c_seq.shape[2]
    dpre_seq_arr = np.empty((batch, steps, 4 * hidden))
    d_wh_arr = np.zeros((hidden, 4 * hidden))
    dpre_arr = np.empty((batch, 4 * hidden))
    dh_rec_arr = np.zeros((batch, hidden))
    dc_arr = np.zeros((batch, hidden))
    hprev_arr = np.empty((batch, hidden))
    cdef double[:, :, ::1] dpre_seq = dpre_seq_arr
    cdef double[:, ::1] d_wh = d_wh_arr
    cdef double[:, ::1] dpre = dpre_arr
    cdef double[:, ::1] dh_rec = dh_rec_arr
    cdef double[:, ::1] dc = dc_arr
    cdef double[:, ::1] hprev = hprev_arr
    cdef int four_h = <int>(4 * hidden), nb = <int>batch, nh = <int>hidden
    cdef double one = 1.0, zero = 0.0
    cdef char no_trans = b'N', do_trans = b'T'
    cdef Py_ssize_t t, b, j
    cdef double i_g, f_g, g_g, o_g, tc, dci, dh_tot, c_prev
    tcbuf_arr = np.empty((batch, hidden))
    cdef double[:, ::1] tcbuf = tcbuf_arr
    with nogil:
        for t in range(steps - 1, -1, -1):
            for b in range(batch):
                for j in range(hidden):  # vectorizable tanh pass
                    tcbuf[b, j] = tanh(c_seq[b, t, j])
                for j in range(hidden):
                    dh_tot = dh_seq[b, t, j] + dh_rec[b, j]
                    i_g = gates_seq[b, t, j]
                    f_g = gates_seq[b, t, hidden + j]
                    g_g = gates_seq[b, t, 2 * hidden + j]
                    o_g = gates_seq[b, t, 3 * hidden + j]
                    tc = tcbuf[b, j]
                    c_prev = c_seq[b, t - 1, j] if t > 0 else 0.0
                    dci = dc[b, j] + dh_tot * o_g * (1.0 - tc * tc)
                    dpre[b, j] = dci * g_g * i_g * (1.0 - i_g)
                    dpre[b, hidden + j] = dci * c_prev * f_g * (1.0 - f_g)
                    dpre[b, 2 * hidden + j] = dci * i_g * (1.0 - g_g * g_g)
                    dpre[b, 3 * hidden + j] = dh_tot * tc * o_g * (1.0 - o_g)
                    dc[b, j] = dci * f_g
                memcpy(&dpre_seq[b, t, 0], &dpre[b, 0],
                       4 * hidden * sizeof(double))
            # row-major dh_rec = dpre @ wh^T, column-major
            # dh_rec^T(H,B) = (wh^T)^T(H,4H) x dpre^T(4H,B)
            dgemm(&do_trans, &no_trans, &nh, &nb, &four_h, &one, &wh[0, 0],
                  &four_h, &dpre[0, 0], &four_h, &zero, &dh_rec[0, 0], &nh)
            if t > 0:
                for b in range(batch):
                    memcpy(&hprev[b, 0], &h_seq[b, t - 1, 0],
                           hidden * sizeof(double))
                # row-major d_wh += hprev^T @ dpre, column-major
                # d_wh^T(4H,H) += dpre^T(4H,B) x (hprev^T)^T(B,H)
                dgemm(&no_trans, &do_trans, &four_h, &nh, &nb, &one,
                      &dpre[0, 0], &four_h, &hprev[0, 0], &nh, &one,
                      &d_wh[0, 0], &four_h)
    return dpre_seq_arr, d_wh_arr
