"""Compare the compiled and pure-numpy LSTM kernel backends.

Times the full-sequence layer forward/backward on classifier- and
GAN-shaped workloads, plus one end-to-end training step. Run with:

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from serforge import _gatekernels_py as python_backend
from serforge import kernels
from serforge.lstm import init_lstm

WORKLOADS = (
    ("classifier layer (B=32, T=122, D=18, H=64)", 32, 122, 18, 64),
    ("gan encoder (B=32, T=122, D=18, H=64)", 32, 122, 18, 64),
    ("gan decoder (B=32, T=122, D=32, H=64)", 32, 122, 32, 64),
    ("small batch (B=4, T=60, D=18, H=64)", 4, 60, 18, 64),
)


def _backends():
    backends = [("python", python_backend)]
    if kernels.BACKEND == "cython":
        backends.append(("cython", kernels))
    else:
        print("compiled extension unavailable; timing the fallback only")
    return backends


def time_sequence_ops(repeats: int) -> None:
    rng = np.random.default_rng(0)
    for name, batch, steps, dim, hidden in WORKLOADS:
        params = init_lstm(rng, dim, hidden)
        x = rng.normal(size=(batch, steps, dim))
        xw = np.ascontiguousarray(x @ params["Wx"] + params["b"])
        wh = np.ascontiguousarray(params["Wh"])
        dh = np.ascontiguousarray(rng.normal(size=(batch, steps, hidden)))
        print(f"\n{name}")
        results = {}
        for backend_name, impl in _backends():
            h_seq, c_seq, gates_seq = impl.lstm_sequence_forward(xw, wh)
            impl.lstm_sequence_backward(wh, gates_seq, c_seq, h_seq, dh)
            t0 = time.perf_counter()
            for _ in range(repeats):
                h_seq, c_seq, gates_seq = impl.lstm_sequence_forward(xw, wh)
            fwd = (time.perf_counter() - t0) / repeats
            t0 = time.perf_counter()
            for _ in range(repeats):
                impl.lstm_sequence_backward(wh, gates_seq, c_seq, h_seq, dh)
            bwd = (time.perf_counter() - t0) / repeats
            results[backend_name] = (fwd, bwd)
            print(
                f"  {backend_name:>7}: forward {fwd * 1e3:8.2f} ms   "
                f"backward {bwd * 1e3:8.2f} ms"
            )
        if len(results) == 2:
            pf, pb = results["python"]
            cf, cb = results["cython"]
            print(
                f"  speedup: forward {pf / cf:5.2f}x   backward {pb / cb:5.2f}x"
            )


def time_training_step(repeats: int) -> None:
    from serforge.classifier import TrainConfig, init_model, loss_and_gradients

    rng = np.random.default_rng(1)
    params = init_model(rng, 18, (64, 64))
    batch = [(rng.normal(size=(122, 18)), i % 2) for i in range(32)]
    print(f"\nclassifier loss+gradients, batch of 32 (backend: {kernels.BACKEND})")
    loss_and_gradients(params, batch)
    t0 = time.perf_counter()
    for _ in range(repeats):
        loss_and_gradients(params, batch)
    step = (time.perf_counter() - t0) / repeats
    print(f"  {step * 1e3:8.2f} ms per step")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=10)
    args = parser.parse_args()
    print(f"selected backend: {kernels.BACKEND}")
    time_sequence_ops(args.repeats)
    time_training_step(args.repeats)


if __name__ == "__main__":
    main()
