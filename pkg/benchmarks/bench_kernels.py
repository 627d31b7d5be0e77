"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported side by side (the env flag only picks the default
dispatch), so one run compares them directly.
"""
import argparse
import time

import numpy as np

from cartan import _kernels
from cartan.hardy import exponents_up_to


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(rng):
    x = rng.standard_normal((200_000, 4)) + 1j * rng.standard_normal((200_000, 4))
    z = (rng.standard_normal((8192, 4)) + 1j * rng.standard_normal((8192, 4))) / 2
    alpha = exponents_up_to(4, 5)
    a = rng.standard_normal((400, 400)) + 1j * rng.standard_normal((400, 400))
    gram = a @ a.conj().T
    return [
        ("esym_batch (200000 x 4)", "esym_batch", (x,)),
        (f"eval_monomials (8192 pts, {len(alpha)} monomials)", "eval_monomials", (z, alpha)),
        ("graded_cholesky (400 x 400)", "graded_cholesky", (gram, 1e-10, 1e-8)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _kernels.numba_impl is None:
        raise SystemExit("numba is not installed; nothing to compare")
    _kernels.warmup()
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':45s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for label, name, inputs in cases(rng):
        getattr(_kernels.numba_impl, name)(*inputs)  # compile for these dtypes
        t_np, out_np = best_of(lambda: getattr(_kernels.numpy_impl, name)(*inputs), args.repeat)
        t_nb, out_nb = best_of(lambda: getattr(_kernels.numba_impl, name)(*inputs), args.repeat)
        first_np = out_np[0] if isinstance(out_np, tuple) else out_np
        first_nb = out_nb[0] if isinstance(out_nb, tuple) else out_nb
        diff = float(np.max(np.abs(first_np - first_nb)))
        print(f"{label:45s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
