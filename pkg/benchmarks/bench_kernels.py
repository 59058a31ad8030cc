"""Compare the numba and numpy transfer-matrix kernels.

    python benchmarks/bench_kernels.py [--batch 4096] [--elements 3] [--repeat 20]

Prints the median wall time per call for each backend and checks that both
agree to 1e-9 relative.  The shooting solve loses digits in proportion to
the mirror reflectance, so the inputs mimic real cavities.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cavitycool import kernels


def _inputs(batch, n, seed=0):
    # high-reflectance mirrors at both ends, weak lossy scatterers in between
    rng = np.random.default_rng(seed)
    zeta = rng.normal(scale=1e-3, size=(batch, n)) + 1j * rng.uniform(0, 1e-4, size=(batch, n))
    zeta[:, 0] = zeta[:, -1] = -133.5
    phase = rng.uniform(0, 2 * np.pi, size=(batch, n - 1))
    src = rng.normal(size=(batch, n, 2)) + 1j * rng.normal(size=(batch, n, 2))
    return zeta, phase, src


def _time(fn, repeat):
    fn()  # warm-up (includes numba compilation or cache load)
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return float(np.median(ts))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=4096)
    ap.add_argument("--elements", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    if not kernels.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    zeta, phase, src = _inputs(args.batch, args.elements)

    print(f"batch={args.batch} elements={args.elements}")
    for name, call in (
        ("chain_matrix", lambda nb: kernels.chain_matrix(zeta, phase, use_numba=nb)),
        ("chain_fields", lambda nb: kernels.chain_fields(zeta, phase, 1.0, 0.0, src, use_numba=nb)[0]),
    ):
        a, b = call(True), call(False)
        err = np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)
        t_nb = _time(lambda: call(True), args.repeat)
        t_np = _time(lambda: call(False), args.repeat)
        print(f"{name:13s} numba {t_nb * 1e3:9.3f} ms   numpy {t_np * 1e3:9.3f} ms   "
              f"speed-up {t_np / t_nb:6.2f}x   max rel diff {err:.2e}")
        if err > 1e-9:
            raise SystemExit(f"{name}: backends disagree ({err:.2e})")


if __name__ == "__main__":
    main()
