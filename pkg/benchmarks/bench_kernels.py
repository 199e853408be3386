"""Numba kernels against their numpy fallbacks.

Times the three inner loops on workloads shaped like the ones the pipeline
produces (sampling checks, hull volumes, minimax grid refinement), checks
both paths agree, and prints one line per kernel. Also times one full
region computation on the bundled 9-bus case under the active backend.

    python3 benchmarks/bench_kernels.py [--repeat 5]
    TIESEC_DISABLE_NUMBA=1 python3 benchmarks/bench_kernels.py   # fallback only
"""

from __future__ import annotations

import argparse
import time

import numpy as np
from scipy.spatial import ConvexHull

from tiesec import _kernels as K


def _best(fn, repeat):
    fn()  # warm-up (JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(rng):
    d = 4
    pts = rng.normal(size=(400, d))
    hull = ConvexHull(pts)
    normals = hull.equations[:, :-1]
    offsets = -hull.equations[:, -1]
    samples = rng.normal(size=(20000, d))
    apex = pts.mean(axis=0)
    a = rng.uniform(-1, 1, 4)
    w = rng.uniform(0.5, 2.0, 4)
    slopes = np.linspace(a.min(), a.max(), 200001)
    return {
        "max_violation": (
            lambda: K.max_violation_numpy(samples, normals, offsets),
            lambda: K.max_violation_numba(samples, normals, offsets),
        ),
        "fan_volume": (
            lambda: K.fan_volume_numpy(pts, hull.simplices, apex),
            lambda: K.fan_volume_numba(pts, hull.simplices, apex),
        ),
        "box_error_range": (
            lambda: K.box_error_range_numpy(a, w, slopes),
            lambda: K.box_error_range_numba(a, w, slopes),
        ),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    print(f"numba available: {K.HAVE_NUMBA}, active backend: {K.BACKEND}")
    print(f"{'kernel':<16s}{'numpy [ms]':>12s}{'numba [ms]':>12s}{'speed-up':>10s}  agree")
    for name, (f_np, f_nb) in workloads(rng).items():
        r_np, r_nb = f_np(), f_nb()
        agree = all(np.allclose(x, y, rtol=1e-10, atol=1e-12) for x, y in zip(np.atleast_1d(r_np), np.atleast_1d(r_nb)))
        t_np = _best(f_np, args.repeat)
        t_nb = _best(f_nb, args.repeat) if K.HAVE_NUMBA else float("nan")
        print(f"{name:<16s}{t_np * 1e3:12.3f}{t_nb * 1e3:12.3f}{t_np / t_nb:10.1f}  {agree}")

    from tiesec.pipeline import compute_region_artifact
    from tiesec.synthetic import case9

    net = case9(n_T=2)
    t0 = time.perf_counter()
    compute_region_artifact(net, aggregate=False)
    print(f"9-bus, 2 periods, full region computation ({K.BACKEND}): {time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()
