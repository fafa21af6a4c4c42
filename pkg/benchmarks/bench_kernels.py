#!/usr/bin/env python3
"""Benchmark the scoring kernel backends against each other.

Times full score-map computations (every offset in the search window)
for the numpy fallback and, when built, the compiled extension, at a few
thread counts.  Also reports the largest absolute disagreement between
the two backends on the benchmark scene, which should sit at float
summation noise (~1e-13 or below).

Usage:
    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --frame 640x480 --template 48x48 \
        --radius 25 --repeats 30 --threads 1,4
"""

import argparse
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from smrtrack import _kernels_py
from smrtrack.matching import smr_lut

try:
    from smrtrack import _kernels_c
except ImportError:
    _kernels_c = None


def parse_size(text):
    w, _, h = text.partition("x")
    return int(w), int(h)


def run_once(impl, frame, tmpl, x0, y0, radius, lut, threads):
    side = 2 * radius + 1
    out = np.empty((side, side), dtype=np.float64)
    if threads <= 1:
        impl.score_map_band(frame, tmpl, x0, y0, radius, lut, out, 0, side)
        return out
    bounds = np.linspace(0, side, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(impl.score_map_band, frame, tmpl, x0, y0, radius, lut, out, lo, hi)
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        for future in futures:
            future.result()
    return out


def best_time(impl, scene, threads, repeats):
    frame, tmpl, x0, y0, radius, lut = scene
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        run_once(impl, frame, tmpl, x0, y0, radius, lut, threads)
        best = min(best, time.perf_counter() - started)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--frame", type=parse_size, default=(320, 240), metavar="WxH")
    parser.add_argument("--template", type=parse_size, default=(32, 32), metavar="WxH")
    parser.add_argument("--radius", type=int, default=20)
    parser.add_argument("--alpha", type=float, default=63.75)
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--threads", default="1,2,4", help="comma-separated thread counts")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    fw, fh = args.frame
    tw, th = args.template
    rng = np.random.default_rng(args.seed)
    frame = rng.integers(0, 256, size=(fh, fw), dtype=np.uint8)
    tmpl = rng.integers(0, 256, size=(th, tw), dtype=np.uint8)
    x0 = (fw - tw) // 2
    y0 = (fh - th) // 2
    lut = smr_lut(args.alpha)
    scene = (frame, tmpl, x0, y0, args.radius, lut)
    side = 2 * args.radius + 1
    ops = side * side * tw * th

    print(
        f"frame {fw}x{fh}, template {tw}x{th}, radius {args.radius} "
        f"({side * side} offsets, {ops / 1e6:.1f}M pixel terms per map)"
    )

    backends = [("python", _kernels_py)]
    if _kernels_c is not None:
        backends.append(("compiled", _kernels_c))
    else:
        print("compiled extension not built; benchmarking the fallback only")

    thread_counts = [int(t) for t in args.threads.split(",")]
    baseline = None
    print(f"{'backend':<10}{'threads':>8}{'ms/map':>12}{'maps/s':>10}{'speedup':>10}")
    for name, impl in backends:
        for threads in thread_counts:
            secs = best_time(impl, scene, threads, args.repeats)
            if baseline is None:
                baseline = secs
            print(
                f"{name:<10}{threads:>8}{secs * 1e3:>12.2f}{1 / secs:>10.1f}"
                f"{baseline / secs:>9.1f}x"
            )

    if _kernels_c is not None:
        a = run_once(_kernels_py, *scene, threads=1)
        b = run_once(_kernels_c, *scene, threads=1)
        print(f"max |python - compiled| = {np.abs(a - b).max():.2e}")


if __name__ == "__main__":
    main()
