"""Benchmark the neighbor-search backends (compiled extension vs numpy).

Times perceived-density evaluation and cluster counting for a range of
particle counts, once per backend.  Each backend runs in a fresh
subprocess because the implementation is chosen at import time
(AGGRSIM_DISABLE_EXT=1 forces the numpy fallback).

Usage: python3 benchmarks/bench_neighbors.py [--sizes 1000,4000,16000]
       [--dimension 2] [--radius 0.1] [--repeats 5]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _worker(sizes: list[int], dimension: int, radius: float, repeats: int) -> None:
    import numpy as np

    from aggrsim.geometry import TorusGeometry
    from aggrsim.kernels import KernelSpec
    from aggrsim.neighbors import BACKEND, cluster_count, perceived_density_all
    from aggrsim.rng import TAG_POSITION, uniforms

    geom = TorusGeometry(dimension=dimension, side=1.0)
    spec = KernelSpec(radius=radius, profile="indicator", cos_alpha=-1.0, normalization="raw")
    rows = []
    for n in sizes:
        pos = uniforms(12345, TAG_POSITION, 0, n * dimension).reshape(n, dimension)
        perceived_density_all(pos, spec, geom)  # warm up caches / JIT-free but fair
        best_theta = min(
            _timed(lambda: perceived_density_all(pos, spec, geom)) for _ in range(repeats)
        )
        best_cluster = min(
            _timed(lambda: cluster_count(pos, geom, radius)) for _ in range(repeats)
        )
        rows.append({"n": n, "theta_s": best_theta, "cluster_s": best_cluster})
    print(json.dumps({"backend": BACKEND, "rows": rows}))


def _timed(fn) -> float:
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="1000,4000,16000")
    parser.add_argument("--dimension", type=int, default=2, choices=(1, 2))
    parser.add_argument("--radius", type=float, default=0.1)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if args.worker:
        _worker(sizes, args.dimension, args.radius, args.repeats)
        return 0

    results = {}
    for backend, disable in (("compiled", "0"), ("python", "1")):
        env = dict(os.environ, AGGRSIM_DISABLE_EXT=disable)
        cmd = [
            sys.executable,
            os.path.abspath(__file__),
            "--worker",
            "--sizes",
            args.sizes,
            "--dimension",
            str(args.dimension),
            "--radius",
            str(args.radius),
            "--repeats",
            str(args.repeats),
        ]
        out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
        payload = json.loads(out.stdout.strip().splitlines()[-1])
        results[payload["backend"]] = payload["rows"]

    if "compiled" not in results:
        print("note: compiled extension unavailable; both runs used the numpy fallback")
    names = sorted(results)
    header = f"{'n':>8}  {'task':<8}" + "".join(f"  {name:>12}" for name in names)
    if len(names) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    for i, n in enumerate(sizes):
        for task, key in (("theta", "theta_s"), ("clusters", "cluster_s")):
            cells = [results[name][i][key] for name in names]
            line = f"{n:>8}  {task:<8}" + "".join(f"  {c * 1e3:>10.2f}ms" for c in cells)
            if len(cells) == 2:
                line += f"  {cells[names.index('python')] / cells[names.index('compiled')]:>7.1f}x"
            print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
