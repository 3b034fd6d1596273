"""Compare the compiled and NumPy kernel backends.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times P1 triplet generation and the boundary double-sum weights on the
meshes used by the solver, then an end-to-end desk solve for context.
"""
import argparse
import importlib
import timeit

import numpy as np

from heatdd import _kernels_py
from heatdd.femgrid import _boundary_samples, build_mesh, decompose
from heatdd.verify import desk_system


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    try:
        ext = importlib.import_module("heatdd._kernels")
    except ImportError:
        raise SystemExit("compiled extension not built; run `pip install -e .` first")

    print(f"{'kernel':<28}{'size':>10}{'cython [ms]':>14}{'numpy [ms]':>14}{'speedup':>10}")
    for n in (16, 32, 64, 128):
        mesh = build_mesh(2, (1.0, 1.0), n, n)
        pts = np.ascontiguousarray(mesh.points, dtype=np.float64)
        els = np.ascontiguousarray(mesh.elements, dtype=np.int64)
        tc = best(lambda: ext.p1_triplets(pts, els), args.repeat)
        tp = best(lambda: _kernels_py.p1_triplets(pts, els), args.repeat)
        print(f"{'p1_triplets':<28}{len(els):>10}{1e3 * tc:>14.3f}{1e3 * tp:>14.3f}{tp / tc:>10.1f}")
    for n in (16, 32, 64):
        dec = decompose(build_mesh(2, (1.0, 1.0), n, n), 0.5)
        px, py, ln, _ = _boundary_samples(dec, 1, 16)
        tc = best(lambda: ext.slobodetskii_weights(px, py, ln, 2.0), args.repeat)
        tp = best(lambda: _kernels_py.slobodetskii_weights(px, py, ln, 2.0), args.repeat)
        print(f"{'slobodetskii_weights':<28}{len(px):>10}{1e3 * tc:>14.3f}{1e3 * tp:>14.3f}"
              f"{tp / tc:>10.1f}")

    # context: where the time of a desk-scale run goes
    t_setup = best(lambda: desk_system(32, 64), 1)
    system, iface = desk_system(32, 64)
    f = np.zeros((64, system.mesh.n_free))
    t_schur = best(lambda: (iface.schur(1), iface.schur(2)), 1)
    t_mono = best(lambda: system.solve_monodomain(f), 1)
    print(f"\ndesk 32x32, n_t=64: setup {1e3 * t_setup:.1f} ms, Schur complements "
          f"{1e3 * t_schur:.1f} ms, monodomain solve {1e3 * t_mono:.1f} ms")


if __name__ == "__main__":
    main()
