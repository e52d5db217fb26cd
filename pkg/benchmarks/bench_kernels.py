"""Time the per-cell kernels on both backends.

Run with: python3 benchmarks/bench_kernels.py [--cells N] [--repeat K]
"""

import argparse
import time

import numpy as np

from curvematch import _kernels_py
from curvematch.assembly import _ref_tables

try:
    from curvematch import _core
except ImportError:
    _core = None


def random_cells(rng, nc):
    base = rng.uniform(-5.0, 5.0, size=(nc, 1, 2))
    ang = rng.uniform(0.0, 2.0 * np.pi, size=nc)
    scale = rng.uniform(0.5, 2.0, size=nc)
    ca, sa = np.cos(ang), np.sin(ang)
    rot = np.stack([np.stack([ca, -sa], axis=1), np.stack([sa, ca], axis=1)], axis=1)
    ref = np.array([[0.0, 0.0], [1.0, 0.1], [0.15, 1.0]])
    return base + np.einsum("cab,vb->cva", rot, ref) * scale[:, None, None]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cells", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    coords = random_cells(rng, args.cells)
    val, grad, hess, third, qw = _ref_tables()
    poly = np.column_stack([3.0 * np.cos(np.linspace(0, 2 * np.pi, 49)[:-1]),
                            3.0 * np.sin(np.linspace(0, 2 * np.pi, 49)[:-1])])
    xs = np.linspace(-10.0, 10.0, 128)
    ys = np.linspace(-10.0, 10.0, 128)

    backends = [("python", _kernels_py)]
    if _core is not None:
        backends.append(("compiled", _core))

    print(f"cells={args.cells} quad_pts={qw.size} grid=128x128 (best of {args.repeat})")
    header = f"{'kernel':<22}" + "".join(f"{name:>14}" for name, _ in backends)
    print(header)
    rows = {}
    for name, mod in backends:
        M, Jinv, detJ = mod.cell_transforms(coords)
        rows.setdefault("cell_transforms", []).append(
            best_of(lambda m=mod: m.cell_transforms(coords), args.repeat)
        )
        rows.setdefault("element_matrices", []).append(
            best_of(lambda m=mod: m.element_matrices(M, Jinv, detJ, 1.0, val, grad, hess, third, qw), args.repeat)
        )
        rows.setdefault("winding_number_grid", []).append(
            best_of(lambda m=mod: m.winding_number_grid(poly, xs, ys), args.repeat)
        )
    for kernel, times in rows.items():
        line = f"{kernel:<22}" + "".join(f"{t * 1e3:>11.2f} ms" for t in times)
        if len(times) == 2 and times[1] > 0:
            line += f"   ({times[0] / times[1]:.1f}x)"
        print(line)


if __name__ == "__main__":
    main()
