"""Time each kernel on every available backend.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one row per kernel with the best-of-N wall time per backend and the
speedup of the compiled backend over the numpy fallback.
"""

import argparse
import timeit

import numpy as np

from vpgrid.kernels import backends


def cases(rng):
    mask = rng.uniform(size=(300, 300)) < 0.05
    rows, cols = (v.astype(np.float64) for v in np.nonzero(mask))
    thetas = np.arange(180) * (np.pi / 180)
    cos_t, sin_t = np.cos(thetas), np.sin(thetas)
    rho_max = float(np.ceil(np.hypot(300, 300)))
    x = rng.standard_normal((16, 8, 32, 32)).astype(np.float32)
    cols_buf = None
    pooled = rng.standard_normal((16, 8, 64, 64)).astype(np.float32)

    def hough(k):
        return lambda: k.hough_accumulate(cols, rows, cos_t, sin_t, rho_max, 1.0, int(2 * rho_max) + 1)

    def im2col(k):
        return lambda: k.im2col(x, 3, 1)

    def col2im(k):
        nonlocal cols_buf
        if cols_buf is None:
            cols_buf = np.ascontiguousarray(k.im2col(x, 3, 1))
        return lambda: k.col2im(cols_buf, x.shape, 3, 1)

    def pool_fwd(k):
        return lambda: k.maxpool_forward(pooled, 2, 2)

    def pool_bwd(k):
        out, arg = k.maxpool_forward(pooled, 2, 2)
        return lambda: k.maxpool_backward(out, arg, pooled.shape, 2, 2)

    return {
        "hough_accumulate 300x300, 5% edges, 180 angles": hough,
        "im2col 16x8x32x32, k=3": im2col,
        "col2im 16x8x32x32, k=3": col2im,
        "maxpool_forward 16x8x64x64": pool_fwd,
        "maxpool_backward 16x8x64x64": pool_bwd,
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    found = backends()
    names = sorted(found)
    print("kernel".ljust(48) + "".join(f"{n:>12}" for n in names) + ("     speedup" if "cython" in found else ""))
    for label, make in cases(np.random.default_rng(0)).items():
        times = {}
        for name in names:
            fn = make(found[name])
            number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
            times[name] = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
        row = label.ljust(48) + "".join(f"{times[n] * 1e3:>10.3f}ms" for n in names)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
