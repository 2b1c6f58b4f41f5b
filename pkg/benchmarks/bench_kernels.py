"""Compiled vs pure-Python kernels.

Times the cubic term and a block of Strang steps for both backends over a
range of truncations, and reports where the padded FFT overtakes the direct
convolution. Run with ``python benchmarks/bench_kernels.py [--quick]``.
"""
import argparse
import json
import sys
import timeit

import numpy as np

from szego_lab import _fallback, kernels

try:
    from szego_lab import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def _field(N, seed=0):
    rng = np.random.default_rng(seed)
    k = np.arange(N + 1)
    return (rng.standard_normal(N + 1) + 1j * rng.standard_normal(N + 1)) / (1 + k) ** 1.5


def _best(fn, number, repeat=5):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def bench(sizes, steps):
    rows = []
    for N in sizes:
        u = _field(N)
        ph = np.exp(-0.5j * 0.1 * np.arange(N + 1) ** 2 * 1e-3)
        number = max(1, 20000 // (N + 1))
        row = {"N": N,
               "cubic_fft_us": 1e6 * _best(lambda: _fallback.cubic_szego(u), number),
               "strang_fft_ms": 1e3 * _best(lambda: _fallback.strang_steps(u, ph, 1e-3, steps), 1, 3)}
        if compiled is not None:
            row["cubic_direct_us"] = 1e6 * _best(lambda: compiled.cubic_szego(u), number)
            row["strang_direct_ms"] = 1e3 * _best(lambda: compiled.strang_steps(u, ph, 1e-3, steps), 1, 3)
            row["speedup_strang"] = row["strang_fft_ms"] / row["strang_direct_ms"]
        rows.append(row)
    return rows


def crossover(rows):
    """Smallest N where the FFT path beats direct convolution for Strang blocks."""
    for r in rows:
        if "strang_direct_ms" in r and r["strang_fft_ms"] < r["strang_direct_ms"]:
            return r["N"]
    return None


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="fewer sizes and steps")
    ap.add_argument("--json", action="store_true", help="print rows as JSON")
    args = ap.parse_args(argv)
    sizes = [8, 16, 32, 64, 128] if args.quick else [8, 16, 32, 48, 64, 80, 96, 112, 128, 192, 256, 512]
    steps = 50 if args.quick else 200
    rows = bench(sizes, steps)
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(f"active backend: {kernels.BACKEND}; direct kernel used up to {kernels.DIRECT_MAX_MODES} modes")
        hdr = f"{'N':>5} {'cubic fft us':>13} {'cubic dir us':>13} {'strang fft ms':>14} {'strang dir ms':>14} {'speedup':>8}"
        print(hdr)
        for r in rows:
            print(f"{r['N']:>5} {r['cubic_fft_us']:>13.1f} {r.get('cubic_direct_us', float('nan')):>13.1f} "
                  f"{r['strang_fft_ms']:>14.2f} {r.get('strang_direct_ms', float('nan')):>14.2f} "
                  f"{r.get('speedup_strang', float('nan')):>8.2f}")
        if compiled is None:
            print("compiled extension not available; only the fallback was timed")
        else:
            print(f"FFT overtakes direct convolution at N = {crossover(rows)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
