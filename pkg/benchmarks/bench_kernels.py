"""Compare the compiled kernels against the numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [--size 1600] [--repeat 3]

Times the three hot paths (cell histograms, pairwise distance table,
region search) on a synthetic image at pipeline-like settings and prints
per-backend timings plus speedups. Also cross-checks that both backends
agree on the results they produce.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from texmine.kernels import available_backends, load_backend


def build_inputs(size: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    planes = rng.random((size, size * 3 // 4, 9), dtype=np.float32)
    return planes


def offset_pairs(ch: int, cw: int, mw: int):
    ia, ib, spans = [], [], []
    for dy in range(mw):
        for dx in range(-mw + 1, mw):
            if dy == 0 and dx <= 0:
                continue
            if dy >= ch or abs(dx) >= cw:
                continue
            ys = np.arange(0, ch - dy, dtype=np.int64)
            xs = np.arange(max(0, -dx), cw - max(0, dx), dtype=np.int64)
            yy, xx = np.meshgrid(ys, xs, indexing="ij")
            ia.append((yy * cw + xx).ravel())
            ib.append(((yy + dy) * cw + (xx + dx)).ravel())
            spans.append((dy, dx, ys, xs))
    return np.concatenate(ia), np.concatenate(ib), spans


def fill_table(dists, spans, ch, cw, mw):
    dense = np.full((ch, cw, mw, 2 * mw - 1), np.nan)
    pos = 0
    for dy, dx, ys, xs in spans:
        n = len(ys) * len(xs)
        dense[ys[0] : ys[-1] + 1, xs[0] : xs[-1] + 1, dy, mw - 1 + dx] = dists[
            pos : pos + n
        ].reshape(len(ys), len(xs))
        pos += n
    return dense


def bench(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=1600, help="long edge of the synthetic image")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--cell-px", type=int, default=40)
    ap.add_argument("--bins", type=int, default=32)
    ap.add_argument("--max-window", type=int, default=24)
    args = ap.parse_args()

    planes = build_inputs(args.size)
    names = available_backends()
    print(f"backends: {', '.join(names)}")
    print(f"image {planes.shape[1]}x{planes.shape[0]}, cell {args.cell_px}, bins {args.bins}")

    results: dict[str, dict[str, float]] = {}
    hists = {}
    tables = {}
    for name in names:
        be = load_backend(name)
        results[name] = {}
        results[name]["cell_histograms"] = bench(
            lambda: be.cell_histograms(planes, args.cell_px, args.bins), args.repeat
        )
        h = be.cell_histograms(planes, args.cell_px, args.bins)
        hists[name] = h
        ch, cw = h.shape[:2]
        flat = np.ascontiguousarray(h.reshape(ch * cw, h.shape[2], h.shape[3]))
        mw = min(args.max_window, ch, cw)
        ia, ib, spans = offset_pairs(ch, cw, mw)
        results[name]["pair_distances"] = bench(
            lambda: be.pair_distances(flat, ia, ib), args.repeat
        )
        table = fill_table(be.pair_distances(flat, ia, ib), spans, ch, cw, mw)
        tables[name] = table
        results[name]["region_search"] = bench(
            lambda: be.region_search(table, 6, args.max_window, 0.10), args.repeat
        )

    if len(names) == 2:
        a, b = names
        assert np.array_equal(hists[a], hists[b]), "histogram mismatch between backends"
        dt = np.nanmax(np.abs(tables[a] - tables[b]))
        print(f"cross-check: histograms identical, table max |delta| = {dt:.2e}")

    width = max(len(k) for r in results.values() for k in r)
    header = f"{'kernel':<{width}}  " + "  ".join(f"{n:>12}" for n in names)
    if len(names) == 2:
        header += f"  {'speedup':>9}"
    print(header)
    for kernel in ("cell_histograms", "pair_distances", "region_search"):
        row = f"{kernel:<{width}}  " + "  ".join(
            f"{results[n][kernel] * 1000:>10.1f}ms" for n in names
        )
        if len(names) == 2:
            row += f"  {results[names[1]][kernel] / results[names[0]][kernel]:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
