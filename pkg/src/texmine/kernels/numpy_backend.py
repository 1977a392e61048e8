"""Numpy implementations of the hot kernels.

Fallback used when the compiled extension is unavailable (or when forced
via ``TEXMINE_KERNEL=numpy``). Results match ``texmine.kernels._native``:
histogram counts are bit-identical; distances agree to ~1e-15 (float
summation order differs between the two backends).
"""

import numpy as np

_PAIR_CHUNK = 8192


def cell_histograms(planes, cell_px, bins):
    """Build normalized per-cell, per-channel histograms over a cell grid.

    Args:
        planes: (H, W, C) float32 array of feature values in [0, 1].
        cell_px: cell side in pixels; remainder rows/cols are discarded.
        bins: histogram buckets over [0, 1].

    Returns:
        (cells_h, cells_w, C, bins) float64 array; each (cell, channel)
        histogram sums to 1. Bucket index is min(floor(v * bins), bins - 1),
        computed in float64 so both backends bucket identically.
    """
    h, w, nch = planes.shape
    ch, cw = h // cell_px, w // cell_px
    ys = np.repeat(np.arange(ch, dtype=np.int64), cell_px)
    xs = np.repeat(np.arange(cw, dtype=np.int64), cell_px)
    cell_base = (ys[:, None] * cw + xs[None, :]) * bins
    counts = np.empty((ch, cw, nch, bins), np.float64)
    for c in range(nch):
        v = planes[: ch * cell_px, : cw * cell_px, c].astype(np.float64)
        b = (v * bins).astype(np.int64)
        np.minimum(b, bins - 1, out=b)
        cnt = np.bincount((cell_base + b).ravel(), minlength=ch * cw * bins)
        counts[:, :, c, :] = cnt.reshape(ch, cw, bins)
    counts /= float(cell_px * cell_px)
    return counts


def pair_distances(hists, ia, ib):
    """Mean per-channel Jensen-Shannon distance for index pairs.

    Args:
        hists: (N, C, B) float64 normalized histograms.
        ia, ib: (P,) int64 row indices into hists.

    Returns:
        (P,) float64 distances in [0, 1]: per channel JSD with base-2 logs
        and M = (P+Q)/2, square-rooted, then averaged over channels.
    """
    n = len(ia)
    out = np.empty(n, np.float64)
    for s in range(0, n, _PAIR_CHUNK):
        p = hists[ia[s : s + _PAIR_CHUNK]]
        q = hists[ib[s : s + _PAIR_CHUNK]]
        m = 0.5 * (p + q)
        # 0*log(0) := 0; where p == 0 the ratio placeholder 1 gives log2 = 0
        rp = np.divide(p, m, out=np.ones_like(p), where=p > 0)
        rq = np.divide(q, m, out=np.ones_like(q), where=q > 0)
        jsd = 0.5 * (
            np.sum(p * np.log2(rp), axis=-1) + np.sum(q * np.log2(rq), axis=-1)
        )
        np.clip(jsd, 0.0, 1.0, out=jsd)
        out[s : s + _PAIR_CHUNK] = np.sqrt(jsd).mean(axis=-1)
    return out


def region_search(table, min_cells, max_cells, threshold):
    """Largest all-pairs-similar square window anchored at each grid cell.

    Args:
        table: (cells_h, cells_w, mw, 2*mw-1) float64 offset-indexed
            distance table; entry [y, x, dy, mw-1+dx] is the distance
            between cells (y, x) and (y+dy, x+dx).
        min_cells, max_cells: window side bounds in cells.
        threshold: a window qualifies iff every pair distance <= threshold.

    Returns:
        (sides, dists): int32 and float64 (cells_h, cells_w) arrays giving,
        per top-left cell, the largest qualifying side (0 if none) and the
        max pair distance inside that window.
    """
    ch, cw, mw = table.shape[0], table.shape[1], table.shape[2]
    sides = np.zeros((ch, cw), np.int32)
    dists = np.zeros((ch, cw), np.float64)
    for y0 in range(ch - min_cells + 1):
        for x0 in range(cw - min_cells + 1):
            limit = min(max_cells, ch - y0, cw - x0, mw)
            s = min_cells
            m = _window_max(table, y0, x0, s, mw, threshold)
            while m <= threshold:
                sides[y0, x0] = s
                dists[y0, x0] = m
                s += 1
                if s > limit:
                    break
                m = _window_max(table, y0, x0, s, mw, threshold)
    return sides, dists


def _window_max(table, y0, x0, s, mw, stop_above):
    """Max pair distance in the s-cell window at (y0, x0).

    Exact when <= stop_above; may return early (any value > stop_above)
    once the window is known to fail.
    """
    off = mw - 1
    best = 0.0
    for dy in range(s):
        lo = 1 if dy == 0 else -s + 1
        for dx in range(lo, s):
            slab = table[y0 : y0 + s - dy, x0 + max(0, -dx) : x0 + s - max(0, dx), dy, off + dx]
            m = slab.max()
            if m > best:
                best = m
                if best > stop_above:
                    return best
    return best
