"""Cell-grid histogram statistics and pairwise Jensen-Shannon distances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from texmine import kernels
from texmine.errors import ImageTooSmall, ShapeMismatch
from texmine.raster import FeatureStack


@dataclass(frozen=True)
class GridParams:
    """Cell size and histogram resolution for grid statistics."""

    cell_px: int = 40
    bins: int = 32

    def __post_init__(self):
        if self.cell_px < 8:
            raise ValueError(f"cell_px must be >= 8, got {self.cell_px}")
        if not 2 <= self.bins <= 256:
            raise ValueError(f"bins must be in [2, 256], got {self.bins}")


@dataclass
class GridStats:
    """Normalized per-cell histograms over every feature plane.

    hist has shape (cells_h, cells_w, channels, bins); each (cell, channel)
    row sums to 1. Pixels beyond the last full cell are not counted.
    """

    cell_px: int
    bins: int
    hist: np.ndarray

    @property
    def cells_h(self) -> int:
        return self.hist.shape[0]

    @property
    def cells_w(self) -> int:
        return self.hist.shape[1]

    @property
    def channels(self) -> int:
        return self.hist.shape[2]

    def cell(self, cx: int, cy: int) -> np.ndarray:
        """Histogram block (channels, bins) for the cell at column cx, row cy."""
        return self.hist[cy, cx]

    def flat(self) -> np.ndarray:
        """(cells_h * cells_w, channels, bins) view in row-major cell order."""
        return np.ascontiguousarray(
            self.hist.reshape(self.cells_h * self.cells_w, self.channels, self.bins)
        )


def build_grid_stats(features: FeatureStack, params: GridParams = GridParams()) -> GridStats:
    """Histogram every feature plane over a grid of square cells.

    Bucket index is min(floor(v * bins), bins - 1); a value of exactly 1.0
    lands in the last bucket.

    Raises:
        ImageTooSmall: the image does not cover even one full cell.
    """
    if features.height < params.cell_px or features.width < params.cell_px:
        raise ImageTooSmall(
            f"image {features.width}x{features.height} is smaller than one "
            f"{params.cell_px}px cell"
        )
    hist = kernels.cell_histograms(
        np.ascontiguousarray(features.planes), params.cell_px, params.bins
    )
    return GridStats(cell_px=params.cell_px, bins=params.bins, hist=hist)


def js_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Mean per-channel Jensen-Shannon distance between two cell blocks.

    Both arguments are (channels, bins) normalized histograms. Per channel,
    JSD uses base-2 logs with M = (P+Q)/2 (so JSD is in [0, 1]) and the
    distance is sqrt(JSD); channels are averaged. Identical inputs give
    exactly 0, disjoint supports give exactly 1 per channel.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise ShapeMismatch(f"histogram blocks differ: {a.shape} vs {b.shape}")
    pair = np.ascontiguousarray(np.stack([a, b]))
    idx = np.array([0], dtype=np.int64)
    jdx = np.array([1], dtype=np.int64)
    return float(kernels.pair_distances(pair, idx, jdx)[0])


class PairwiseTable:
    """Distances for every cell pair within a square offset neighborhood.

    Stores one float per pair whose cell coordinates differ by less than
    max_window rows and columns, keyed canonically at the upper-left cell.
    Supports dict-style access by (i, j) linear cell indices (row-major),
    symmetric in i and j.
    """

    def __init__(self, dense: np.ndarray, cells_w: int, cells_h: int,
                 max_window: int, n_pairs: int):
        self.dense = dense  # (cells_h, cells_w, mw, 2*mw-1), NaN = absent
        self.cells_w = cells_w
        self.cells_h = cells_h
        self.max_window = max_window
        self._n_pairs = n_pairs

    def __len__(self) -> int:
        return self._n_pairs

    def _locate(self, key) -> float | None:
        i, j = key
        n = self.cells_w * self.cells_h
        if not (0 <= i < n and 0 <= j < n) or i == j:
            return None
        y1, x1 = divmod(int(i), self.cells_w)
        y2, x2 = divmod(int(j), self.cells_w)
        if (y2, x2) < (y1, x1):
            y1, x1, y2, x2 = y2, x2, y1, x1
        dy, dx = y2 - y1, x2 - x1
        if dy >= self.max_window or abs(dx) >= self.max_window:
            return None
        v = self.dense[y1, x1, dy, self.max_window - 1 + dx]
        return None if np.isnan(v) else float(v)

    def __getitem__(self, key) -> float:
        v = self._locate(key)
        if v is None:
            raise KeyError(key)
        return v

    def get(self, key, default=None):
        v = self._locate(key)
        return default if v is None else v

    def __contains__(self, key) -> bool:
        return self._locate(key) is not None

    def items(self):
        """Yield ((i, j), distance) with i < j, row-major order."""
        mw = self.max_window
        for y1 in range(self.cells_h):
            for x1 in range(self.cells_w):
                i = y1 * self.cells_w + x1
                for dy in range(mw):
                    for dx in range(-mw + 1, mw):
                        if dy == 0 and dx <= 0:
                            continue
                        y2, x2 = y1 + dy, x1 + dx
                        if not (0 <= y2 < self.cells_h and 0 <= x2 < self.cells_w):
                            continue
                        v = self.dense[y1, x1, dy, mw - 1 + dx]
                        if not np.isnan(v):
                            yield (i, y2 * self.cells_w + x2), float(v)


def pairwise_distance_table(stats: GridStats, max_window: int) -> PairwiseTable:
    """Compute distances for all cell pairs within max_window of each other.

    One kernel call covers every stored pair, so table entries match
    js_distance on the same cells bit for bit.
    """
    if max_window < 2:
        raise ValueError(f"max_window must be >= 2, got {max_window}")
    ch, cw = stats.cells_h, stats.cells_w
    mw = max_window
    dense = np.full((ch, cw, mw, 2 * mw - 1), np.nan)
    flat = stats.flat()
    ia_parts: list[np.ndarray] = []
    ib_parts: list[np.ndarray] = []
    spans = []
    for dy in range(mw):
        for dx in range(-mw + 1, mw):
            if dy == 0 and dx <= 0:
                continue
            if dy >= ch or abs(dx) >= cw:
                continue
            ys = np.arange(0, ch - dy, dtype=np.int64)
            xs = np.arange(max(0, -dx), cw - max(0, dx), dtype=np.int64)
            yy, xx = np.meshgrid(ys, xs, indexing="ij")
            ia_parts.append((yy * cw + xx).ravel())
            ib_parts.append(((yy + dy) * cw + (xx + dx)).ravel())
            spans.append((dy, dx, ys, xs))
    total = 0
    if spans:
        ia = np.concatenate(ia_parts)
        ib = np.concatenate(ib_parts)
        dists = kernels.pair_distances(flat, ia, ib)
        pos = 0
        for dy, dx, ys, xs in spans:
            n = len(ys) * len(xs)
            block = dists[pos : pos + n].reshape(len(ys), len(xs))
            dense[ys[0] : ys[-1] + 1, xs[0] : xs[-1] + 1, dy, mw - 1 + dx] = block
            pos += n
        total = pos
    return PairwiseTable(dense, cells_w=cw, cells_h=ch, max_window=mw, n_pairs=total)
