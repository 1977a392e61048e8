"""Uniform-region search, overlap suppression, and crop extraction."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from texmine import kernels
from texmine.errors import GridTooSmall
from texmine.grid import GridStats, PairwiseTable, pairwise_distance_table
from texmine.raster import Raster


@dataclass(frozen=True)
class DetectParams:
    """Thresholds controlling which windows become texture crops."""

    threshold: float = 0.10
    min_cells: int = 6
    max_cells: int = 24
    flat_std: float = 0.02
    overlap_iou: float = 0.30
    min_crop_px: int = 240
    max_crop_px: int = 1000

    def __post_init__(self):
        if not 0.0 <= self.threshold < 1.0:
            raise ValueError(f"threshold must be in [0, 1), got {self.threshold}")
        if self.min_cells < 2:
            raise ValueError(f"min_cells must be >= 2, got {self.min_cells}")
        if self.max_cells < self.min_cells:
            raise ValueError(
                f"max_cells {self.max_cells} < min_cells {self.min_cells}"
            )
        if self.flat_std < 0.0:
            raise ValueError(f"flat_std must be >= 0, got {self.flat_std}")
        if not 0.0 <= self.overlap_iou <= 1.0:
            raise ValueError(f"overlap_iou must be in [0, 1], got {self.overlap_iou}")
        if self.min_crop_px < 1 or self.max_crop_px < self.min_crop_px:
            raise ValueError(
                f"bad crop size bounds [{self.min_crop_px}, {self.max_crop_px}]"
            )


@dataclass(frozen=True)
class RegionCandidate:
    """A square window of grid cells whose pairs all score below threshold."""

    cell_x: int
    cell_y: int
    side: int  # window edge, in cells
    max_pair_distance: float


@dataclass
class TextureCrop:
    """A crop cut from a source image, quantized to 8 bits per channel.

    Quantizing at extraction makes the in-memory pixels identical to what
    a PNG write/read round trip yields, so anything derived from them is
    reproducible from the saved file alone.
    """

    source_id: str
    texture_id: str
    x: int
    y: int
    w: int
    h: int
    raster: Raster
    max_pair_distance: float


def find_uniform_regions(
    stats: GridStats,
    params: DetectParams = DetectParams(),
    table: PairwiseTable | None = None,
) -> list[RegionCandidate]:
    """Largest qualifying square window anchored at each top-left cell.

    A window qualifies when every cell pair inside it has distance
    <= params.threshold. Since the max over pairs is monotone in the side,
    growth stops at the first failure. Candidates are sorted by side
    descending, then max distance ascending, then (cell_y, cell_x).

    Raises:
        GridTooSmall: the grid has fewer than min_cells rows or columns.
    """
    ch, cw = stats.cells_h, stats.cells_w
    if ch < params.min_cells or cw < params.min_cells:
        raise GridTooSmall(
            f"grid {cw}x{ch} cannot hold a {params.min_cells}-cell window"
        )
    needed = min(params.max_cells, ch, cw)
    if table is None:
        table = pairwise_distance_table(stats, needed)
    elif table.max_window < needed or (table.cells_w, table.cells_h) != (cw, ch):
        raise ValueError("supplied pairwise table does not cover this search")
    sides, dists = kernels.region_search(
        table.dense, params.min_cells, params.max_cells, params.threshold
    )
    ys, xs = np.nonzero(sides)
    cands = [
        RegionCandidate(
            cell_x=int(x),
            cell_y=int(y),
            side=int(sides[y, x]),
            max_pair_distance=float(dists[y, x]),
        )
        for y, x in zip(ys, xs)
    ]
    cands.sort(key=lambda c: (-c.side, c.max_pair_distance, c.cell_y, c.cell_x))
    return cands


def _iou(a: RegionCandidate, b: RegionCandidate) -> float:
    ax2, ay2 = a.cell_x + a.side, a.cell_y + a.side
    bx2, by2 = b.cell_x + b.side, b.cell_y + b.side
    iw = min(ax2, bx2) - max(a.cell_x, b.cell_x)
    ih = min(ay2, by2) - max(a.cell_y, b.cell_y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.side * a.side + b.side * b.side - inter
    return inter / union


def suppress_overlaps(
    candidates: list[RegionCandidate], params: DetectParams = DetectParams()
) -> list[RegionCandidate]:
    """Greedy keep-first filter: drop candidates overlapping a kept one.

    Candidates must already be in priority order; a candidate is dropped
    when its IoU with any kept region exceeds params.overlap_iou.
    """
    kept: list[RegionCandidate] = []
    for c in candidates:
        if all(_iou(c, k) <= params.overlap_iou for k in kept):
            kept.append(c)
    return kept


def is_flat(crop: Raster, params: DetectParams = DetectParams()) -> bool:
    """True when the mean per-channel standard deviation is below flat_std."""
    stds = crop.data.astype(np.float64).std(axis=(0, 1))
    return float(stds.mean()) < params.flat_std


def _quantize_u8(values: np.ndarray) -> np.ndarray:
    return np.rint(values * 255.0).astype(np.uint8)


def texture_id_for(source_id: str, x: int, y: int, w: int, h: int,
                   quantized: np.ndarray) -> str:
    """Stable 16-hex-digit id from source, placement, and exact pixels."""
    digest = hashlib.sha256()
    digest.update(f"{source_id}|{x},{y},{w},{h}|".encode("utf-8"))
    digest.update(np.ascontiguousarray(quantized).tobytes())
    return digest.hexdigest()[:16]


def extract_crops(
    source: Raster,
    stats: GridStats,
    regions: list[RegionCandidate],
    params: DetectParams = DetectParams(),
    source_id: str = "",
) -> list[TextureCrop]:
    """Cut pixel crops for accepted regions, dropping flat or off-size ones.

    Crops are quantized to 8 bits per channel on extraction; the flatness
    check runs on the quantized pixels. Input order is preserved.
    """
    cell = stats.cell_px
    crops: list[TextureCrop] = []
    for reg in regions:
        px = reg.side * cell
        if not params.min_crop_px <= px <= params.max_crop_px:
            continue
        x, y = reg.cell_x * cell, reg.cell_y * cell
        q = _quantize_u8(source.data[y : y + px, x : x + px])
        raster = Raster(q.astype(np.float32) / 255.0)
        if is_flat(raster, params):
            continue
        crops.append(
            TextureCrop(
                source_id=source_id,
                texture_id=texture_id_for(source_id, x, y, px, px, q),
                x=x,
                y=y,
                w=px,
                h=px,
                raster=raster,
                max_pair_distance=reg.max_pair_distance,
            )
        )
    return crops
