"""Contact-sheet montages for visual inspection of crops and materials."""

from __future__ import annotations

import math
from pathlib import Path

import cv2
import numpy as np

from texmine.errors import EmptyInput, IoError
from texmine.pipeline import (
    MAP_FILES,
    _load_gray,
    _load_rgb,
    manifest_material_order,
    manifest_texture_order,
)
from texmine.raster import encode_png

TILE_PX = 192
_SHEET_BG = 0.08  # dark gray behind unused tiles

MAP_ORDER = ("albedo", "normal", "roughness", "metallic", "height", "transmission")


def _to_tile(img: np.ndarray) -> np.ndarray:
    """Downscale into a TILE_PX square, centered, aspect preserved."""
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    h, w = img.shape[:2]
    scale = min(TILE_PX / w, TILE_PX / h, 1.0)
    nw, nh = max(1, round(w * scale)), max(1, round(h * scale))
    if (nw, nh) != (w, h):
        img = cv2.resize(img, (nw, nh), interpolation=cv2.INTER_AREA)
    tile = np.full((TILE_PX, TILE_PX, 3), _SHEET_BG, np.float32)
    oy, ox = (TILE_PX - nh) // 2, (TILE_PX - nw) // 2
    tile[oy : oy + nh, ox : ox + nw] = img
    return tile


def montage(tiles: list[np.ndarray], columns: int) -> np.ndarray:
    """Row-major grid of equal tiles; trailing cells stay background."""
    if not tiles:
        raise EmptyInput("montage needs at least one tile")
    if columns < 1:
        raise ValueError(f"columns must be >= 1, got {columns}")
    rows = math.ceil(len(tiles) / columns)
    sheet = np.full((rows * TILE_PX, columns * TILE_PX, 3), _SHEET_BG, np.float32)
    for i, tile in enumerate(tiles):
        r, c = divmod(i, columns)
        sheet[r * TILE_PX : (r + 1) * TILE_PX, c * TILE_PX : (c + 1) * TILE_PX] = tile
    return sheet


def crop_sheet(manifest: dict, out_dir: Path, columns: int = 8) -> np.ndarray:
    """Montage of every texture crop, in manifest order.

    Raises:
        EmptyInput: the manifest lists no textures.
    """
    order = manifest_texture_order(manifest)
    if not order:
        raise EmptyInput("no textures in manifest")
    tiles = []
    for tid in order:
        path = Path(out_dir) / manifest["textures"][tid]["file"]
        try:
            tiles.append(_to_tile(_load_rgb(path)))
        except OSError as e:
            raise IoError(f"cannot read crop {path}: {e}") from e
    return montage(tiles, columns)


def material_sheet(manifest: dict, out_dir: Path) -> np.ndarray:
    """One material per row, its maps as columns in MAP_ORDER.

    Raises:
        EmptyInput: the manifest lists no materials.
    """
    order = manifest_material_order(manifest)
    if not order:
        raise EmptyInput("no materials in manifest")
    tiles = []
    for mid in order:
        mdir = Path(out_dir) / manifest["materials"][mid]["dir"]
        for name in MAP_ORDER:
            path = mdir / MAP_FILES[name]
            try:
                img = _load_rgb(path) if name in ("albedo", "normal") else _load_gray(path)
            except OSError as e:
                raise IoError(f"cannot read map {path}: {e}") from e
            tiles.append(_to_tile(img))
    return montage(tiles, columns=len(MAP_ORDER))


def write_sheet(sheet: np.ndarray, path: str | Path) -> None:
    try:
        Path(path).write_bytes(encode_png(sheet))
    except OSError as e:
        raise IoError(f"cannot write sheet {path}: {e}") from e
