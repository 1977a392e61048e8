"""HTTP tuning service: interactive detection preview over a corpus.

Stateless between requests apart from caches keyed by image path and
parameters; every endpoint recomputes from its own request body, so the
region list for given parameters is identical to a CLI run with the same
values (both go through the same extract path).
"""

from __future__ import annotations

import base64
import hashlib
import socket
import time
from functools import lru_cache
from pathlib import Path

import cv2
import numpy as np
from fastapi import Depends, FastAPI, HTTPException
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse, Response
from pydantic import BaseModel, Field

from texmine.config import PipelineConfig, to_toml
from texmine.detect import DetectParams, TextureCrop, extract_crops, find_uniform_regions, suppress_overlaps
from texmine.errors import GridTooSmall, ImageTooSmall, InputDirMissing, PortInUse, TexmineError
from texmine.grid import GridParams, GridStats, build_grid_stats
from texmine.pbr import generate_material
from texmine.pipeline import IMAGE_SUFFIXES
from texmine.raster import Raster, compute_features, decode_to_raster, encode_png, resize_longest_edge

PREVIEW_MAP_ORDER = ("albedo", "normal", "roughness", "metallic", "height", "transmission")


class ParamSet(BaseModel):
    """The tunable knobs exposed to the UI; defaults mirror the pipeline."""

    cell_px: int = Field(40, ge=8, le=256)
    bins: int = Field(32, ge=2, le=256)
    threshold: float = Field(0.10, ge=0.0, lt=1.0)
    min_cells: int = Field(6, ge=2, le=64)
    max_cells: int = Field(24, ge=2, le=64)
    flat_std: float = Field(0.02, ge=0.0, le=1.0)
    overlap_iou: float = Field(0.30, ge=0.0, le=1.0)
    resize: int = Field(1600, ge=64, le=8192)
    min_crop_px: int = Field(240, ge=1)
    max_crop_px: int = Field(1000, ge=1)

    def grid_params(self) -> GridParams:
        return GridParams(cell_px=self.cell_px, bins=self.bins)

    def detect_params(self) -> DetectParams:
        return DetectParams(
            threshold=self.threshold,
            min_cells=self.min_cells,
            max_cells=self.max_cells,
            flat_std=self.flat_std,
            overlap_iou=self.overlap_iou,
            min_crop_px=self.min_crop_px,
            max_crop_px=self.max_crop_px,
        )


class DetectRequest(ParamSet):
    image_id: str


class PreviewRequest(DetectRequest):
    region_index: int = Field(ge=0)
    seed: int = 0
    preview_px: int = Field(256, ge=0, le=2048)  # 0 = full resolution


class ExportRequest(ParamSet):
    seed: int = 0
    input_dir: str = "."
    output_dir: str = "texmine_out"
    generate_pbr: bool = True
    mixes_per_material: int = Field(0, ge=0)
    jobs: int = Field(0, ge=0)


PARAM_SCHEMA = {
    "cell_px": {"min": 8, "max": 256, "step": 4, "default": 40},
    "bins": {"min": 2, "max": 256, "step": 1, "default": 32},
    "threshold": {"min": 0.0, "max": 0.5, "step": 0.005, "default": 0.10},
    "min_cells": {"min": 2, "max": 64, "step": 1, "default": 6},
    "max_cells": {"min": 2, "max": 64, "step": 1, "default": 24},
    "flat_std": {"min": 0.0, "max": 0.2, "step": 0.002, "default": 0.02},
    "overlap_iou": {"min": 0.0, "max": 1.0, "step": 0.05, "default": 0.30},
    "resize": {"min": 256, "max": 4096, "step": 64, "default": 1600},
    "min_crop_px": {"min": 32, "max": 2000, "step": 8, "default": 240},
    "max_crop_px": {"min": 32, "max": 4000, "step": 8, "default": 1000},
}


def _image_id(rel: str) -> str:
    return hashlib.sha256(rel.encode("utf-8")).hexdigest()[:12]


@lru_cache(maxsize=16)
def _cached_raster(root: str, rel: str, resize: int) -> Raster:
    raw = (Path(root) / rel).read_bytes()
    return resize_longest_edge(decode_to_raster(raw), resize)


@lru_cache(maxsize=16)
def _cached_grid(root: str, rel: str, resize: int, cell_px: int, bins: int) -> GridStats:
    raster = _cached_raster(root, rel, resize)
    feats = compute_features(raster)
    return build_grid_stats(feats, GridParams(cell_px=cell_px, bins=bins))


def create_app(input_dir: str | Path, ui_dir: str | Path | None = None) -> FastAPI:
    """Build the tuning app serving images found under input_dir."""
    root = Path(input_dir).resolve()
    if not root.is_dir():
        raise InputDirMissing(f"served directory {root} does not exist")
    app = FastAPI(title="texmine tuning service", docs_url=None, redoc_url=None)

    def listing() -> list[dict]:
        entries = []
        for p in sorted(root.rglob("*")):
            if not (p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES):
                continue
            rel = p.relative_to(root).as_posix()
            try:
                from PIL import Image

                with Image.open(p) as img:
                    w, h = img.size
            except OSError:
                continue  # undecodable files are not tunable
            entries.append({"id": _image_id(rel), "path": rel, "w": w, "h": h})
        return entries

    def resolve(image_id: str) -> str:
        for e in listing():
            if e["id"] == image_id:
                return e["path"]
        raise HTTPException(status_code=404, detail=f"unknown image_id {image_id!r}")

    def run_detect(rel: str, params: ParamSet) -> tuple[list[TextureCrop], float]:
        t0 = time.perf_counter()
        try:
            stats = _cached_grid(root.as_posix(), rel, params.resize, params.cell_px, params.bins)
            dp = params.detect_params()
            regions = suppress_overlaps(find_uniform_regions(stats, dp), dp)
            raster = _cached_raster(root.as_posix(), rel, params.resize)
            crops = extract_crops(raster, stats, regions, dp, source_id=rel)
        except (GridTooSmall, ImageTooSmall):
            crops = []  # image cannot host one window at these settings
        except TexmineError as e:
            raise HTTPException(status_code=400, detail=str(e)) from e
        return crops, (time.perf_counter() - t0) * 1000.0

    def crops_or_404(image_id: str, params: ParamSet, index: int) -> TextureCrop:
        crops, _ = run_detect(resolve(image_id), params)
        if not 0 <= index < len(crops):
            raise HTTPException(
                status_code=404,
                detail=f"region_index {index} out of range ({len(crops)} regions)",
            )
        return crops[index]

    def region_dict(c: TextureCrop) -> dict:
        return {
            "x": c.x,
            "y": c.y,
            "w": c.w,
            "h": c.h,
            "max_pair_distance": c.max_pair_distance,
        }

    def query_params(
        cell_px: int = 40,
        bins: int = 32,
        threshold: float = 0.10,
        min_cells: int = 6,
        max_cells: int = 24,
        flat_std: float = 0.02,
        overlap_iou: float = 0.30,
        resize: int = 1600,
        min_crop_px: int = 240,
        max_crop_px: int = 1000,
    ) -> ParamSet:
        return ParamSet(
            cell_px=cell_px,
            bins=bins,
            threshold=threshold,
            min_cells=min_cells,
            max_cells=max_cells,
            flat_std=flat_std,
            overlap_iou=overlap_iou,
            resize=resize,
            min_crop_px=min_crop_px,
            max_crop_px=max_crop_px,
        )

    @app.exception_handler(ValueError)
    async def _value_error(_, exc: ValueError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/api/images")
    def api_images():
        return listing()

    @app.get("/api/schema")
    def api_schema():
        return PARAM_SCHEMA

    @app.post("/api/detect")
    def api_detect(req: DetectRequest):
        crops, ms = run_detect(resolve(req.image_id), req)
        return {"regions": [region_dict(c) for c in crops], "timing_ms": ms}

    @app.get("/api/overlay/{image_id}")
    def api_overlay(image_id: str, params: ParamSet = Depends(query_params)):
        rel = resolve(image_id)
        crops, _ = run_detect(rel, params)
        raster = _cached_raster(root.as_posix(), rel, params.resize)
        canvas = np.rint(raster.data * 255.0).astype(np.uint8).copy()
        for c in crops:
            cv2.rectangle(canvas, (c.x, c.y), (c.x + c.w - 1, c.y + c.h - 1), (64, 255, 64), 2)
        return Response(content=encode_png(canvas.astype(np.float32) / 255.0), media_type="image/png")

    @app.get("/api/crop/{image_id}/{region_index}")
    def api_crop(image_id: str, region_index: int, params: ParamSet = Depends(query_params)):
        crop = crops_or_404(image_id, params, region_index)
        return Response(content=encode_png(crop.raster.data), media_type="image/png")

    @app.post("/api/preview_pbr")
    def api_preview(req: PreviewRequest):
        crop = crops_or_404(req.image_id, req, req.region_index)
        material = generate_material(crop, req.seed)
        maps = {}
        for name in PREVIEW_MAP_ORDER:
            arr = material.all_maps()[name]
            if req.preview_px and max(arr.shape[:2]) > req.preview_px:
                scale = req.preview_px / max(arr.shape[:2])
                nw = max(1, round(arr.shape[1] * scale))
                nh = max(1, round(arr.shape[0] * scale))
                arr = np.clip(cv2.resize(arr, (nw, nh), interpolation=cv2.INTER_AREA), 0.0, 1.0)
            png = encode_png(arr, bit_depth=8)
            maps[name] = "data:image/png;base64," + base64.b64encode(png).decode("ascii")
        return {
            "maps": maps,
            "material_id": material.material_id,
            "texture_id": material.texture_id,
            "normal_strength": material.normal_strength,
        }

    @app.post("/api/export_config", response_class=PlainTextResponse)
    def api_export(req: ExportRequest):
        cfg = PipelineConfig(
            input_dir=req.input_dir if req.input_dir != "." else root,
            output_dir=req.output_dir,
            seed=req.seed,
            resize_long_edge=req.resize,
            generate_pbr=req.generate_pbr,
            mixes_per_material=req.mixes_per_material,
            jobs=req.jobs,
            grid=req.grid_params(),
            detect=req.detect_params(),
        )
        return to_toml(cfg)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index():
            return (
                "<!doctype html><title>texmine</title>"
                "<h1>texmine tuning service</h1>"
                "<p>API is live. Build the frontend (see frontend/README.md) "
                "and pass --ui to serve it here.</p>"
            )

    return app


def check_port_free(host: str, port: int) -> None:
    """Raise PortInUse if we cannot bind the requested address."""
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as s:
        s.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            s.bind((host, port))
        except OSError as e:
            raise PortInUse(f"cannot bind {host}:{port}: {e}") from e


def serve_tuning(
    input_dir: str | Path,
    port: int = 8080,
    host: str = "127.0.0.1",
    ui_dir: str | Path | None = None,
) -> None:
    """Run the tuning service until interrupted."""
    import uvicorn

    check_port_free(host, port)
    app = create_app(input_dir, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
