"""Batch corpus scan: decode, detect, crop, synthesize, and record.

Determinism contract: with the same input tree, config values, and seed,
the output byte stream is identical across runs and across any worker
count. Everything random derives from (seed, content hash), never from
scheduling; files are enumerated in sorted order; the manifest carries no
timestamps and is dumped with sorted keys.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path, PurePosixPath

import numpy as np
from PIL import Image

from texmine.config import PipelineConfig
from texmine.detect import TextureCrop, extract_crops, find_uniform_regions, suppress_overlaps
from texmine.errors import (
    GridTooSmall,
    ImageTooSmall,
    InputDirMissing,
    IoError,
    ManifestInvalid,
    OutputNotWritable,
    TexmineError,
)
from texmine.grid import build_grid_stats
from texmine.pbr import (
    MapRecipe,
    MixSpec,
    PBRMaterial,
    generate_material,
    mix_materials,
    mixed_material_id,
    sample_mix_spec,
)
from texmine.raster import Raster, compute_features, decode_to_raster, encode_png, resize_longest_edge

log = logging.getLogger("texmine")

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
MANIFEST_VERSION = 1
MAP_FILES = {
    "albedo": "albedo.png",
    "roughness": "roughness.png",
    "metallic": "metallic.png",
    "height": "height.png",
    "normal": "normal.png",
    "transmission": "transmission.png",
}


def _clean_reason(exc: BaseException) -> str:
    """Skip reason safe to embed in a reproducible manifest (no addresses)."""
    msg = re.sub(r"0x[0-9a-fA-F]+", "0x?", str(exc))
    msg = re.sub(r"<[^>]*>", "<...>", msg)
    return f"{type(exc).__name__}: {msg}"


def list_corpus_images(input_dir: Path) -> list[str]:
    """Relative posix paths of all PNG/JPEG files under input_dir, sorted."""
    if not input_dir.is_dir():
        raise InputDirMissing(f"input directory {input_dir} does not exist")
    rels = [
        PurePosixPath(p.relative_to(input_dir)).as_posix()
        for p in input_dir.rglob("*")
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    ]
    return sorted(rels)


def write_material(material: PBRMaterial, materials_dir: Path) -> dict:
    """Write one material bundle and return its manifest entry.

    Layout: <materials_dir>/<material_id>/ with six map PNGs (height is
    16-bit grayscale, albedo and normal 8-bit RGB, the rest 8-bit gray)
    plus material.json holding recipes, seed, and provenance.
    """
    mdir = materials_dir / material.material_id
    try:
        mdir.mkdir(parents=True, exist_ok=True)
        for name, fname in MAP_FILES.items():
            depth = 16 if name == "height" else 8
            (mdir / fname).write_bytes(encode_png(material.all_maps()[name], bit_depth=depth))
        meta = material_json_dict(material)
        (mdir / "material.json").write_text(
            json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    except OSError as e:
        raise IoError(f"cannot write material {material.material_id}: {e}") from e
    return manifest_material_entry(material)


def material_json_dict(material: PBRMaterial) -> dict:
    return {
        "material_id": material.material_id,
        "texture_id": material.texture_id,
        "seed": material.seed,
        "normal_strength": material.normal_strength,
        "recipes": {p: r.to_dict() for p, r in material.recipes.items()},
        "maps": dict(MAP_FILES),
        "mix": material.mix,
    }


def manifest_material_entry(material: PBRMaterial) -> dict:
    base = f"materials/{material.material_id}"
    return {
        "material_id": material.material_id,
        "texture_id": material.texture_id,
        "seed": material.seed,
        "normal_strength": material.normal_strength,
        "recipes": {p: r.to_dict() for p, r in material.recipes.items()},
        "dir": base,
        "maps": {name: f"{base}/{fname}" for name, fname in MAP_FILES.items()},
        "mix": material.mix,
    }


def _load_gray(path: Path) -> np.ndarray:
    img = Image.open(path)
    img.load()
    if img.mode in ("I", "I;16", "I;16L", "I;16B"):
        return (np.asarray(img, dtype=np.float32) / 65535.0).clip(0.0, 1.0)
    if img.mode != "L":
        img = img.convert("L")
    return np.asarray(img, dtype=np.float32) / 255.0


def _load_rgb(path: Path) -> np.ndarray:
    img = Image.open(path)
    img.load()
    if img.mode != "RGB":
        img = img.convert("RGB")
    return np.asarray(img, dtype=np.float32) / 255.0


def load_material(material_dir: Path) -> PBRMaterial:
    """Reconstruct a material from a written bundle (maps as stored)."""
    mdir = Path(material_dir)
    try:
        meta = json.loads((mdir / "material.json").read_text(encoding="utf-8"))
    except OSError as e:
        raise IoError(f"cannot read material bundle {mdir}: {e}") from e
    except json.JSONDecodeError as e:
        raise ManifestInvalid(f"bad material.json in {mdir}: {e}") from e
    try:
        return PBRMaterial(
            material_id=meta["material_id"],
            texture_id=meta["texture_id"],
            seed=meta["seed"],
            albedo=_load_rgb(mdir / "albedo.png"),
            roughness=_load_gray(mdir / "roughness.png"),
            metallic=_load_gray(mdir / "metallic.png"),
            height=_load_gray(mdir / "height.png"),
            transmission=_load_gray(mdir / "transmission.png"),
            normal=_load_rgb(mdir / "normal.png"),
            normal_strength=float(meta["normal_strength"]),
            recipes={p: MapRecipe.from_dict(r) for p, r in meta.get("recipes", {}).items()},
            mix=meta.get("mix"),
        )
    except (OSError, KeyError, TypeError) as e:
        raise ManifestInvalid(f"incomplete material bundle {mdir}: {e}") from e


def process_image(input_dir: Path, rel_path: str, out_dir: Path, cfg: PipelineConfig) -> dict:
    """Run the full per-image chain and write this image's assets.

    Never raises for bad image content: decode or size failures produce a
    "skipped" entry so one bad file cannot abort the corpus run.
    """
    entry: dict = {"source": rel_path, "status": "ok", "textures": []}
    materials: list[dict] = []
    textures: list[dict] = []
    try:
        raw = (input_dir / rel_path).read_bytes()
        raster = resize_longest_edge(decode_to_raster(raw), cfg.resize_long_edge)
        entry["width"], entry["height"] = raster.width, raster.height
        feats = compute_features(raster)
        stats = build_grid_stats(feats, cfg.grid)
        regions = suppress_overlaps(find_uniform_regions(stats, cfg.detect), cfg.detect)
        crops = extract_crops(raster, stats, regions, cfg.detect, source_id=rel_path)
    except (GridTooSmall, ImageTooSmall):
        # too small to host a single window: a valid zero-yield image
        crops = []
    except TexmineError as e:
        log.warning("skipping %s: %s", rel_path, e)
        return {"source": rel_path, "status": "skipped", "reason": _clean_reason(e), "textures": []}
    except OSError as e:
        log.warning("skipping %s: %s", rel_path, e)
        return {"source": rel_path, "status": "skipped", "reason": _clean_reason(e), "textures": []}

    tex_dir = out_dir / "textures"
    for crop in crops:
        try:
            (tex_dir / f"{crop.texture_id}.png").write_bytes(encode_png(crop.raster.data))
        except OSError as e:
            raise IoError(f"cannot write texture {crop.texture_id}: {e}") from e
        tex_entry = {
            "texture_id": crop.texture_id,
            "source": rel_path,
            "x": crop.x,
            "y": crop.y,
            "w": crop.w,
            "h": crop.h,
            "cell_px": stats.cell_px,
            "side_cells": crop.w // stats.cell_px,
            "max_pair_distance": crop.max_pair_distance,
            "file": f"textures/{crop.texture_id}.png",
            "materials": [],
        }
        if cfg.generate_pbr:
            material = generate_material(crop, cfg.seed)
            materials.append(write_material(material, out_dir / "materials"))
            tex_entry["materials"].append(material.material_id)
        textures.append(tex_entry)
        entry["textures"].append(crop.texture_id)
    return {**entry, "texture_entries": textures, "material_entries": materials}


def _pool_task(args) -> dict:
    input_dir, rel_path, out_dir, cfg = args
    return process_image(Path(input_dir), rel_path, Path(out_dir), cfg)


def scan_corpus(cfg: PipelineConfig) -> dict:
    """Mine the whole corpus and write assets plus manifest.json.

    Returns the manifest dict. Output is byte-identical for any jobs
    value: work items are independent and results are reassembled in
    sorted source order.
    """
    input_dir = Path(cfg.input_dir)
    rels = list_corpus_images(input_dir)
    out_dir = Path(cfg.output_dir)
    try:
        (out_dir / "textures").mkdir(parents=True, exist_ok=True)
        (out_dir / "materials").mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as e:
        raise OutputNotWritable(f"cannot write to {out_dir}: {e}") from e

    jobs = cfg.jobs
    if jobs == 0:
        import os

        jobs = os.cpu_count() or 1
    tasks = [(str(input_dir), rel, str(out_dir), cfg) for rel in rels]
    if jobs == 1 or len(tasks) <= 1:
        results = [_pool_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_pool_task, tasks, chunksize=1))

    images = []
    textures: dict[str, dict] = {}
    materials: dict[str, dict] = {}
    for res in results:  # already in sorted source order
        images.append(
            {k: res[k] for k in ("source", "status", "textures", "reason", "width", "height") if k in res}
        )
        for te in res.get("texture_entries", ()):
            textures[te["texture_id"]] = te
        for me in res.get("material_entries", ()):
            materials[me["material_id"]] = me

    mixes = _generate_mixes(cfg, out_dir, materials)
    manifest = {
        "version": MANIFEST_VERSION,
        "config": cfg.behavior_dict(),
        "config_hash": cfg.config_hash(),
        "images": images,
        "textures": textures,
        "materials": materials,
        "mixes": mixes,
        "counts": {
            "images": len(images),
            "images_ok": sum(1 for i in images if i["status"] == "ok"),
            "images_skipped": sum(1 for i in images if i["status"] == "skipped"),
            "textures": len(textures),
            "materials": len(materials),
            "mixes": len(mixes),
        },
    }
    save_manifest(manifest, out_dir)
    return manifest


def _generate_mixes(cfg: PipelineConfig, out_dir: Path, materials: dict[str, dict]) -> list[str]:
    """Blend each material with deterministically chosen partners.

    Partner choice and ratios depend only on (seed, sorted material ids),
    so mixes are reproducible regardless of how the base run was scheduled.
    """
    if cfg.mixes_per_material <= 0 or len(materials) < 2:
        return []
    ids = sorted(materials)
    cache: dict[str, PBRMaterial] = {}

    def fetch(mid: str) -> PBRMaterial:
        if mid not in cache:
            cache[mid] = load_material(out_dir / "materials" / mid)
        return cache[mid]

    mixes: list[str] = []
    for a_id in ids:
        for k in range(cfg.mixes_per_material):
            pick_seed = _hash64(f"mixpick|{cfg.seed}|{a_id}|{k}")
            rng = np.random.Generator(np.random.PCG64(pick_seed))
            others = [m for m in ids if m != a_id]
            b_id = others[int(rng.integers(0, len(others)))]
            spec = sample_mix_spec(_hash64(f"mixspec|{cfg.seed}|{a_id}|{b_id}|{k}"))
            mixed = mix_materials(fetch(a_id), fetch(b_id), spec)
            entry = write_material(mixed, out_dir / "materials")
            materials[mixed.material_id] = entry
            mixes.append(mixed.material_id)
    return sorted(mixes)


def _hash64(text: str) -> int:
    import hashlib

    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")


def manifest_json(manifest: dict) -> str:
    return json.dumps(manifest, sort_keys=True, indent=2) + "\n"


def save_manifest(manifest: dict, out_dir: Path) -> None:
    try:
        (Path(out_dir) / "manifest.json").write_text(manifest_json(manifest), encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot write manifest: {e}") from e


def load_manifest(out_dir: str | Path) -> dict:
    """Read and structurally validate manifest.json under out_dir."""
    path = Path(out_dir) / "manifest.json"
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot read manifest {path}: {e}") from e
    try:
        manifest = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ManifestInvalid(f"manifest is not valid JSON: {e}") from e
    for key in ("version", "config", "images", "textures", "materials", "counts"):
        if key not in manifest:
            raise ManifestInvalid(f"manifest missing key {key!r}")
    if not isinstance(manifest["textures"], dict) or not isinstance(manifest["materials"], dict):
        raise ManifestInvalid("manifest textures/materials must be objects")
    return manifest


def manifest_texture_order(manifest: dict) -> list[str]:
    """Texture ids in manifest order: by image, then extraction order."""
    out = []
    for img in manifest["images"]:
        out.extend(img["textures"])
    return out


def manifest_material_order(manifest: dict) -> list[str]:
    """Material ids in manifest order: per texture, then mixes."""
    out = []
    for tid in manifest_texture_order(manifest):
        out.extend(manifest["textures"][tid]["materials"])
    out.extend(manifest.get("mixes", ()))
    return out
