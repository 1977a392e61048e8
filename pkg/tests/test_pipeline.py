"""Corpus scan: file layout, manifest integrity, determinism, tolerance."""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from texmine.errors import (
    InputDirMissing,
    IoError,
    ManifestInvalid,
    OutputNotWritable,
)
from texmine.pbr import generate_material, mixed_material_id, sample_mix_spec
from texmine.pipeline import (
    MAP_FILES,
    list_corpus_images,
    load_manifest,
    load_material,
    manifest_json,
    manifest_material_order,
    manifest_texture_order,
    process_image,
    save_manifest,
    scan_corpus,
    write_material,
)

from conftest import mini_corpus, relaxed_config, synth_crop, texture_image, write_rgb_png


# ---------------------------------------------------------------------------
# listing


def test_list_corpus_images_sorted_recursive(tmp_path: Path):
    write_rgb_png(tmp_path / "b.png", texture_image(0, h=48, w=48))
    write_rgb_png(tmp_path / "sub" / "a.jpg", texture_image(1, h=48, w=48))
    (tmp_path / "notes.txt").write_text("not an image")
    (tmp_path / "raw.tiff").write_bytes(b"II*\x00")
    rels = list_corpus_images(tmp_path)
    assert rels == ["b.png", "sub/a.jpg"]


def test_list_corpus_images_missing_dir(tmp_path: Path):
    with pytest.raises(InputDirMissing):
        list_corpus_images(tmp_path / "nope")


# ---------------------------------------------------------------------------
# material bundle io


def test_write_material_layout_and_reload(tmp_path: Path):
    m = generate_material(synth_crop(0, size=40), 5)
    entry = write_material(m, tmp_path)
    mdir = tmp_path / m.material_id
    for fname in MAP_FILES.values():
        assert (mdir / fname).is_file()
    assert (mdir / "material.json").is_file()
    assert entry["material_id"] == m.material_id
    assert entry["maps"]["height"] == f"materials/{m.material_id}/height.png"

    with Image.open(mdir / "height.png") as img:
        assert img.mode in ("I", "I;16")  # 16-bit height map
    with Image.open(mdir / "roughness.png") as img:
        assert img.mode == "L"
    with Image.open(mdir / "albedo.png") as img:
        assert img.mode == "RGB"

    back = load_material(mdir)
    assert back.material_id == m.material_id
    assert back.recipes == m.recipes
    assert back.normal_strength == m.normal_strength
    # stored maps are quantized: 8-bit for most, 16-bit for height
    assert np.abs(back.roughness - m.roughness).max() <= 0.5 / 255.0 + 1e-7
    assert np.abs(back.height - m.height).max() <= 0.5 / 65535.0 + 1e-7
    assert np.abs(back.albedo - m.albedo).max() <= 0.5 / 255.0 + 1e-7


def test_material_json_content(tmp_path: Path):
    m = generate_material(synth_crop(1, size=40), 9)
    write_material(m, tmp_path)
    meta = json.loads((tmp_path / m.material_id / "material.json").read_text())
    assert meta["material_id"] == m.material_id
    assert meta["texture_id"] == m.texture_id
    assert meta["seed"] == 9
    assert set(meta["recipes"]) == {"albedo", "roughness", "metallic", "height", "transmission"}
    assert meta["mix"] is None


def test_load_material_bad_bundle(tmp_path: Path):
    with pytest.raises(IoError):
        load_material(tmp_path / "missing")
    bundle = tmp_path / "broken"
    bundle.mkdir()
    (bundle / "material.json").write_text("{not json")
    with pytest.raises(ManifestInvalid):
        load_material(bundle)
    (bundle / "material.json").write_text('{"material_id": "x"}')
    with pytest.raises(ManifestInvalid):
        load_material(bundle)


# ---------------------------------------------------------------------------
# per-image processing


def test_process_image_yields_textures(tmp_path: Path):
    corpus = tmp_path / "in"
    out = tmp_path / "out"
    write_rgb_png(corpus / "noise.png", texture_image(0))
    (out / "textures").mkdir(parents=True)
    cfg = relaxed_config(corpus, out)
    res = process_image(corpus, "noise.png", out, cfg)
    assert res["status"] == "ok"
    assert res["textures"]
    assert (res["width"], res["height"]) == (420, 420)
    for te in res["texture_entries"]:
        assert (out / te["file"]).is_file()
        assert te["w"] == te["h"] == te["side_cells"] * te["cell_px"]
    assert len(res["material_entries"]) == len(res["textures"])


def test_process_image_small_image_is_zero_yield(tmp_path: Path):
    corpus = tmp_path / "in"
    out = tmp_path / "out"
    write_rgb_png(corpus / "small.png", texture_image(1, h=100, w=100))
    write_rgb_png(corpus / "tiny.png", texture_image(2, h=20, w=20))
    (out / "textures").mkdir(parents=True)
    cfg = relaxed_config(corpus, out)
    for name in ("small.png", "tiny.png"):
        res = process_image(corpus, name, out, cfg)
        assert res["status"] == "ok"  # legitimately no window fits
        assert res["textures"] == []


def test_process_image_corrupt_file_skipped(tmp_path: Path):
    corpus = tmp_path / "in"
    out = tmp_path / "out"
    corpus.mkdir()
    (corpus / "broken.png").write_bytes(b"\x89PNG\r\n\x1a\n" + b"\x00" * 32)
    (out / "textures").mkdir(parents=True)
    res = process_image(corpus, "broken.png", out, relaxed_config(corpus, out))
    assert res["status"] == "skipped"
    assert "reason" in res
    assert not re.search(r"0x[0-9a-fA-F]{4,}", res["reason"])  # no heap addresses


# ---------------------------------------------------------------------------
# full scans (shared run)


def test_scan_writes_manifest_and_counts(mini_run):
    manifest = mini_run["manifest"]
    out = mini_run["out"]
    assert (out / "manifest.json").is_file()
    assert manifest == load_manifest(out)
    c = manifest["counts"]
    assert c["images"] == 3 and c["images_ok"] == 3 and c["images_skipped"] == 0
    assert c["textures"] == len(manifest["textures"]) > 0
    assert c["materials"] == len(manifest["materials"]) > c["mixes"] > 0
    assert c["mixes"] == len(manifest["mixes"])


def test_scan_manifest_config_snapshot(mini_run):
    manifest = mini_run["manifest"]
    cfg = mini_run["cfg"]
    assert manifest["config"] == cfg.behavior_dict()
    assert manifest["config_hash"] == cfg.config_hash()
    assert "input_dir" not in manifest["config"]


def test_scan_completeness_disk_vs_manifest(mini_run):
    manifest = mini_run["manifest"]
    out = mini_run["out"]
    referenced = {"manifest.json"}
    for tid, te in manifest["textures"].items():
        referenced.add(te["file"])
        assert te["texture_id"] == tid
    for mid, me in manifest["materials"].items():
        assert me["material_id"] == mid
        referenced.update(me["maps"].values())
        referenced.add(f"{me['dir']}/material.json")
    on_disk = {p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file()}
    assert on_disk == referenced


def test_scan_texture_geometry_and_source(mini_run):
    manifest = mini_run["manifest"]
    names = set(mini_run["names"])
    cfg = mini_run["cfg"]
    for te in manifest["textures"].values():
        assert te["source"] in names
        assert cfg.detect.min_crop_px <= te["w"] <= cfg.detect.max_crop_px
        assert te["x"] >= 0 and te["y"] >= 0
        assert te["x"] + te["w"] <= 420 and te["y"] + te["h"] <= 420
        assert 0.0 <= te["max_pair_distance"] <= cfg.detect.threshold


def test_scan_materials_reference_existing_textures(mini_run):
    manifest = mini_run["manifest"]
    for mid in manifest["mixes"]:
        assert manifest["materials"][mid]["mix"] is not None
    for mid, me in manifest["materials"].items():
        if me["mix"] is None:
            assert me["texture_id"] in manifest["textures"]
            assert mid in manifest["textures"][me["texture_id"]]["materials"]
        else:
            assert me["mix"]["a"] in manifest["materials"]
            assert me["mix"]["b"] in manifest["materials"]


def test_scan_mix_ids_deterministic(mini_run):
    manifest = mini_run["manifest"]
    for mid in manifest["mixes"]:
        me = manifest["materials"][mid]
        spec_dict = {k: v for k, v in me["mix"].items() if k not in ("a", "b")}
        from texmine.pbr import MixSpec

        want = mixed_material_id(me["mix"]["a"], me["mix"]["b"], MixSpec.from_dict(spec_dict))
        assert mid == want


def test_scan_ordering_helpers(mini_run):
    manifest = mini_run["manifest"]
    tex_order = manifest_texture_order(manifest)
    assert sorted(tex_order) == sorted(manifest["textures"])
    mat_order = manifest_material_order(manifest)
    assert sorted(mat_order) == sorted(manifest["materials"])
    assert mat_order[-len(manifest["mixes"]):] == manifest["mixes"]


def test_scan_crops_decode_to_expected_rect(mini_run):
    manifest = mini_run["manifest"]
    out = mini_run["out"]
    corpus = mini_run["corpus"]
    te = next(iter(manifest["textures"].values()))
    with Image.open(out / te["file"]) as crop_img:
        crop = np.asarray(crop_img.convert("RGB"))
    with Image.open(corpus / te["source"]) as src_img:
        src = np.asarray(src_img.convert("RGB"))
    rect = src[te["y"] : te["y"] + te["h"], te["x"] : te["x"] + te["w"]]
    assert np.array_equal(crop, rect)  # no resize at this image size


def test_scan_empty_corpus_succeeds(tmp_path: Path):
    corpus = tmp_path / "empty"
    corpus.mkdir()
    cfg = relaxed_config(corpus, tmp_path / "out")
    manifest = scan_corpus(cfg)
    assert manifest["counts"] == {
        "images": 0, "images_ok": 0, "images_skipped": 0,
        "textures": 0, "materials": 0, "mixes": 0,
    }
    assert (tmp_path / "out" / "manifest.json").is_file()


def test_scan_corrupt_file_does_not_abort(tmp_path: Path):
    corpus = tmp_path / "in"
    mini_corpus(corpus, n=1)
    (corpus / "bad.png").write_bytes(b"\x89PNG\r\n\x1a\n" + b"junk")
    manifest = scan_corpus(relaxed_config(corpus, tmp_path / "out"))
    assert manifest["counts"]["images"] == 2
    assert manifest["counts"]["images_skipped"] == 1
    statuses = {img["source"]: img["status"] for img in manifest["images"]}
    assert statuses["bad.png"] == "skipped"
    assert statuses["img_00.png"] == "ok"


def test_scan_missing_input_dir(tmp_path: Path):
    cfg = relaxed_config(tmp_path / "absent", tmp_path / "out")
    with pytest.raises(InputDirMissing):
        scan_corpus(cfg)


def test_scan_output_path_is_a_file(tmp_path: Path):
    corpus = tmp_path / "in"
    corpus.mkdir()
    blocker = tmp_path / "blocked"
    blocker.write_text("a file, not a directory")
    cfg = relaxed_config(corpus, blocker)
    with pytest.raises(OutputNotWritable):
        scan_corpus(cfg)


def test_scan_deterministic_across_runs_and_workers(tmp_path: Path):
    corpus = tmp_path / "in"
    mini_corpus(corpus, n=2)
    blobs = []
    for i, jobs in enumerate((1, 1, 2)):
        out = tmp_path / f"out{i}"
        scan_corpus(relaxed_config(corpus, out, jobs=jobs, mixes_per_material=1))
        blobs.append((out / "manifest.json").read_bytes())
    assert blobs[0] == blobs[1] == blobs[2]


# ---------------------------------------------------------------------------
# manifest io


def test_manifest_json_formatting(mini_run):
    text = manifest_json(mini_run["manifest"])
    assert text.endswith("\n")
    parsed = json.loads(text)
    assert list(parsed) == sorted(parsed)  # keys are sorted
    assert str(mini_run["out"]) not in text  # no absolute paths
    assert str(mini_run["corpus"]) not in text
    assert not re.search(r"\d{4}-\d{2}-\d{2}[T ]\d{2}:", text)  # no timestamps


def test_load_manifest_validation(tmp_path: Path):
    with pytest.raises(IoError):
        load_manifest(tmp_path)
    (tmp_path / "manifest.json").write_text("{broken")
    with pytest.raises(ManifestInvalid):
        load_manifest(tmp_path)
    (tmp_path / "manifest.json").write_text('{"version": 1}')
    with pytest.raises(ManifestInvalid):
        load_manifest(tmp_path)
    (tmp_path / "manifest.json").write_text(json.dumps({
        "version": 1, "config": {}, "images": [], "textures": [],
        "materials": {}, "counts": {},
    }))
    with pytest.raises(ManifestInvalid):
        load_manifest(tmp_path)  # textures must be an object


def test_save_and_load_manifest_roundtrip(tmp_path: Path, mini_run):
    save_manifest(mini_run["manifest"], tmp_path)
    assert load_manifest(tmp_path) == json.loads(manifest_json(mini_run["manifest"]))


def test_scan_mixes_match_standalone_sampler(mini_run):
    # pipeline mixes reuse sample_mix_spec; the recorded spec must be one
    # it can produce (mode and ratio ranges)
    manifest = mini_run["manifest"]
    for mid in manifest["mixes"]:
        mix = manifest["materials"][mid]["mix"]
        assert mix["mode"] in ("global", "per_property")
        if mix["mode"] == "global":
            assert 0.0 <= mix["ratio"] <= 1.0
        else:
            assert all(0.0 <= r <= 1.0 for r in mix["ratios"].values())
    assert sample_mix_spec(3) == sample_mix_spec(3)
