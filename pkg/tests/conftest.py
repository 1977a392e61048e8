"""Shared synthetic-image helpers and the acceptance summary hook."""

from __future__ import annotations

import io
from pathlib import Path

import cv2
import numpy as np
import pytest
from PIL import Image

from texmine.config import PipelineConfig
from texmine.detect import DetectParams, TextureCrop, texture_id_for
from texmine.grid import GridParams
from texmine.raster import Raster


def write_rgb_png(path: Path, arr: np.ndarray) -> None:
    """Save a float [0,1] or uint8 RGB array as a PNG file."""
    a = np.asarray(arr)
    if a.dtype != np.uint8:
        a = np.rint(np.clip(a, 0.0, 1.0) * 255.0).astype(np.uint8)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(a).save(path)


def png_bytes(arr: np.ndarray) -> bytes:
    a = np.asarray(arr)
    if a.dtype != np.uint8:
        a = np.rint(np.clip(a, 0.0, 1.0) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(a).save(buf, format="PNG")
    return buf.getvalue()


def noise_field(
    rng: np.random.Generator,
    shape: tuple[int, int],
    mean,
    amp,
    blur: int = 0,
    binarize: bool = False,
) -> np.ndarray:
    """Stationary RGB noise: clipped Gaussian around a color mean.

    Blurring (odd kernel) then re-normalizing the std yields smooth fields
    with weak gradients; binarizing yields harsh two-level fields with
    strong gradients. Both stay stationary, so cell statistics agree
    across the field.
    """
    field = rng.standard_normal((*shape, 3)).astype(np.float32)
    if blur:
        field = cv2.GaussianBlur(field, (blur, blur), 0)
        field /= field.std(axis=(0, 1), keepdims=True)
    if binarize:
        field = np.sign(field).astype(np.float32)
    out = np.asarray(mean, np.float32) + np.asarray(amp, np.float32) * field
    return np.clip(out, 0.0, 1.0)


QUADRANT_STYLES = (
    {"mean": (0.70, 0.25, 0.20), "amp": 0.12},
    {"mean": (0.20, 0.60, 0.30), "amp": 0.15, "blur": 7},
    {"mean": (0.25, 0.30, 0.75), "amp": 0.10, "binarize": True},
    {"mean": (0.55, 0.55, 0.55), "amp": 0.25, "blur": 3},
)


def quadrant_mosaic(seed: int = 0, size: int = 1024) -> np.ndarray:
    """Four distinct stationary noise textures, one per quadrant."""
    rng = np.random.default_rng(seed)
    half = size // 2
    img = np.zeros((size, size, 3), np.float32)
    slots = ((0, 0), (0, 1), (1, 0), (1, 1))
    for (qy, qx), style in zip(slots, QUADRANT_STYLES):
        img[qy * half : (qy + 1) * half, qx * half : (qx + 1) * half] = noise_field(
            rng, (half, half), **style
        )
    return img


def texture_image(seed: int, h: int = 420, w: int = 420) -> np.ndarray:
    """One stationary noise field; style cycles with the seed."""
    rng = np.random.default_rng(seed)
    style = QUADRANT_STYLES[seed % len(QUADRANT_STYLES)]
    return noise_field(rng, (h, w), **style)


def synth_crop(seed: int, size: int = 48) -> TextureCrop:
    """A TextureCrop built the same way extract_crops builds one."""
    rng = np.random.default_rng(seed)
    q = rng.integers(0, 256, (size, size, 3), dtype=np.uint8)
    source = f"synthetic-{seed}.png"
    return TextureCrop(
        source_id=source,
        texture_id=texture_id_for(source, 0, 0, size, size, q),
        x=0,
        y=0,
        w=size,
        h=size,
        raster=Raster(q.astype(np.float32) / 255.0),
        max_pair_distance=0.0,
    )


def random_histograms(
    rng: np.random.Generator, n: int, channels: int = 9, bins: int = 32, sparsity: float = 0.5
) -> np.ndarray:
    """(n, channels, bins) normalized histograms with random zero support."""
    raw = rng.random((n, channels, bins))
    mask = rng.random((n, channels, bins)) < sparsity
    raw = np.where(mask, 0.0, raw)
    # guarantee at least one nonzero bin per row
    dead = raw.sum(axis=2) == 0
    raw[..., 0] = np.where(dead, 1.0, raw[..., 0])
    return raw / raw.sum(axis=2, keepdims=True)


def mini_corpus(root: Path, n: int = 3) -> list[str]:
    """Write n small noise images; returns their relative names."""
    names = []
    for i in range(n):
        name = f"img_{i:02d}.png"
        write_rgb_png(root / name, texture_image(seed=100 + i))
        names.append(name)
    return names


def relaxed_config(input_dir: Path, output_dir: Path, **over) -> PipelineConfig:
    """Config sized for the small test corpus: 420 px images, 40 px cells."""
    kwargs = dict(
        input_dir=input_dir,
        output_dir=output_dir,
        seed=7,
        generate_pbr=True,
        mixes_per_material=0,
        jobs=1,
        grid=GridParams(cell_px=40, bins=32),
        detect=DetectParams(threshold=0.16, min_cells=6, max_cells=24),
    )
    kwargs.update(over)
    return PipelineConfig(**kwargs)


@pytest.fixture(scope="session")
def mini_run(tmp_path_factory) -> dict:
    """One full corpus scan shared by pipeline, sheet, report, and CLI tests."""
    from texmine.pipeline import scan_corpus

    root = tmp_path_factory.mktemp("mini")
    corpus = root / "corpus"
    out = root / "out"
    names = mini_corpus(corpus, n=3)
    cfg = relaxed_config(corpus, out, mixes_per_material=1)
    manifest = scan_corpus(cfg)
    return {"cfg": cfg, "corpus": corpus, "out": out, "names": names, "manifest": manifest}


# ---------------------------------------------------------------------------
# acceptance summary: one pass/fail line per criterion in the terminal report

_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if report.when == "call":
        outcome = "PASS" if report.passed else "FAIL"
        _ACCEPTANCE_RESULTS.append((name, outcome))
    elif report.when == "setup" and report.skipped:
        _ACCEPTANCE_RESULTS.append((name, "SKIP"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS:
        label = name.removeprefix("test_").replace("_", " ")
        terminalreporter.write_line(f"{label}: {outcome}")
