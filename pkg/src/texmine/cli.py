"""Command-line interface.

Exit codes: 0 success (including zero-yield runs), 1 usage error,
2 I/O or environment error.
"""

from __future__ import annotations

import dataclasses
import sys
from pathlib import Path

import click

from texmine import __version__
from texmine.config import PipelineConfig, load_config
from texmine.detect import TextureCrop
from texmine.errors import TexmineError
from texmine.pbr import generate_material, mix_materials, sample_mix_spec
from texmine.pipeline import (
    load_manifest,
    load_material,
    manifest_material_entry,
    manifest_texture_order,
    save_manifest,
    scan_corpus,
    write_material,
)
from texmine.raster import decode_to_raster


@click.group()
@click.version_option(__version__, prog_name="texmine")
def cli():
    """Mine uniform texture crops from photos and synthesize PBR materials."""


@cli.command()
@click.option("--config", "config_path", type=click.Path(), help="TOML config file.")
@click.option("--input", "input_dir", type=click.Path(), help="Corpus directory (overrides config).")
@click.option("--out", "output_dir", type=click.Path(), help="Output directory (overrides config).")
@click.option("--seed", type=int, default=None, help="Global seed (overrides config).")
@click.option("--cell-size", type=int, default=None, help="Grid cell size in pixels.")
@click.option("--threshold", type=float, default=None, help="Max pair distance inside a window.")
@click.option("--min-cells", type=int, default=None, help="Minimum window side in cells.")
@click.option("--resize", type=int, default=None, help="Long-edge resize target in pixels.")
@click.option("--jobs", type=int, default=None, help="Worker processes (0 = auto).")
def extract(config_path, input_dir, output_dir, seed, cell_size, threshold, min_cells, resize, jobs):
    """Scan a corpus, write texture crops, materials, and manifest.json."""
    cfg = load_config(config_path) if config_path else PipelineConfig()
    if config_path is None and input_dir is None:
        raise click.UsageError("provide --config or --input")
    if input_dir is not None:
        cfg.input_dir = Path(input_dir)
    if output_dir is not None:
        cfg.output_dir = Path(output_dir)
    if seed is not None:
        cfg.seed = seed
    if resize is not None:
        cfg.resize_long_edge = resize
    if jobs is not None:
        cfg.jobs = jobs
    if cell_size is not None:
        cfg.grid = dataclasses.replace(cfg.grid, cell_px=cell_size)
    if threshold is not None:
        cfg.detect = dataclasses.replace(cfg.detect, threshold=threshold)
    if min_cells is not None:
        cfg.detect = dataclasses.replace(cfg.detect, min_cells=min_cells)
    cfg = PipelineConfig(**{f.name: getattr(cfg, f.name) for f in dataclasses.fields(cfg)})
    manifest = scan_corpus(cfg)
    c = manifest["counts"]
    click.echo(
        f"scanned {c['images']} images ({c['images_skipped']} skipped): "
        f"{c['textures']} textures, {c['materials']} materials, {c['mixes']} mixes"
    )
    click.echo(f"manifest: {cfg.output_dir / 'manifest.json'}")


def _crop_from_manifest(out_dir: Path, manifest: dict, texture_id: str) -> TextureCrop:
    entry = manifest["textures"][texture_id]
    raster = decode_to_raster((out_dir / entry["file"]).read_bytes())
    return TextureCrop(
        source_id=entry["source"],
        texture_id=texture_id,
        x=entry["x"],
        y=entry["y"],
        w=entry["w"],
        h=entry["h"],
        raster=raster,
        max_pair_distance=entry["max_pair_distance"],
    )


@cli.command()
@click.option("--texture", "texture_id", help="Texture id to synthesize for.")
@click.option("--all", "do_all", is_flag=True, help="Synthesize for every texture.")
@click.option("--seed", type=int, default=0, show_default=True, help="Global seed.")
@click.option("--dir", "run_dir", type=click.Path(), default="texmine_out", show_default=True,
              help="Pipeline output directory.")
def material(texture_id, do_all, seed, run_dir):
    """Generate material map sets for already-extracted textures."""
    if bool(texture_id) == do_all:
        raise click.UsageError("provide exactly one of --texture ID or --all")
    out_dir = Path(run_dir)
    manifest = load_manifest(out_dir)
    if do_all:
        targets = manifest_texture_order(manifest)
    else:
        if texture_id not in manifest["textures"]:
            raise click.UsageError(f"texture {texture_id!r} not in manifest")
        targets = [texture_id]
    for tid in targets:
        crop = _crop_from_manifest(out_dir, manifest, tid)
        m = generate_material(crop, seed)
        entry = write_material(m, out_dir / "materials")
        manifest["materials"][m.material_id] = entry
        mats = manifest["textures"][tid]["materials"]
        if m.material_id not in mats:
            mats.append(m.material_id)
        click.echo(f"{tid} -> {m.material_id}")
    manifest["counts"]["materials"] = len(manifest["materials"])
    save_manifest(manifest, out_dir)


@cli.command()
@click.option("--a", "a_id", required=True, help="First material id.")
@click.option("--b", "b_id", required=True, help="Second material id.")
@click.option("--seed", type=int, default=0, show_default=True, help="Mix-spec seed.")
@click.option("--dir", "run_dir", type=click.Path(), default="texmine_out", show_default=True,
              help="Pipeline output directory.")
def mix(a_id, b_id, seed, run_dir):
    """Blend two existing materials into a new bundle."""
    out_dir = Path(run_dir)
    manifest = load_manifest(out_dir)
    for mid in (a_id, b_id):
        if mid not in manifest["materials"]:
            raise click.UsageError(f"material {mid!r} not in manifest")
    spec = sample_mix_spec(seed)
    ma = load_material(out_dir / "materials" / a_id)
    mb = load_material(out_dir / "materials" / b_id)
    mixed = mix_materials(ma, mb, spec)
    manifest["materials"][mixed.material_id] = write_material(mixed, out_dir / "materials")
    mixes = manifest.setdefault("mixes", [])
    if mixed.material_id not in mixes:
        mixes.append(mixed.material_id)
        mixes.sort()
    manifest["counts"]["materials"] = len(manifest["materials"])
    manifest["counts"]["mixes"] = len(mixes)
    save_manifest(manifest, out_dir)
    click.echo(f"{a_id} + {b_id} -> {mixed.material_id} ({spec.mode})")


@cli.command()
@click.option("--out", "out_path", type=click.Path(), default="sheet.png", show_default=True,
              help="Output PNG path.")
@click.option("--columns", type=int, default=8, show_default=True)
@click.option("--what", type=click.Choice(["crops", "materials"]), default="crops", show_default=True)
@click.option("--dir", "run_dir", type=click.Path(), default="texmine_out", show_default=True,
              help="Pipeline output directory.")
def sheet(out_path, columns, what, run_dir):
    """Render a contact-sheet montage of crops or material maps."""
    from texmine import sheet as sheet_mod

    out_dir = Path(run_dir)
    manifest = load_manifest(out_dir)
    if what == "crops":
        img = sheet_mod.crop_sheet(manifest, out_dir, columns=columns)
    else:
        img = sheet_mod.material_sheet(manifest, out_dir)
    sheet_mod.write_sheet(img, out_path)
    click.echo(f"wrote {out_path} ({img.shape[1]}x{img.shape[0]})")


@cli.command()
@click.option("--dir", "run_dir", type=click.Path(), default="texmine_out", show_default=True,
              help="Pipeline output directory.")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of text.")
def stats(run_dir, as_json):
    """Summarize a run manifest."""
    from texmine import report

    manifest = load_manifest(Path(run_dir))
    summary = report.stats(manifest)
    click.echo(report.stats_json(summary) if as_json else report.stats_text(summary), nl=False)


@cli.command()
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--input", "input_dir", type=click.Path(), default=".", show_default=True,
              help="Directory of images to tune against.")
@click.option("--ui", "ui_dir", type=click.Path(), default=None,
              help="Built frontend directory to serve at /.")
def serve(port, host, input_dir, ui_dir):
    """Run the HTTP tuning service."""
    from texmine.server import check_port_free, serve_tuning

    # Probe the port first so a busy address fails before the banner.
    check_port_free(host, port)
    click.echo(f"serving {input_dir} on http://{host}:{port}")
    serve_tuning(input_dir, port=port, host=host, ui_dir=ui_dir)


def main(argv=None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, prog_name="texmine", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except ValueError as e:
        click.echo(f"error: {e}", err=True)
        return 1
    except TexmineError as e:
        click.echo(f"error: {e}", err=True)
        return 2
    except OSError as e:
        click.echo(f"error: {e}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
