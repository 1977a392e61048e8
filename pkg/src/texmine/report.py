"""Summary statistics over a run manifest."""

from __future__ import annotations

import json

SIZE_BUCKET_PX = 100


def stats(manifest: dict) -> dict:
    """Counts, crop-size histogram, per-image yield, distance distribution.

    The size histogram buckets crop width in 100 px steps; bucket totals
    always sum to the texture count.
    """
    textures = manifest.get("textures", {})
    sizes = [t["w"] for t in textures.values()]
    dists = [t["max_pair_distance"] for t in textures.values()]
    hist: dict[str, int] = {}
    for s in sizes:
        lo = (s // SIZE_BUCKET_PX) * SIZE_BUCKET_PX
        key = f"{lo}-{lo + SIZE_BUCKET_PX - 1}"
        hist[key] = hist.get(key, 0) + 1
    per_image = {img["source"]: len(img["textures"]) for img in manifest.get("images", [])}
    dist_summary = {"min": 0.0, "max": 0.0, "mean": 0.0}
    if dists:
        dist_summary = {
            "min": min(dists),
            "max": max(dists),
            "mean": sum(dists) / len(dists),
        }
    return {
        "counts": dict(manifest.get("counts", {})),
        "crop_size_histogram": dict(sorted(hist.items(), key=lambda kv: int(kv[0].split("-")[0]))),
        "per_image_yield": per_image,
        "max_pair_distance": dist_summary,
        "size_bounds": {"min": min(sizes) if sizes else 0, "max": max(sizes) if sizes else 0},
    }


def stats_text(summary: dict) -> str:
    lines = ["texmine run summary", "-------------------"]
    for k, v in sorted(summary["counts"].items()):
        lines.append(f"{k:>16}: {v}")
    lines.append("")
    lines.append("crop sizes (px):")
    for bucket, n in summary["crop_size_histogram"].items():
        lines.append(f"  {bucket:>10}: {'#' * min(n, 60)} {n}")
    d = summary["max_pair_distance"]
    lines.append("")
    lines.append(
        f"max pair distance: min {d['min']:.4f}  mean {d['mean']:.4f}  max {d['max']:.4f}"
    )
    nonzero = sum(1 for v in summary["per_image_yield"].values() if v)
    lines.append(f"images with crops: {nonzero}/{len(summary['per_image_yield'])}")
    return "\n".join(lines) + "\n"


def stats_json(summary: dict) -> str:
    return json.dumps(summary, sort_keys=True, indent=2) + "\n"
