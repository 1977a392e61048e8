"""Pipeline configuration: TOML round trip and stable hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:
    import tomli as tomllib  # type: ignore[no-redef]

from texmine.detect import DetectParams
from texmine.errors import IoError
from texmine.grid import GridParams


@dataclass
class PipelineConfig:
    """Everything a batch run needs; serializes to a flat TOML file."""

    input_dir: Path = Path(".")
    output_dir: Path = Path("texmine_out")
    seed: int = 0
    resize_long_edge: int = 1600
    generate_pbr: bool = True
    mixes_per_material: int = 0
    jobs: int = 0  # 0 = one worker per CPU
    grid: GridParams = field(default_factory=GridParams)
    detect: DetectParams = field(default_factory=DetectParams)

    def __post_init__(self):
        self.input_dir = Path(self.input_dir)
        self.output_dir = Path(self.output_dir)
        if self.resize_long_edge < 1:
            raise ValueError(f"resize_long_edge must be >= 1, got {self.resize_long_edge}")
        if self.mixes_per_material < 0:
            raise ValueError("mixes_per_material must be >= 0")
        if self.jobs < 0:
            raise ValueError("jobs must be >= 0")

    def to_dict(self) -> dict:
        return {
            "input_dir": str(self.input_dir),
            "output_dir": str(self.output_dir),
            "seed": self.seed,
            "resize_long_edge": self.resize_long_edge,
            "generate_pbr": self.generate_pbr,
            "mixes_per_material": self.mixes_per_material,
            "jobs": self.jobs,
            "grid": {"cell_px": self.grid.cell_px, "bins": self.grid.bins},
            "detect": {
                "threshold": self.detect.threshold,
                "min_cells": self.detect.min_cells,
                "max_cells": self.detect.max_cells,
                "flat_std": self.detect.flat_std,
                "overlap_iou": self.detect.overlap_iou,
                "min_crop_px": self.detect.min_crop_px,
                "max_crop_px": self.detect.max_crop_px,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {
            "input_dir", "output_dir", "seed", "resize_long_edge",
            "generate_pbr", "mixes_per_material", "jobs", "grid", "detect",
        }
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict = {k: d[k] for k in known - {"grid", "detect"} if k in d}
        if "grid" in d:
            kwargs["grid"] = GridParams(**d["grid"])
        if "detect" in d:
            kwargs["detect"] = DetectParams(**d["detect"])
        return cls(**kwargs)

    def behavior_dict(self) -> dict:
        """Config fields that affect outputs.

        Paths and worker count are run environment, not behavior: results
        must be identical across output locations and jobs settings.
        """
        d = self.to_dict()
        for k in ("input_dir", "output_dir", "jobs"):
            d.pop(k)
        return d

    def config_hash(self) -> str:
        """12-hex digest over behavior_dict; recorded in the manifest."""
        blob = json.dumps(self.behavior_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def load_config(path: str | Path) -> PipelineConfig:
    """Parse a TOML config file.

    Raises:
        IoError: the file cannot be read.
        ValueError: the contents do not form a valid configuration.
    """
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as e:
        raise IoError(f"cannot read config {p}: {e}") from e
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as e:
        raise ValueError(f"invalid TOML in {p}: {e}") from e
    return PipelineConfig.from_dict(data)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    return json.dumps(str(v))  # JSON string escaping is valid TOML


def to_toml(cfg: PipelineConfig) -> str:
    """Render a config as TOML text that load_config parses back equal."""
    d = cfg.to_dict()
    lines = []
    for k in ("input_dir", "output_dir", "seed", "resize_long_edge",
              "generate_pbr", "mixes_per_material", "jobs"):
        lines.append(f"{k} = {_toml_value(d[k])}")
    for section in ("grid", "detect"):
        lines.append("")
        lines.append(f"[{section}]")
        for k, v in d[section].items():
            lines.append(f"{k} = {_toml_value(v)}")
    return "\n".join(lines) + "\n"


def save_config(cfg: PipelineConfig, path: str | Path) -> None:
    try:
        Path(path).write_text(to_toml(cfg), encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot write config {path}: {e}") from e
