"""Randomized PBR material synthesis from texture crops.

Every material is a pure function of (crop pixels, texture id, seed): a
generator derived from the pair drives all recipe choices in a fixed
order, so regenerating with the same inputs reproduces the maps bit for
bit. Crops are 8-bit quantized at extraction, which makes the saved crop
PNG a sufficient input for exact regeneration.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import cv2
import numpy as np

from texmine.detect import TextureCrop
from texmine.raster import hue_rotate, rgb_to_hsv_array

SCALAR_PROPERTIES = ("roughness", "metallic", "height", "transmission")
MIX_PROPERTIES = ("albedo", "roughness", "metallic", "height", "transmission")
CHANNEL_NAMES = ("R", "G", "B", "H", "S", "V")

UNIFORM_SOURCE_P = 0.2
AUG_SLOT_P = 0.25
HUE_ROTATE_P = 0.1
MAX_CHAIN = 3
NORMAL_STRENGTH_RANGE = (0.5, 8.0)


@dataclass(frozen=True)
class SourceChannel:
    """Where a scalar map's base values come from.

    kind is one of R, G, B, H, S, V, or "uniform"; value holds the level
    for uniform sources and is None otherwise.
    """

    kind: str
    value: float | None = None

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.value is not None:
            d["value"] = self.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SourceChannel":
        return cls(kind=d["kind"], value=d.get("value"))


@dataclass(frozen=True)
class Augmentation:
    """One map-space transform; params meaning depends on kind.

    scale: (factor,); offset: (delta,); soft_threshold: (t, w);
    hard_threshold: (t,); color_ramp: (x0, x1, x2, y0, y1, y2) with xs
    ascending; invert: ().
    """

    kind: str
    params: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "Augmentation":
        return cls(kind=d["kind"], params=tuple(float(p) for p in d.get("params", ())))


@dataclass(frozen=True)
class MapRecipe:
    """Recipe for one material map: a source channel plus an augmentation chain."""

    property: str
    source: SourceChannel
    chain: tuple[Augmentation, ...] = ()
    hue_deg: float | None = None  # albedo only

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "source": self.source.to_dict(),
            "chain": [a.to_dict() for a in self.chain],
            "hue_deg": self.hue_deg,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MapRecipe":
        return cls(
            property=d["property"],
            source=SourceChannel.from_dict(d["source"]),
            chain=tuple(Augmentation.from_dict(a) for a in d.get("chain", [])),
            hue_deg=d.get("hue_deg"),
        )


@dataclass(frozen=True)
class MixSpec:
    """Blend weights for mixing two materials.

    mode "global" uses one ratio for every property; "per_property" holds
    one ratio per entry of MIX_PROPERTIES. Ratio r means (1-r)*a + r*b.
    """

    mode: str
    ratio: float | None = None
    ratios: dict[str, float] | None = None

    def __post_init__(self):
        if self.mode == "global":
            if self.ratio is None or not 0.0 <= self.ratio <= 1.0:
                raise ValueError(f"global mix needs ratio in [0, 1], got {self.ratio}")
        elif self.mode == "per_property":
            if self.ratios is None or set(self.ratios) != set(MIX_PROPERTIES):
                raise ValueError("per_property mix needs a ratio for every property")
            if any(not 0.0 <= r <= 1.0 for r in self.ratios.values()):
                raise ValueError("mix ratios must be in [0, 1]")
        else:
            raise ValueError(f"unknown mix mode {self.mode!r}")

    def ratio_for(self, prop: str) -> float:
        if self.mode == "global":
            return float(self.ratio)  # type: ignore[arg-type]
        return float(self.ratios[prop])  # type: ignore[index]

    def to_dict(self) -> dict:
        if self.mode == "global":
            return {"mode": self.mode, "ratio": self.ratio}
        return {"mode": self.mode, "ratios": dict(self.ratios)}  # type: ignore[arg-type]

    @classmethod
    def from_dict(cls, d: dict) -> "MixSpec":
        return cls(mode=d["mode"], ratio=d.get("ratio"), ratios=d.get("ratios"))


@dataclass
class PBRMaterial:
    """A full map set synthesized from one crop (or mixed from two materials)."""

    material_id: str
    texture_id: str
    seed: int | None
    albedo: np.ndarray  # (h, w, 3) float32
    roughness: np.ndarray  # (h, w) float32
    metallic: np.ndarray
    height: np.ndarray
    transmission: np.ndarray
    normal: np.ndarray  # (h, w, 3) float32, encoded (n + 1) / 2
    normal_strength: float
    recipes: dict[str, MapRecipe] = field(default_factory=dict)
    mix: dict | None = None

    def scalar_maps(self) -> dict[str, np.ndarray]:
        return {
            "roughness": self.roughness,
            "metallic": self.metallic,
            "height": self.height,
            "transmission": self.transmission,
        }

    def all_maps(self) -> dict[str, np.ndarray]:
        return {"albedo": self.albedo, "normal": self.normal, **self.scalar_maps()}


def _derive_rng(seed: int, texture_id: str) -> np.random.Generator:
    """Per-material generator: global seed and texture id hashed together."""
    digest = hashlib.sha256()
    digest.update(int(seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little"))
    digest.update(b"|")
    digest.update(texture_id.encode("utf-8"))
    derived = int.from_bytes(digest.digest()[:8], "little")
    return np.random.Generator(np.random.PCG64(derived))


def material_id_for(texture_id: str, seed: int) -> str:
    return hashlib.sha256(f"{texture_id}|{seed}".encode("utf-8")).hexdigest()[:16]


def mixed_material_id(a_id: str, b_id: str, spec: MixSpec) -> str:
    import json

    blob = json.dumps(spec.to_dict(), sort_keys=True)
    tag = hashlib.sha256(f"{a_id}|{b_id}|{blob}".encode("utf-8")).hexdigest()[:16]
    return f"mix-{tag}"


def apply_augmentation(values: np.ndarray, aug: Augmentation) -> np.ndarray:
    """Apply one transform to a scalar map; output is clamped to [0, 1]."""
    v = np.asarray(values, dtype=np.float32)
    k = aug.kind
    if k == "invert":
        out = 1.0 - v
    elif k == "scale":
        out = v * np.float32(aug.params[0])
    elif k == "offset":
        out = v + np.float32(aug.params[0])
    elif k == "soft_threshold":
        t, w = aug.params
        u = np.clip((v - np.float32(t - w)) / np.float32(2.0 * w), 0.0, 1.0)
        out = u * u * (3.0 - 2.0 * u)
    elif k == "hard_threshold":
        out = np.where(v >= np.float32(aug.params[0]), np.float32(1.0), np.float32(0.0))
    elif k == "color_ramp":
        xs = np.asarray(aug.params[:3], dtype=np.float64)
        ys = np.asarray(aug.params[3:], dtype=np.float64)
        out = np.interp(v.astype(np.float64), xs, ys).astype(np.float32)
    else:
        raise ValueError(f"unknown augmentation {k!r}")
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def realize_map(crop: TextureCrop, recipe: MapRecipe) -> np.ndarray:
    """Evaluate a scalar-map recipe against a crop; pure and deterministic."""
    rgb = crop.raster.data
    kind = recipe.source.kind
    if kind == "uniform":
        base = np.full(rgb.shape[:2], np.float32(recipe.source.value), np.float32)
    elif kind in ("R", "G", "B"):
        base = rgb[:, :, "RGB".index(kind)].copy()
    elif kind in ("H", "S", "V"):
        base = rgb_to_hsv_array(rgb)[:, :, "HSV".index(kind)].copy()
    else:
        raise ValueError(f"unknown source channel {kind!r}")
    out = base
    for aug in recipe.chain:
        out = apply_augmentation(out, aug)
    return out


def height_to_normal(height: np.ndarray, strength: float) -> np.ndarray:
    """Derive an encoded tangent-space normal map from a height map.

    Gradients are central differences with replicated edges; +x points
    along columns, +y down rows. The unnormalized normal is
    (-strength*gx, -strength*gy, 1); the unit vector n is encoded as
    (n + 1) / 2. A constant height map encodes to (0.5, 0.5, 1.0).
    """
    h = np.asarray(height, dtype=np.float64)
    hp = np.pad(h, 1, mode="edge")
    gx = (hp[1:-1, 2:] - hp[1:-1, :-2]) * 0.5
    gy = (hp[2:, 1:-1] - hp[:-2, 1:-1]) * 0.5
    nx = -strength * gx
    ny = -strength * gy
    norm = np.sqrt(nx * nx + ny * ny + 1.0)
    n = np.stack([nx / norm, ny / norm, 1.0 / norm], axis=-1)
    return ((n + 1.0) * 0.5).astype(np.float32)


def _sample_augmentations(rng: np.random.Generator) -> tuple[Augmentation, ...]:
    """Draw the chain slots in fixed order; each fires independently.

    Slots: invert, scale, offset, then one of soft/hard threshold or color
    ramp. If all four fire the final slot is dropped to respect MAX_CHAIN.
    """
    chain: list[Augmentation] = []
    if rng.random() < AUG_SLOT_P:
        chain.append(Augmentation("invert"))
    if rng.random() < AUG_SLOT_P:
        chain.append(Augmentation("scale", (float(rng.uniform(0.25, 2.5)),)))
    if rng.random() < AUG_SLOT_P:
        chain.append(Augmentation("offset", (float(rng.uniform(-0.3, 0.3)),)))
    if rng.random() < AUG_SLOT_P:
        pick = int(rng.integers(0, 3))
        if pick == 0:
            t = float(rng.uniform(0.2, 0.8))
            w = float(rng.uniform(0.05, 0.2))
            chain.append(Augmentation("soft_threshold", (t, w)))
        elif pick == 1:
            chain.append(Augmentation("hard_threshold", (float(rng.uniform(0.2, 0.8)),)))
        else:
            xs = np.sort(rng.random(3))
            ys = rng.random(3)
            chain.append(Augmentation("color_ramp", tuple(map(float, (*xs, *ys)))))
    if len(chain) > MAX_CHAIN:
        chain = chain[:MAX_CHAIN]
    return tuple(chain)


def sample_recipes(rng: np.random.Generator) -> dict[str, MapRecipe]:
    """Draw the full recipe set in fixed property order.

    Albedo first (hue-rotation decision), then each scalar property: a
    source channel (uniform with probability 0.2, else one of the six
    color/HSV channels) and its augmentation chain.
    """
    recipes: dict[str, MapRecipe] = {}
    hue_deg = None
    if rng.random() < HUE_ROTATE_P:
        hue_deg = float(rng.uniform(0.0, 360.0))
    recipes["albedo"] = MapRecipe(
        property="albedo", source=SourceChannel("rgb"), chain=(), hue_deg=hue_deg
    )
    for prop in SCALAR_PROPERTIES:
        if rng.random() < UNIFORM_SOURCE_P:
            src = SourceChannel("uniform", float(rng.random()))
        else:
            src = SourceChannel(CHANNEL_NAMES[int(rng.integers(0, len(CHANNEL_NAMES)))])
        recipes[prop] = MapRecipe(property=prop, source=src, chain=_sample_augmentations(rng))
    return recipes


def generate_material(crop: TextureCrop, seed: int) -> PBRMaterial:
    """Synthesize a full PBR map set for a crop under a global seed."""
    rng = _derive_rng(seed, crop.texture_id)
    recipes = sample_recipes(rng)
    strength = float(rng.uniform(*NORMAL_STRENGTH_RANGE))

    hue = recipes["albedo"].hue_deg
    albedo = crop.raster.data.copy() if hue is None else hue_rotate(crop.raster.data, hue)
    scalars = {p: realize_map(crop, recipes[p]) for p in SCALAR_PROPERTIES}
    normal = height_to_normal(scalars["height"], strength)
    return PBRMaterial(
        material_id=material_id_for(crop.texture_id, seed),
        texture_id=crop.texture_id,
        seed=seed,
        albedo=albedo,
        roughness=scalars["roughness"],
        metallic=scalars["metallic"],
        height=scalars["height"],
        transmission=scalars["transmission"],
        normal=normal,
        normal_strength=strength,
        recipes=recipes,
    )


def sample_mix_spec(seed: int) -> MixSpec:
    """Draw a mix spec: per-property ratios with probability 0.5, else global."""
    rng = np.random.Generator(np.random.PCG64(seed & 0xFFFFFFFFFFFFFFFF))
    if rng.random() < 0.5:
        ratios = {p: float(rng.random()) for p in MIX_PROPERTIES}
        return MixSpec(mode="per_property", ratios=ratios)
    return MixSpec(mode="global", ratio=float(rng.random()))


def _resample_like(src: np.ndarray, like: np.ndarray) -> np.ndarray:
    if src.shape[:2] == like.shape[:2]:
        return src
    out = cv2.resize(src, (like.shape[1], like.shape[0]), interpolation=cv2.INTER_LINEAR)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def mix_materials(a: PBRMaterial, b: PBRMaterial, spec: MixSpec) -> PBRMaterial:
    """Blend two materials property by property.

    b's maps are bilinearly resampled to a's dimensions when they differ.
    Each property p becomes (1-r)*a + r*b with r = spec.ratio_for(p); the
    normal map is re-derived from the blended height with a's strength,
    so ratio 0 reproduces a exactly and ratio 1 reproduces (resampled) b.
    """

    def blend(prop: str, ma: np.ndarray, mb: np.ndarray) -> np.ndarray:
        r = np.float32(spec.ratio_for(prop))
        mb = _resample_like(mb, ma)
        return (np.float32(1.0) - r) * ma + r * mb

    albedo = blend("albedo", a.albedo, b.albedo)
    rough = blend("roughness", a.roughness, b.roughness)
    metal = blend("metallic", a.metallic, b.metallic)
    height = blend("height", a.height, b.height)
    trans = blend("transmission", a.transmission, b.transmission)
    normal = height_to_normal(height, a.normal_strength)
    return PBRMaterial(
        material_id=mixed_material_id(a.material_id, b.material_id, spec),
        texture_id=a.texture_id,
        seed=None,
        albedo=albedo,
        roughness=rough,
        metallic=metal,
        height=height,
        transmission=trans,
        normal=normal,
        normal_strength=a.normal_strength,
        recipes={},
        mix={"a": a.material_id, "b": b.material_id, **spec.to_dict()},
    )
