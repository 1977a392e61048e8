"""Float raster container plus decode, resize, color and feature transforms."""

from __future__ import annotations

import io
from dataclasses import dataclass

import cv2
import numpy as np
from PIL import Image, UnidentifiedImageError

from texmine.errors import CorruptImage, ImageTooSmall, UnsupportedFormat

# max |3x3 Sobel| response for inputs in [0,1]; used to remap gradients
SOBEL_NORM = 4.0

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_JPEG_MAGIC = b"\xff\xd8\xff"


@dataclass
class Raster:
    """Row-major float32 image, values in [0, 1], 1 or 3 channels.

    data is always (height, width, channels); constructing from a 2-d
    array adds the trailing channel axis.
    """

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data)
        if a.ndim == 2:
            a = a[:, :, None]
        if a.ndim != 3 or a.shape[2] not in (1, 3):
            raise ValueError(f"raster needs (h, w, 1|3) data, got {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("raster must have at least one pixel")
        if a.dtype != np.float32:
            a = a.astype(np.float32)
        lo, hi = float(a.min()), float(a.max())
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"raster values outside [0, 1]: [{lo}, {hi}]")
        self.data = a

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass
class FeatureStack:
    """Nine analysis planes per pixel, each in [0, 1].

    Layout: planes 0-2 are R, G, B; planes 3-5 are horizontal (x) Sobel
    responses of R, G, B remapped by (g / 4 + 1) / 2; planes 6-8 are the
    vertical (y) responses in the same channel order.
    """

    planes: np.ndarray  # (h, w, 9) float32

    @property
    def height(self) -> int:
        return self.planes.shape[0]

    @property
    def width(self) -> int:
        return self.planes.shape[1]


def decode_to_raster(data: bytes) -> Raster:
    """Decode PNG or JPEG bytes into a 3-channel Raster.

    8-bit inputs map k -> k/255; 16-bit grayscale PNG maps k -> k/65535.
    Alpha is dropped, palette and grayscale are expanded to RGB.

    Raises:
        UnsupportedFormat: not a PNG or JPEG container.
        CorruptImage: recognized container with undecodable payload.
    """
    is_png = data.startswith(_PNG_MAGIC)
    is_jpeg = data.startswith(_JPEG_MAGIC)
    if not (is_png or is_jpeg):
        raise UnsupportedFormat("input is neither PNG nor JPEG")
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as e:
        raise CorruptImage(f"undecodable image payload: {e}") from e
    if img.format not in ("PNG", "JPEG"):
        raise UnsupportedFormat(f"unsupported container {img.format!r}")

    if img.mode in ("I", "I;16", "I;16L", "I;16B"):
        arr = np.asarray(img, dtype=np.float32) / 65535.0
        np.clip(arr, 0.0, 1.0, out=arr)
        rgb = np.repeat(arr[:, :, None], 3, axis=2)
    else:
        if img.mode != "RGB":
            img = img.convert("RGB")
        rgb = np.asarray(img, dtype=np.float32) / 255.0
    return Raster(np.ascontiguousarray(rgb))


def encode_png(data: np.ndarray, bit_depth: int = 8) -> bytes:
    """Encode a float map in [0, 1] as PNG bytes.

    3-channel input becomes 8-bit RGB; single-channel input becomes 8- or
    16-bit grayscale per bit_depth. Quantization is round-to-nearest, so
    k/255 (or k/65535) values survive a decode round trip exactly.
    """
    a = np.asarray(data, dtype=np.float32)
    if a.ndim == 3 and a.shape[2] == 1:
        a = a[:, :, 0]
    if a.ndim == 3:
        if bit_depth != 8:
            raise ValueError("color output supports 8-bit depth only")
        q = np.rint(np.clip(a, 0.0, 1.0) * 255.0).astype(np.uint8)
        img = Image.fromarray(q, mode="RGB")
    elif bit_depth == 8:
        q = np.rint(np.clip(a, 0.0, 1.0) * 255.0).astype(np.uint8)
        img = Image.fromarray(q, mode="L")
    elif bit_depth == 16:
        q64 = np.rint(np.clip(a.astype(np.float64), 0.0, 1.0) * 65535.0)
        img = Image.fromarray(q64.astype(np.uint16))  # infers mode I;16
    else:
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def resize_longest_edge(r: Raster, target: int) -> Raster:
    """Bilinear downscale so the longest edge equals target; never upscales.

    The short edge is rounded to the nearest integer (minimum 1) and
    aspect ratio is preserved.
    """
    if target < 1:
        raise ValueError(f"target edge must be positive, got {target}")
    h, w = r.height, r.width
    long_edge = max(h, w)
    if long_edge <= target:
        return r
    scale = target / long_edge
    if w >= h:
        nw, nh = target, max(1, round(h * scale))
    else:
        nh, nw = target, max(1, round(w * scale))
    out = cv2.resize(r.data, (nw, nh), interpolation=cv2.INTER_LINEAR)
    if out.ndim == 2:
        out = out[:, :, None]
    np.clip(out, 0.0, 1.0, out=out)
    return Raster(out)


def rgb_to_hsv_array(rgb: np.ndarray) -> np.ndarray:
    """Vectorized RGB -> HSV on [0, 1] floats; H := 0 for achromatic pixels."""
    a = np.asarray(rgb, dtype=np.float64)
    r, g, b = a[..., 0], a[..., 1], a[..., 2]
    maxc = a.max(axis=-1)
    minc = a.min(axis=-1)
    delta = maxc - minc
    v = maxc
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(maxc > 0, delta / maxc, 0.0)
        rc = (maxc - r) / delta
        gc = (maxc - g) / delta
        bc = (maxc - b) / delta
        h = np.where(maxc == r, bc - gc, np.where(maxc == g, 2.0 + rc - bc, 4.0 + gc - rc))
        h = (h / 6.0) % 1.0
    h = np.where(delta == 0, 0.0, h)
    return np.stack([h, s, v], axis=-1).astype(np.float32)


def hsv_to_rgb_array(hsv: np.ndarray) -> np.ndarray:
    """Vectorized HSV -> RGB inverse of rgb_to_hsv_array."""
    a = np.asarray(hsv, dtype=np.float64)
    h, s, v = a[..., 0], a[..., 1], a[..., 2]
    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    sel = (i.astype(np.int64) % 6)[..., None]
    cand = np.stack(
        [
            np.stack([v, t, p], axis=-1),
            np.stack([q, v, p], axis=-1),
            np.stack([p, v, t], axis=-1),
            np.stack([p, q, v], axis=-1),
            np.stack([t, p, v], axis=-1),
            np.stack([v, p, q], axis=-1),
        ],
        axis=0,
    )
    rgb = np.take_along_axis(cand, sel[None], axis=0)[0]
    return np.clip(rgb, 0.0, 1.0).astype(np.float32)


def rgb_to_hsv(r: Raster) -> tuple[Raster, Raster, Raster]:
    """Split a 3-channel Raster into single-channel H, S, V Rasters."""
    if r.channels != 3:
        raise ValueError("rgb_to_hsv needs a 3-channel raster")
    hsv = rgb_to_hsv_array(r.data)
    return Raster(hsv[..., 0]), Raster(hsv[..., 1]), Raster(hsv[..., 2])


def hue_rotate(rgb: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate hue by the given angle, wrapping on the hue circle."""
    hsv = rgb_to_hsv_array(rgb).astype(np.float64)
    hsv[..., 0] = (hsv[..., 0] + degrees / 360.0) % 1.0
    return hsv_to_rgb_array(hsv)


def compute_features(r: Raster) -> FeatureStack:
    """Build the 9-plane feature stack: RGB plus remapped Sobel responses.

    Gradients use the 3x3 Sobel operator with replicated edges; responses
    g in [-4, 4] are remapped to (g / 4 + 1) / 2.

    Raises:
        ImageTooSmall: either edge is below the 3-pixel operator support.
    """
    if r.channels != 3:
        raise ValueError("compute_features needs a 3-channel raster")
    if r.height < 3 or r.width < 3:
        raise ImageTooSmall(
            f"need at least 3x3 pixels for gradients, got {r.width}x{r.height}"
        )
    planes = np.empty((r.height, r.width, 9), dtype=np.float32)
    planes[:, :, 0:3] = r.data
    for c in range(3):
        src = r.data[:, :, c]
        gx = cv2.Sobel(src, cv2.CV_32F, 1, 0, ksize=3, borderType=cv2.BORDER_REPLICATE)
        gy = cv2.Sobel(src, cv2.CV_32F, 0, 1, ksize=3, borderType=cv2.BORDER_REPLICATE)
        planes[:, :, 3 + c] = gx / (2.0 * SOBEL_NORM) + 0.5
        planes[:, :, 6 + c] = gy / (2.0 * SOBEL_NORM) + 0.5
    np.clip(planes, 0.0, 1.0, out=planes)
    return FeatureStack(planes)
