// Region overlay drawing and hit testing. Rectangles are drawn in image
// pixel coordinates on a canvas sized to the (possibly resized) source, so
// at 1:1 zoom they match the API response pixel for pixel.

import type { Region } from "./api.js";

export const STROKE = "#4ade80";
export const STROKE_SELECTED = "#fbbf24";

export function regionLabel(r: Region): string {
  return r.max_pair_distance.toFixed(3);
}

// index of the topmost (last drawn) region containing the point, or null
export function hitTest(regions: Region[], x: number, y: number): number | null {
  for (let i = regions.length - 1; i >= 0; i--) {
    const r = regions[i];
    if (x >= r.x && x < r.x + r.w && y >= r.y && y < r.y + r.h) return i;
  }
  return null;
}

export function drawOverlay(
  ctx: CanvasRenderingContext2D,
  image: CanvasImageSource,
  width: number,
  height: number,
  regions: Region[],
  selected: number | null,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.drawImage(image, 0, 0, width, height);
  ctx.font = "12px monospace";
  ctx.textBaseline = "top";
  for (let i = 0; i < regions.length; i++) {
    const r = regions[i];
    const color = i === selected ? STROKE_SELECTED : STROKE;
    ctx.strokeStyle = color;
    ctx.lineWidth = i === selected ? 3 : 2;
    ctx.strokeRect(r.x + 0.5, r.y + 0.5, r.w - 1, r.h - 1);
    const label = regionLabel(r);
    const pad = 2;
    const tw = ctx.measureText(label).width;
    ctx.fillStyle = "rgba(0, 0, 0, 0.65)";
    ctx.fillRect(r.x, r.y, tw + 2 * pad, 14);
    ctx.fillStyle = color;
    ctx.fillText(label, r.x + pad, r.y + pad);
  }
}
