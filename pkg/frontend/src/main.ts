// App wiring: build the controls from /api/schema, keep a TuningController
// as the single source of UI state, and render whatever it reports.

import { TexmineApi } from "./api.js";
import type { ImageEntry, ParamName, ParamSchema, Region } from "./api.js";
import { drawOverlay, hitTest } from "./overlay.js";
import { TuningController } from "./state.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

const MAP_ORDER = ["albedo", "normal", "roughness", "metallic", "height", "transmission"];

async function boot(): Promise<void> {
  const api = new TexmineApi();
  const errorBanner = $<HTMLDivElement>("error-banner");
  const showError = (msg: string) => {
    errorBanner.textContent = msg;
    errorBanner.hidden = false;
  };
  const clearError = () => {
    errorBanner.hidden = true;
  };

  let schema: ParamSchema;
  let images: ImageEntry[];
  try {
    [schema, images] = await Promise.all([api.schema(), api.listImages()]);
  } catch (err) {
    showError(`cannot reach the tuning service: ${err instanceof Error ? err.message : err}`);
    return;
  }

  const canvas = $<HTMLCanvasElement>("overlay-canvas");
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  const notice = $<HTMLDivElement>("region-notice");
  const statusLine = $<HTMLSpanElement>("status-line");
  const pendingDot = $<HTMLSpanElement>("pending-dot");
  const cropImg = $<HTMLImageElement>("crop-preview");
  const mapsGrid = $<HTMLDivElement>("maps-grid");

  let displayed: HTMLImageElement | null = null;

  const redraw = (regions: Region[], selected: number | null) => {
    if (!displayed) return;
    drawOverlay(ctx, displayed, canvas.width, canvas.height, regions, selected);
    notice.hidden = regions.length !== 0;
  };

  const controller = new TuningController({
    api,
    schema,
    onRegions: (regions, state) => {
      clearError();
      redraw(regions, state.selectedRegion);
      statusLine.textContent =
        `${regions.length} region${regions.length === 1 ? "" : "s"} in ` +
        `${state.timingMs.toFixed(0)} ms`;
      refreshRegionPanel();
    },
    onPending: (busy) => {
      pendingDot.hidden = !busy;
    },
    onError: showError,
    onPreview: (preview) => {
      mapsGrid.innerHTML = "";
      for (const name of MAP_ORDER) {
        const url = preview.maps[name];
        if (!url) continue;
        const cell = document.createElement("figure");
        const img = document.createElement("img");
        img.src = url;
        img.alt = name;
        const cap = document.createElement("figcaption");
        cap.textContent = name;
        cell.append(img, cap);
        mapsGrid.append(cell);
      }
      $<HTMLSpanElement>("material-line").textContent =
        `${preview.material_id} (strength ${preview.normal_strength.toFixed(2)})`;
    },
  });

  // --- sliders from the server schema ---

  const slidersBox = $<HTMLDivElement>("sliders");
  for (const [name, spec] of Object.entries(schema)) {
    const row = document.createElement("label");
    row.className = "slider-row";
    const title = document.createElement("span");
    title.textContent = name;
    const value = document.createElement("output");
    value.textContent = String(spec.default);
    const input = document.createElement("input");
    input.type = "range";
    input.min = String(spec.min);
    input.max = String(spec.max);
    input.step = String(spec.step);
    input.value = String(spec.default);
    input.addEventListener("input", () => {
      value.textContent = input.value;
      controller.setParam(name as ParamName, Number(input.value));
    });
    row.append(title, input, value);
    slidersBox.append(row);
  }

  // --- image list ---

  const list = $<HTMLUListElement>("image-list");
  for (const entry of images) {
    const item = document.createElement("li");
    const btn = document.createElement("button");
    btn.textContent = `${entry.path} (${entry.w}x${entry.h})`;
    btn.addEventListener("click", () => {
      for (const other of list.querySelectorAll("button")) {
        other.classList.remove("active");
      }
      btn.classList.add("active");
      loadImage(entry);
    });
    item.append(btn);
    list.append(item);
  }
  if (images.length === 0) {
    showError("the served directory contains no images");
  }

  function loadImage(entry: ImageEntry): void {
    const img = new Image();
    // the overlay endpoint returns the resized raster, which is the
    // coordinate space every region uses
    img.onload = () => {
      displayed = img;
      canvas.width = img.naturalWidth;
      canvas.height = img.naturalHeight;
      redraw(controller.state.regions, controller.state.selectedRegion);
    };
    img.src = `/api/overlay/${entry.id}?` + new URLSearchParams({
      threshold: "1", min_cells: "64", max_cells: "64",
    }).toString(); // parameter set that yields no rectangles: plain image
    controller.selectImage(entry.id);
  }

  // --- region selection ---

  canvas.addEventListener("click", (ev) => {
    const rect = canvas.getBoundingClientRect();
    const x = ((ev.clientX - rect.left) / rect.width) * canvas.width;
    const y = ((ev.clientY - rect.top) / rect.height) * canvas.height;
    const hit = hitTest(controller.state.regions, x, y);
    controller.selectRegion(hit);
    redraw(controller.state.regions, hit);
    refreshRegionPanel();
  });

  function refreshRegionPanel(): void {
    const sel = controller.state.selectedRegion;
    const imageId = controller.state.imageId;
    const panel = $<HTMLDivElement>("region-panel");
    if (sel === null || imageId === null) {
      panel.hidden = true;
      return;
    }
    panel.hidden = false;
    const region = controller.state.regions[sel];
    $<HTMLSpanElement>("region-line").textContent =
      `#${sel}: ${region.w}x${region.h} at (${region.x}, ${region.y}), ` +
      `distance ${region.max_pair_distance.toFixed(4)}`;
    cropImg.src = api.cropUrl(imageId, sel, controller.state.params);
    void controller.requestPreview();
  }

  $<HTMLInputElement>("seed-input").addEventListener("change", (ev) => {
    controller.setPreviewSeed(Number((ev.target as HTMLInputElement).value));
    void controller.requestPreview();
  });

  // --- export ---

  $<HTMLButtonElement>("export-btn").addEventListener("click", async () => {
    try {
      const toml = await controller.exportConfig({
        seed: controller.state.previewSeed,
      });
      const blob = new Blob([toml], { type: "application/toml" });
      const a = document.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = "texmine.toml";
      a.click();
      URL.revokeObjectURL(a.href);
    } catch (err) {
      showError(err instanceof Error ? err.message : String(err));
    }
  });
}

void boot();
