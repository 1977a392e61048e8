// Typed client for the texmine tuning service. Every displayed number in
// the UI originates from one of these responses; nothing is recomputed
// client-side.

export type ParamName =
  | "cell_px" | "bins" | "threshold" | "min_cells" | "max_cells"
  | "flat_std" | "overlap_iou" | "resize" | "min_crop_px" | "max_crop_px";

export type ParamValues = Record<ParamName, number>;

export type ParamSpec = { min: number; max: number; step: number; default: number };
export type ParamSchema = Record<ParamName, ParamSpec>;

export type ImageEntry = { id: string; path: string; w: number; h: number };

export type Region = {
  x: number;
  y: number;
  w: number;
  h: number;
  max_pair_distance: number;
};

export type DetectResponse = { regions: Region[]; timing_ms: number };

export type PreviewResponse = {
  maps: Record<string, string>;
  material_id: string;
  texture_id: string;
  normal_strength: number;
};

export type ExportOptions = {
  seed?: number;
  output_dir?: string;
  generate_pbr?: boolean;
  mixes_per_material?: number;
  jobs?: number;
};

export type Fetcher = (url: string, init?: RequestInit) => Promise<Response>;

async function readError(resp: Response): Promise<string> {
  try {
    const body = await resp.json();
    if (body && typeof body.detail === "string") return body.detail;
  } catch {
    // non-JSON error body, fall through to the status line
  }
  return `${resp.status} ${resp.statusText}`;
}

export class TexmineApi {
  private fetcher: Fetcher;
  private base: string;

  constructor(fetcher?: Fetcher, base = "") {
    this.fetcher = fetcher ?? ((url, init) => fetch(url, init));
    this.base = base;
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetcher(this.base + path);
    if (!resp.ok) throw new Error(await readError(resp));
    return resp.json() as Promise<T>;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetcher(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw new Error(await readError(resp));
    return resp.json() as Promise<T>;
  }

  listImages(): Promise<ImageEntry[]> {
    return this.getJson("/api/images");
  }

  schema(): Promise<ParamSchema> {
    return this.getJson("/api/schema");
  }

  detect(imageId: string, params: ParamValues): Promise<DetectResponse> {
    return this.postJson("/api/detect", { image_id: imageId, ...params });
  }

  previewPbr(
    imageId: string,
    params: ParamValues,
    regionIndex: number,
    seed: number,
  ): Promise<PreviewResponse> {
    return this.postJson("/api/preview_pbr", {
      image_id: imageId,
      region_index: regionIndex,
      seed,
      ...params,
    });
  }

  // The TOML body is the server's own export; the UI only saves it.
  async exportConfig(params: ParamValues, options: ExportOptions = {}): Promise<string> {
    const resp = await this.fetcher(this.base + "/api/export_config", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ ...params, ...options }),
    });
    if (!resp.ok) throw new Error(await readError(resp));
    return resp.text();
  }

  cropUrl(imageId: string, regionIndex: number, params: ParamValues): string {
    return `${this.base}/api/crop/${imageId}/${regionIndex}?${query(params)}`;
  }

  overlayUrl(imageId: string, params: ParamValues): string {
    return `${this.base}/api/overlay/${imageId}?${query(params)}`;
  }
}

function query(params: ParamValues): string {
  const q = new URLSearchParams();
  for (const [k, v] of Object.entries(params)) q.set(k, String(v));
  return q.toString();
}
