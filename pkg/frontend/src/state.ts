// Tuning state machine. Parameter edits are debounced into detect requests,
// responses carry a sequence number, and only the response for the newest
// request is ever applied, so the region list always matches the sliders.

import type {
  DetectResponse,
  ExportOptions,
  ParamName,
  ParamSchema,
  ParamValues,
  PreviewResponse,
  Region,
} from "./api.js";

// the slice of TexmineApi the controller needs; tests substitute fakes
export type TuningApi = {
  detect(imageId: string, params: ParamValues): Promise<DetectResponse>;
  previewPbr(
    imageId: string,
    params: ParamValues,
    regionIndex: number,
    seed: number,
  ): Promise<PreviewResponse>;
  exportConfig(params: ParamValues, options?: ExportOptions): Promise<string>;
};

export type TuningState = {
  imageId: string | null;
  params: ParamValues;
  regions: Region[];
  timingMs: number;
  selectedRegion: number | null;
  previewSeed: number;
};

export type ControllerEvents = {
  onRegions?: (regions: Region[], state: TuningState) => void;
  onPreview?: (preview: PreviewResponse) => void;
  onPending?: (busy: boolean) => void;
  onError?: (message: string) => void;
};

type Scheduler = (fn: () => void, ms: number) => unknown;
type Canceler = (handle: unknown) => void;

export type ControllerDeps = ControllerEvents & {
  api: TuningApi;
  schema: ParamSchema;
  debounceMs?: number;
  schedule?: Scheduler;
  cancel?: Canceler;
};

export const MIN_DEBOUNCE_MS = 200;

export function defaultParams(schema: ParamSchema): ParamValues {
  const out = {} as ParamValues;
  for (const [name, spec] of Object.entries(schema)) {
    out[name as ParamName] = spec.default;
  }
  return out;
}

export class TuningController {
  readonly state: TuningState;

  private api: TuningApi;
  private schema: ParamSchema;
  private debounceMs: number;
  private schedule: Scheduler;
  private cancel: Canceler;
  private events: ControllerEvents;

  private timer: unknown = null;
  private detectSeq = 0; // newest issued detect request
  private previewSeq = 0; // newest issued preview request
  private inFlight = 0;

  constructor(deps: ControllerDeps) {
    this.api = deps.api;
    this.schema = deps.schema;
    // the contract is "at least 200 ms"; shorter values are rounded up
    this.debounceMs = Math.max(deps.debounceMs ?? 250, MIN_DEBOUNCE_MS);
    this.schedule = deps.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.cancel = deps.cancel ?? ((h) => clearTimeout(h as number));
    this.events = deps;
    this.state = {
      imageId: null,
      params: defaultParams(deps.schema),
      regions: [],
      timingMs: 0,
      selectedRegion: null,
      previewSeed: 0,
    };
  }

  // --- parameter edits ---

  setParam(name: ParamName, value: number): void {
    const spec = this.schema[name];
    if (!spec) throw new Error(`unknown parameter ${name}`);
    const clamped = Math.min(spec.max, Math.max(spec.min, value));
    if (this.state.params[name] === clamped) return;
    this.state.params[name] = clamped;
    if (this.state.imageId !== null) this.scheduleDetect();
  }

  selectImage(imageId: string): void {
    if (this.state.imageId === imageId) return;
    this.state.imageId = imageId;
    this.state.regions = [];
    this.state.selectedRegion = null;
    this.detectNow(); // a new image should not wait out the debounce
  }

  setPreviewSeed(seed: number): void {
    this.state.previewSeed = seed;
  }

  selectRegion(index: number | null): void {
    if (index !== null && (index < 0 || index >= this.state.regions.length)) {
      throw new Error(`region index ${index} out of range`);
    }
    this.state.selectedRegion = index;
  }

  // --- detect requests ---

  private scheduleDetect(): void {
    if (this.timer !== null) this.cancel(this.timer);
    this.timer = this.schedule(() => {
      this.timer = null;
      void this.fireDetect();
    }, this.debounceMs);
  }

  detectNow(): void {
    if (this.timer !== null) {
      this.cancel(this.timer);
      this.timer = null;
    }
    void this.fireDetect();
  }

  private async fireDetect(): Promise<void> {
    const imageId = this.state.imageId;
    if (imageId === null) return;
    const seq = ++this.detectSeq;
    const params = { ...this.state.params };
    this.setPending(+1);
    let resp: DetectResponse;
    try {
      resp = await this.api.detect(imageId, params);
    } catch (err) {
      this.setPending(-1);
      if (seq === this.detectSeq) {
        this.events.onError?.(err instanceof Error ? err.message : String(err));
      }
      return;
    }
    this.setPending(-1);
    if (seq !== this.detectSeq) return; // superseded while in flight
    this.state.regions = resp.regions;
    this.state.timingMs = resp.timing_ms;
    if (
      this.state.selectedRegion !== null &&
      this.state.selectedRegion >= resp.regions.length
    ) {
      this.state.selectedRegion = null;
    }
    this.events.onRegions?.(resp.regions, this.state);
  }

  // --- pbr preview, latest-wins like detect ---

  async requestPreview(): Promise<void> {
    const { imageId, selectedRegion, previewSeed } = this.state;
    if (imageId === null || selectedRegion === null) return;
    const seq = ++this.previewSeq;
    try {
      const resp = await this.api.previewPbr(
        imageId, { ...this.state.params }, selectedRegion, previewSeed,
      );
      if (seq !== this.previewSeq) return;
      this.events.onPreview?.(resp);
    } catch (err) {
      if (seq === this.previewSeq) {
        this.events.onError?.(err instanceof Error ? err.message : String(err));
      }
    }
  }

  // --- export ---

  exportConfig(options: ExportOptions = {}): Promise<string> {
    return this.api.exportConfig({ ...this.state.params }, options);
  }

  // --- helpers ---

  hasPendingWork(): boolean {
    return this.timer !== null || this.inFlight > 0;
  }

  private setPending(delta: number): void {
    const was = this.inFlight > 0;
    this.inFlight += delta;
    const now = this.inFlight > 0;
    if (was !== now) this.events.onPending?.(now);
  }
}
