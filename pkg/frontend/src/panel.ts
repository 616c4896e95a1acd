/** Panel actions and the single-writer guard.
 *
 * Mirrors the server's one-mutating-op-per-session rule on the client:
 * while a mutation is in flight (ours, or someone else's reported by a
 * 409) the panels refuse to start another. The busy flag is always
 * resynchronized from GET state, never left stale.
 */

import { ApiClient, ApiError } from "./api.js";
import { MaskOverlay } from "./mask.js";
import { Viewer } from "./viewer.js";

export class BusyGate {
  serverBusy = false;
  onChange?: (busy: boolean) => void;
  private inFlight = false;

  get busy(): boolean {
    return this.inFlight || this.serverBusy;
  }

  markServerBusy(busy: boolean): void {
    if (this.serverBusy !== busy) {
      this.serverBusy = busy;
      this.onChange?.(this.busy);
    }
  }

  async run<T>(fn: () => Promise<T>): Promise<T> {
    if (this.busy) {
      throw new ApiError(409, "another operation is still running");
    }
    this.inFlight = true;
    this.onChange?.(true);
    try {
      return await fn();
    } finally {
      this.inFlight = false;
      this.onChange?.(this.busy);
    }
  }
}

export interface PanelOptions {
  pollMs?: number;
  onReport?: (text: string) => void;
  onError?: (message: string) => void;
}

const panelDefaults = { pollMs: 500 };

/** The inpaint-panel button set: auto, init, inpaint, undo, dilate, save.
 *
 * A deblur (super-resolution) pass would slot in as one more button, but
 * no backend stage exists for it; the page notes the omission instead.
 */
export class InpaintPanel {
  private readonly opts: Required<Pick<PanelOptions, "pollMs">>;
  private readonly onReport?: (text: string) => void;
  private readonly onError?: (message: string) => void;

  constructor(
    private client: ApiClient,
    private sessionId: string,
    private viewer: Viewer,
    readonly gate: BusyGate,
    options: PanelOptions = {},
  ) {
    const { onReport, onError, ...rest } = options;
    this.opts = { ...panelDefaults, ...rest };
    this.onReport = onReport;
    this.onError = onError;
  }

  inpaint(prompt: string, seed: number): Promise<void> {
    return this.mutate(async () => {
      const r = await this.client.inpaint(this.sessionId, {
        elevation: this.viewer.elevation,
        azimuth: this.viewer.azimuth,
        fovy: this.viewer.fovy,
        radius: this.viewer.radius,
        prompt,
        seed,
      });
      return r.skipped
        ? "view already painted, nothing to inpaint"
        : `inpainted: ${r.texels_updated} texels (${r.generate_px} generate px)`;
    });
  }

  auto(prompt: string, seed: number): Promise<void> {
    return this.mutate(async () => {
      const r = await this.client.auto(this.sessionId, prompt, seed);
      return `auto: ${r.views.length} views, coverage ${(r.coverage * 100).toFixed(1)}%`;
    });
  }

  undo(): Promise<void> {
    return this.mutate(async () => {
      const r = await this.client.undo(this.sessionId);
      return r.undone ? "undone" : "nothing to undo";
    });
  }

  dilate(): Promise<void> {
    return this.mutate(async () => {
      const r = await this.client.dilate(this.sessionId);
      return `dilated: ${r.filled_texels} texels filled`;
    });
  }

  init(): Promise<void> {
    return this.mutate(async () => {
      await this.client.init(this.sessionId);
      return "buffers reinitialized";
    });
  }

  save(path?: string): Promise<void> {
    return this.mutate(async () => {
      const r = await this.client.save(this.sessionId, path);
      return `saved to ${r.path}`;
    });
  }

  /** Refresh gate.serverBusy from the server; poll until it clears. */
  async syncBusy(): Promise<void> {
    for (;;) {
      const state = await this.client.state(this.sessionId);
      this.gate.markServerBusy(state.busy);
      if (!state.busy) return;
      await new Promise((resolve) => setTimeout(resolve, this.opts.pollMs));
    }
  }

  private async mutate(fn: () => Promise<string>): Promise<void> {
    try {
      const report = await this.gate.run(fn);
      this.onReport?.(report);
      await this.viewer.refresh();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.onError?.(err.message);
        await this.syncBusy(); // someone else is writing; track until idle
        return;
      }
      this.onError?.(err instanceof Error ? err.message : String(err));
    }
  }
}

/** Freehand erase-mask drawing over the rendered view. */
export class RepaintPanel {
  overlay: MaskOverlay;
  brushRadius = 8;
  onOverlayChange?: () => void;

  constructor(
    private client: ApiClient,
    private sessionId: string,
    private viewer: Viewer,
    readonly gate: BusyGate,
    resolution: number,
    private options: PanelOptions = {},
  ) {
    this.overlay = new MaskOverlay(resolution, resolution);
  }

  stroke(x0: number, y0: number, x1: number, y1: number): void {
    this.overlay.stampStroke(x0, y0, x1, y1, this.brushRadius);
    this.onOverlayChange?.();
  }

  clear(): void {
    this.overlay.clear();
    this.onOverlayChange?.();
  }

  /** Send the drawn mask as an erase request; clear the overlay on success. */
  async apply(): Promise<void> {
    try {
      const erased = await this.gate.run(async () => {
        const r = await this.client.erase(this.sessionId, {
          elevation: this.viewer.elevation,
          azimuth: this.viewer.azimuth,
          fovy: this.viewer.fovy,
          radius: this.viewer.radius,
          maskPng: this.overlay.toPngBytes(),
        });
        return r.erased_texels;
      });
      this.overlay.clear();
      this.onOverlayChange?.();
      this.options.onReport?.(`erased ${erased} texels`);
      await this.viewer.refresh();
    } catch (err) {
      this.options.onError?.(err instanceof Error ? err.message : String(err));
    }
  }
}
