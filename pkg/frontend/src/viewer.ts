/** Camera state and the render-fetch loop.
 *
 * The server does all rendering; this class owns the orbit camera,
 * debounces fetches to roughly 10 Hz while the user drags, and aborts
 * the in-flight request whenever a newer camera supersedes it.
 */

import { ApiClient } from "./api.js";
import type { RenderMode } from "./types.js";

export interface ViewerOptions {
  minIntervalMs?: number;
  minRadius?: number;
  maxRadius?: number;
  minFovy?: number;
  maxFovy?: number;
  onFrame?: (blob: Blob) => void;
  onError?: (message: string) => void;
}

const defaults = {
  minIntervalMs: 100,
  minRadius: 1.2,
  maxRadius: 6.0,
  minFovy: 20,
  maxFovy: 120,
};

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

/** Wrap to (-180, 180] the way the server's orbit camera does. */
export function wrapAzimuth(azimuth: number): number {
  const a = ((azimuth + 180) % 360 + 360) % 360 - 180;
  return a === -180 ? 180 : a;
}

export class Viewer {
  elevation = 0;
  azimuth = 0;
  radius = 2.5;
  fovy = 50;
  mode: RenderMode = "rgb";

  fetchCount = 0; // total render fetches issued; exposed for tests

  private readonly opts: Required<Omit<ViewerOptions, "onFrame" | "onError">>;
  private readonly onFrame?: (blob: Blob) => void;
  private readonly onError?: (message: string) => void;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private controller: AbortController | null = null;
  private lastIssued = -Infinity;

  constructor(
    private client: ApiClient,
    private sessionId: string,
    options: ViewerOptions = {},
  ) {
    const { onFrame, onError, ...rest } = options;
    this.opts = { ...defaults, ...rest };
    this.onFrame = onFrame;
    this.onError = onError;
  }

  orbit(dAzimuth: number, dElevation: number): void {
    this.azimuth = wrapAzimuth(this.azimuth + dAzimuth);
    this.elevation = clamp(this.elevation + dElevation, -90, 90);
    this.scheduleRender();
  }

  zoom(factor: number): void {
    this.radius = clamp(this.radius * factor, this.opts.minRadius, this.opts.maxRadius);
    this.scheduleRender();
  }

  setFovy(fovy: number): void {
    this.fovy = clamp(fovy, this.opts.minFovy, this.opts.maxFovy);
    this.scheduleRender();
  }

  setMode(mode: RenderMode): void {
    this.mode = mode;
    this.scheduleRender();
  }

  /** Coalesce camera changes: at most one fetch per minIntervalMs. */
  scheduleRender(): void {
    if (this.timer !== null) {
      return; // a pending fetch will pick up the latest camera
    }
    const wait = this.lastIssued + this.opts.minIntervalMs - Date.now();
    if (wait <= 0) {
      this.issue();
      return;
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      this.issue();
    }, wait);
  }

  /** Fetch with the current camera immediately (after mutations). */
  refresh(): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    return this.issue();
  }

  private async issue(): Promise<void> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    this.lastIssued = Date.now();
    this.fetchCount += 1;
    try {
      const blob = await this.client.fetchRender(
        this.sessionId,
        {
          elevation: this.elevation,
          azimuth: this.azimuth,
          radius: this.radius,
          fovy: this.fovy,
          mode: this.mode,
        },
        controller.signal,
      );
      if (!controller.signal.aborted) {
        this.onFrame?.(blob);
      }
    } catch (err) {
      if (controller.signal.aborted) return; // superseded by a newer camera
      this.onError?.(err instanceof Error ? err.message : String(err));
    }
  }
}
