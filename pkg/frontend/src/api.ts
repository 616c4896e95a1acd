/** Typed client for the texpaint session API. */

import type {
  AutoReport,
  DilateReport,
  EraseReport,
  InpaintReport,
  RenderParams,
  SaveReport,
  SessionState,
  UndoReport,
} from "./types.js";

export class ApiError extends Error {
  status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
    this.name = "ApiError";
  }
}

export function bytesToBase64(bytes: Uint8Array): string {
  let binary = "";
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(binary);
}

export interface InpaintParams {
  elevation: number;
  azimuth: number;
  prompt?: string;
  seed?: number;
  fovy?: number;
  radius?: number;
}

export interface EraseParams {
  elevation: number;
  azimuth: number;
  maskPng: Uint8Array;
  fovy?: number;
  radius?: number;
}

export interface ApiClientOptions {
  base?: string;
  fetchFn?: typeof fetch;
}

async function errorMessage(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as Record<string, unknown>;
    const detail = body.error ?? body.detail;
    if (typeof detail === "string") return detail;
    if (detail !== undefined) return JSON.stringify(detail);
  } catch {
    // non-JSON error body: fall through to the status line
  }
  return `request failed with status ${resp.status}`;
}

export class ApiClient {
  readonly base: string;
  private fetchFn: typeof fetch;

  constructor(options: ApiClientOptions = {}) {
    this.base = (options.base ?? "").replace(/\/$/, "");
    this.fetchFn = options.fetchFn ?? fetch.bind(globalThis);
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) {
      throw new ApiError(resp.status, await errorMessage(resp));
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.json<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body ?? {}),
    });
  }

  async createSession(mesh: Blob, filename = "model.obj", config?: object): Promise<string> {
    const form = new FormData();
    form.append("mesh", mesh, filename);
    if (config) form.append("config", JSON.stringify(config));
    const body = await this.json<{ id: string }>("/sessions", { method: "POST", body: form });
    return body.id;
  }

  renderUrl(id: string, params: Partial<RenderParams>): string {
    const q = new URLSearchParams();
    q.set("elevation", String(params.elevation ?? 0));
    q.set("azimuth", String(params.azimuth ?? 0));
    q.set("mode", params.mode ?? "rgb");
    if (params.fovy !== undefined) q.set("fovy", String(params.fovy));
    if (params.radius !== undefined) q.set("radius", String(params.radius));
    if (params.resolution !== undefined) q.set("resolution", String(params.resolution));
    return `${this.base}/sessions/${id}/render?${q.toString()}`;
  }

  async fetchRender(id: string, params: Partial<RenderParams>, signal?: AbortSignal): Promise<Blob> {
    const resp = await this.fetchFn(this.renderUrl(id, params), { signal });
    if (!resp.ok) {
      throw new ApiError(resp.status, await errorMessage(resp));
    }
    return resp.blob();
  }

  inpaint(id: string, params: InpaintParams): Promise<InpaintReport> {
    return this.post(`/sessions/${id}/inpaint`, params);
  }

  auto(id: string, prompt = "", seed = 0): Promise<AutoReport> {
    return this.post(`/sessions/${id}/auto`, { prompt, seed });
  }

  erase(id: string, params: EraseParams): Promise<EraseReport> {
    const { maskPng, ...camera } = params;
    return this.post(`/sessions/${id}/erase`, { ...camera, mask: bytesToBase64(maskPng) });
  }

  undo(id: string): Promise<UndoReport> {
    return this.post(`/sessions/${id}/undo`);
  }

  dilate(id: string): Promise<DilateReport> {
    return this.post(`/sessions/${id}/dilate`);
  }

  init(id: string): Promise<{ ok: boolean }> {
    return this.post(`/sessions/${id}/init`);
  }

  save(id: string, path?: string): Promise<SaveReport> {
    return this.post(`/sessions/${id}/save`, path ? { path } : {});
  }

  state(id: string): Promise<SessionState> {
    return this.json(`/sessions/${id}/state`);
  }
}
