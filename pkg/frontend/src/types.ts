/** Shared types mirroring the texpaint service API. */

export type RenderMode = "rgb" | "depth" | "alpha" | "normal" | "viewcos";

export const RENDER_MODES: RenderMode[] = ["rgb", "depth", "alpha", "normal", "viewcos"];

export interface CameraPose {
  elevation: number;
  azimuth: number;
  radius: number;
  fovy: number;
}

export interface RenderParams extends CameraPose {
  mode: RenderMode;
  resolution?: number;
}

export interface SessionState {
  config: Record<string, unknown>;
  coverage: number;
  history: number;
  busy: boolean;
}

export interface InpaintReport {
  elevation: number;
  azimuth: number;
  generate_px: number;
  refine_px: number;
  keep_px: number;
  backend_elapsed_ms: number;
  texels_updated: number;
  skipped: boolean;
}

export interface AutoReport {
  views: InpaintReport[];
  dilated: number;
  coverage: number;
}

export interface EraseReport {
  erased_texels: number;
}

export interface DilateReport {
  iterations: number;
  filled_texels: number;
}

export interface UndoReport {
  undone: boolean;
  detail: string;
  history: number;
}

export interface SaveReport {
  path: string;
  files: string[];
}
