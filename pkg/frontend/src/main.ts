/** Page assembly: upload form, viewer, and the three panels.
 *
 * Served by the texpaint service under /ui; all requests go to the same
 * origin. The left side shows server renders (drag orbits, wheel zooms),
 * the right side drives synthesis.
 */

import { ApiClient } from "./api.js";
import { BusyGate, InpaintPanel, RepaintPanel } from "./panel.js";
import { toast } from "./toast.js";
import { RENDER_MODES, type RenderMode } from "./types.js";
import { Viewer } from "./viewer.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function setControlsEnabled(enabled: boolean): void {
  document.querySelectorAll<HTMLButtonElement>("button[data-mutating]").forEach((b) => {
    b.disabled = !enabled;
  });
  byId<HTMLDivElement>("busy-indicator").style.visibility = enabled ? "hidden" : "visible";
}

function start(client: ApiClient, sessionId: string, resolution: number): void {
  byId<HTMLDivElement>("setup").style.display = "none";
  byId<HTMLDivElement>("workspace").style.display = "flex";

  const img = byId<HTMLImageElement>("view");
  const overlayCanvas = byId<HTMLCanvasElement>("overlay");
  overlayCanvas.width = resolution;
  overlayCanvas.height = resolution;
  const ctx = overlayCanvas.getContext("2d");
  if (!ctx) throw new Error("no 2d canvas context");

  let frameUrl: string | null = null;
  const viewer = new Viewer(client, sessionId, {
    onFrame: (blob) => {
      const url = URL.createObjectURL(blob);
      img.src = url;
      if (frameUrl) URL.revokeObjectURL(frameUrl);
      frameUrl = url;
    },
    onError: (message) => toast(message, "error"),
  });

  const gate = new BusyGate();
  gate.onChange = (busy) => setControlsEnabled(!busy);
  const report = (text: string) => toast(text, "info");
  const error = (text: string) => toast(text, "error");
  const panel = new InpaintPanel(client, sessionId, viewer, gate, {
    onReport: report,
    onError: error,
  });
  const repaint = new RepaintPanel(client, sessionId, viewer, gate, resolution, {
    onReport: report,
    onError: error,
  });

  const drawOverlay = () => {
    ctx.clearRect(0, 0, resolution, resolution);
    if (!repaint.overlay.isEmpty()) {
      ctx.putImageData(
        new ImageData(repaint.overlay.toRgbaOverlay(), resolution, resolution), 0, 0);
    }
  };
  repaint.onOverlayChange = drawOverlay;

  // pointer handling: brush when draw mode is armed, orbit otherwise
  const drawToggle = byId<HTMLInputElement>("draw-mode");
  let dragging = false;
  let last: { x: number; y: number } | null = null;

  const canvasPos = (ev: PointerEvent) => {
    const rect = overlayCanvas.getBoundingClientRect();
    return {
      x: ((ev.clientX - rect.left) / rect.width) * resolution,
      y: ((ev.clientY - rect.top) / rect.height) * resolution,
    };
  };

  overlayCanvas.addEventListener("pointerdown", (ev) => {
    dragging = true;
    overlayCanvas.setPointerCapture(ev.pointerId);
    const p = canvasPos(ev);
    if (drawToggle.checked) {
      repaint.stroke(p.x, p.y, p.x, p.y);
    }
    last = p;
  });
  overlayCanvas.addEventListener("pointermove", (ev) => {
    if (!dragging || !last) return;
    const p = canvasPos(ev);
    if (drawToggle.checked) {
      repaint.stroke(last.x, last.y, p.x, p.y);
    } else {
      // a full canvas drag sweeps half an orbit
      viewer.orbit(((p.x - last.x) / resolution) * 180, ((p.y - last.y) / resolution) * -180);
    }
    last = p;
  });
  const stopDrag = () => {
    dragging = false;
    last = null;
  };
  overlayCanvas.addEventListener("pointerup", stopDrag);
  overlayCanvas.addEventListener("pointercancel", stopDrag);
  overlayCanvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    viewer.zoom(ev.deltaY > 0 ? 1.1 : 1 / 1.1);
  });

  // render panel
  const modeSelect = byId<HTMLSelectElement>("mode");
  for (const mode of RENDER_MODES) {
    const option = document.createElement("option");
    option.value = mode;
    option.textContent = mode;
    modeSelect.appendChild(option);
  }
  modeSelect.addEventListener("change", () => viewer.setMode(modeSelect.value as RenderMode));
  const fovySlider = byId<HTMLInputElement>("fovy");
  const fovyValue = byId<HTMLSpanElement>("fovy-value");
  fovySlider.addEventListener("input", () => {
    viewer.setFovy(Number(fovySlider.value));
    fovyValue.textContent = `${fovySlider.value}°`;
  });

  // inpaint panel
  const prompt = () => byId<HTMLInputElement>("prompt").value;
  const seed = () => Number(byId<HTMLInputElement>("seed").value) || 0;
  byId<HTMLButtonElement>("btn-inpaint").addEventListener("click", () =>
    panel.inpaint(prompt(), seed()));
  byId<HTMLButtonElement>("btn-auto").addEventListener("click", () =>
    panel.auto(prompt(), seed()));
  byId<HTMLButtonElement>("btn-undo").addEventListener("click", () => panel.undo());
  byId<HTMLButtonElement>("btn-dilate").addEventListener("click", () => panel.dilate());
  byId<HTMLButtonElement>("btn-init").addEventListener("click", () => panel.init());
  byId<HTMLButtonElement>("btn-save").addEventListener("click", () => panel.save());

  // repaint panel
  const brush = byId<HTMLInputElement>("brush");
  brush.addEventListener("input", () => {
    repaint.brushRadius = Number(brush.value);
  });
  byId<HTMLButtonElement>("btn-clear-mask").addEventListener("click", () => repaint.clear());
  byId<HTMLButtonElement>("btn-apply-mask").addEventListener("click", () => repaint.apply());

  // status line + busy mirror so an auto run re-enables controls when done
  const status = byId<HTMLSpanElement>("status");
  setInterval(async () => {
    try {
      const s = await client.state(sessionId);
      gate.markServerBusy(s.busy);
      status.textContent =
        `coverage ${(s.coverage * 100).toFixed(1)}% | history ${s.history}` +
        (s.busy ? " | busy" : "");
    } catch {
      // transient poll failures leave the last status in place
    }
  }, 2000);

  viewer.refresh();
}

async function createSession(client: ApiClient): Promise<void> {
  const fileInput = byId<HTMLInputElement>("mesh-file");
  const file = fileInput.files?.[0];
  if (!file) {
    toast("choose an OBJ mesh first", "error");
    return;
  }
  const resolution = Number(byId<HTMLSelectElement>("view-res").value);
  try {
    const id = await client.createSession(file, file.name, { view_resolution: resolution });
    toast(`session ${id}`);
    start(client, id, resolution);
  } catch (err) {
    toast(err instanceof Error ? err.message : String(err), "error");
  }
}

export function main(): void {
  const client = new ApiClient();
  byId<HTMLButtonElement>("btn-create").addEventListener("click", () => createSession(client));
}

if (typeof document !== "undefined") {
  main();
}
