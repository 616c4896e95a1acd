/** Brush-drawn erase mask.
 *
 * The boolean buffer here is the single source of truth: the on-screen
 * overlay is painted from it each frame and the PNG sent to the service
 * is encoded from it, so what the user sees is exactly what gets erased.
 */

import { encodeGray8Png } from "./png.js";

export class MaskOverlay {
  readonly width: number;
  readonly height: number;
  data: Uint8Array; // 1 = erase, 0 = keep

  constructor(width: number, height: number) {
    if (width < 1 || height < 1) {
      throw new Error(`mask size must be positive, got ${width}x${height}`);
    }
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height);
  }

  clear(): void {
    this.data.fill(0);
  }

  isEmpty(): boolean {
    return !this.data.some((v) => v !== 0);
  }

  paintedCount(): number {
    let n = 0;
    for (let i = 0; i < this.data.length; i++) n += this.data[i];
    return n;
  }

  /** Stamp a filled disk, clipped to the canvas. */
  stampDisk(cx: number, cy: number, radius: number): void {
    const r = Math.max(0, radius);
    const r2 = r * r;
    const x0 = Math.max(0, Math.floor(cx - r));
    const x1 = Math.min(this.width - 1, Math.ceil(cx + r));
    const y0 = Math.max(0, Math.floor(cy - r));
    const y1 = Math.min(this.height - 1, Math.ceil(cy + r));
    for (let y = y0; y <= y1; y++) {
      for (let x = x0; x <= x1; x++) {
        const dx = x - cx;
        const dy = y - cy;
        if (dx * dx + dy * dy <= r2) {
          this.data[y * this.width + x] = 1;
        }
      }
    }
  }

  /** Stamp disks along a segment at sub-pixel spacing: one brush drag step. */
  stampStroke(x0: number, y0: number, x1: number, y1: number, radius: number): void {
    const steps = Math.max(1, Math.ceil(Math.hypot(x1 - x0, y1 - y0)));
    for (let i = 0; i <= steps; i++) {
      const t = i / steps;
      this.stampDisk(x0 + (x1 - x0) * t, y0 + (y1 - y0) * t, radius);
    }
  }

  /** The wire form: gray8 PNG, 255 = erase, 0 = keep. */
  toPngBytes(): Uint8Array {
    const gray = new Uint8Array(this.data.length);
    for (let i = 0; i < this.data.length; i++) {
      gray[i] = this.data[i] ? 255 : 0;
    }
    return encodeGray8Png(gray, this.width, this.height);
  }

  /** RGBA pixels for the display canvas; alpha > 0 exactly where data is set. */
  toRgbaOverlay(r = 255, g = 64, b = 64, a = 140): Uint8ClampedArray<ArrayBuffer> {
    const out = new Uint8ClampedArray(this.data.length * 4);
    for (let i = 0; i < this.data.length; i++) {
      if (this.data[i]) {
        out[i * 4] = r;
        out[i * 4 + 1] = g;
        out[i * 4 + 2] = b;
        out[i * 4 + 3] = a;
      }
    }
    return out;
  }
}
