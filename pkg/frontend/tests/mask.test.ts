import { describe, expect, it } from "vitest";

import { MaskOverlay } from "../src/mask.js";
import { decodeGray8Png } from "../src/png.js";

describe("MaskOverlay", () => {
  it("stamps an exact pixel disk", () => {
    const m = new MaskOverlay(32, 32);
    m.stampDisk(16, 16, 5);
    for (let y = 0; y < 32; y++) {
      for (let x = 0; x < 32; x++) {
        const inside = (x - 16) ** 2 + (y - 16) ** 2 <= 25;
        expect(m.data[y * 32 + x]).toBe(inside ? 1 : 0);
      }
    }
  });

  it("clips stamps at the canvas edge", () => {
    const m = new MaskOverlay(16, 16);
    m.stampDisk(0, 0, 4);
    expect(m.data[0]).toBe(1);
    expect(m.paintedCount()).toBeGreaterThan(0);
    expect(m.paintedCount()).toBeLessThan(16 * 16);
  });

  it("stamps a contiguous stroke covering the segment", () => {
    const m = new MaskOverlay(64, 64);
    m.stampStroke(5, 30, 58, 34, 3);
    // every pixel within brush radius of the segment is painted
    for (let y = 0; y < 64; y++) {
      for (let x = 0; x < 64; x++) {
        const t = Math.max(0, Math.min(1, ((x - 5) * 53 + (y - 30) * 4) / (53 * 53 + 4 * 4)));
        const dx = x - (5 + 53 * t);
        const dy = y - (30 + 4 * t);
        if (dx * dx + dy * dy <= 4) {
          // strictly inside: stays clear of the disk-spacing boundary
          expect(m.data[y * 64 + x]).toBe(1);
        }
      }
    }
  });

  it("clears back to empty", () => {
    const m = new MaskOverlay(8, 8);
    expect(m.isEmpty()).toBe(true);
    m.stampDisk(4, 4, 2);
    expect(m.isEmpty()).toBe(false);
    m.clear();
    expect(m.isEmpty()).toBe(true);
  });

  it("sends exactly the displayed overlay: png bytes match the buffer pixel for pixel", () => {
    const m = new MaskOverlay(64, 64);
    m.stampStroke(3, 3, 60, 40, 4);
    m.stampStroke(50, 10, 10, 55, 7);
    m.stampDisk(32, 32, 11);

    const decoded = decodeGray8Png(m.toPngBytes());
    expect(decoded.width).toBe(64);
    expect(decoded.height).toBe(64);

    const rgba = m.toRgbaOverlay();
    let painted = 0;
    for (let i = 0; i < m.data.length; i++) {
      // wire pixel == drawn buffer == displayed alpha, everywhere
      expect(decoded.data[i]).toBe(m.data[i] ? 255 : 0);
      expect(rgba[i * 4 + 3] > 0).toBe(m.data[i] === 1);
      painted += m.data[i];
    }
    expect(painted).toBeGreaterThan(100);
    expect(painted).toBeLessThan(64 * 64);
  });
});
