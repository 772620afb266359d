// Brush tool: the image becomes a drawing canvas; strokes are captured in a
// mask buffer at the image's natural resolution, independent of display zoom.

import { encodeMask } from "./rle.js";
import type { RleMask } from "./types.js";

export class MaskBuffer {
  readonly width: number;
  readonly height: number;
  readonly bits: Uint8Array;

  constructor(width: number, height: number) {
    if (width <= 0 || height <= 0) throw new Error("mask dimensions must be positive");
    this.width = width;
    this.height = height;
    this.bits = new Uint8Array(width * height);
  }

  stampCircle(cx: number, cy: number, radius: number, value: 0 | 1): void {
    const r = Math.max(0, radius);
    const x0 = Math.max(0, Math.floor(cx - r));
    const x1 = Math.min(this.width - 1, Math.ceil(cx + r));
    const y0 = Math.max(0, Math.floor(cy - r));
    const y1 = Math.min(this.height - 1, Math.ceil(cy + r));
    const r2 = r * r;
    for (let y = y0; y <= y1; y++) {
      for (let x = x0; x <= x1; x++) {
        const dx = x - cx;
        const dy = y - cy;
        if (dx * dx + dy * dy <= r2) this.bits[y * this.width + x] = value;
      }
    }
  }

  stampLine(x0: number, y0: number, x1: number, y1: number, radius: number, value: 0 | 1): void {
    const steps = Math.max(1, Math.ceil(Math.hypot(x1 - x0, y1 - y0)));
    for (let i = 0; i <= steps; i++) {
      const t = i / steps;
      this.stampCircle(x0 + (x1 - x0) * t, y0 + (y1 - y0) * t, radius, value);
    }
  }

  clear(): void {
    this.bits.fill(0);
  }

  fill(): void {
    this.bits.fill(1);
  }

  toMask(): RleMask {
    return encodeMask(this.bits, this.width, this.height);
  }
}

export interface BrushOptions {
  radius?: number;
}

export interface BrushHandle {
  buffer: MaskBuffer;
  setRadius(px: number): void;
  setErase(on: boolean): void;
  clear(): void;
  toMask(): RleMask;
  element: HTMLElement;
}

// Wires pointer events on an overlay canvas sized to the displayed image but
// stamping into a natural-resolution buffer. Preview drawing is best-effort:
// environments without a 2D context still capture the mask correctly.
export function createBrushCanvas(image: HTMLImageElement, opts: BrushOptions = {}): BrushHandle {
  const naturalW = image.naturalWidth || image.width;
  const naturalH = image.naturalHeight || image.height;
  const buffer = new MaskBuffer(naturalW, naturalH);
  let radius = opts.radius ?? Math.max(4, Math.round(naturalW / 40));
  let erase = false;

  const wrapper = document.createElement("div");
  wrapper.className = "brush-wrapper";
  const canvas = document.createElement("canvas");
  canvas.className = "brush-overlay";
  canvas.width = naturalW;
  canvas.height = naturalH;
  wrapper.append(canvas);

  const ctx = canvas.getContext ? canvas.getContext("2d") : null;

  function repaint(): void {
    if (!ctx) return;
    const img = ctx.createImageData(naturalW, naturalH);
    for (let i = 0; i < buffer.bits.length; i++) {
      if (buffer.bits[i]) {
        img.data[i * 4] = 255;
        img.data[i * 4 + 3] = 110;
      }
    }
    ctx.clearRect(0, 0, naturalW, naturalH);
    ctx.putImageData(img, 0, 0);
  }

  // Pointer coordinates arrive in display pixels; convert to natural pixels
  // so zoom level never changes what gets recorded.
  function toNatural(event: PointerEvent): [number, number] {
    const rect = canvas.getBoundingClientRect();
    const scaleX = rect.width > 0 ? naturalW / rect.width : 1;
    const scaleY = rect.height > 0 ? naturalH / rect.height : 1;
    return [(event.clientX - rect.left) * scaleX, (event.clientY - rect.top) * scaleY];
  }

  let drawing = false;
  let last: [number, number] | null = null;
  canvas.addEventListener("pointerdown", (event) => {
    drawing = true;
    last = toNatural(event);
    buffer.stampCircle(last[0], last[1], radius, erase ? 0 : 1);
    repaint();
  });
  canvas.addEventListener("pointermove", (event) => {
    if (!drawing || !last) return;
    const next = toNatural(event);
    buffer.stampLine(last[0], last[1], next[0], next[1], radius, erase ? 0 : 1);
    last = next;
    repaint();
  });
  const stop = () => {
    drawing = false;
    last = null;
  };
  canvas.addEventListener("pointerup", stop);
  canvas.addEventListener("pointerleave", stop);

  return {
    buffer,
    element: wrapper,
    setRadius(px: number) {
      radius = Math.max(1, px);
    },
    setErase(on: boolean) {
      erase = on;
    },
    clear() {
      buffer.clear();
      repaint();
    },
    toMask() {
      return buffer.toMask();
    },
  };
}
