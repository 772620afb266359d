// Run-length mask codec matching the server's wire format: runs alternate
// zero/one pixel counts in row-major order, starting with a zero run (the
// first entry is 0 when the mask begins with a marked pixel).

import type { RleMask } from "./types.js";

export function encodeMask(bits: Uint8Array, width: number, height: number): RleMask {
  if (bits.length !== width * height) {
    throw new Error(`mask buffer is ${bits.length} px, expected ${width * height}`);
  }
  const runs: number[] = [];
  let value = 0;
  let run = 0;
  for (let i = 0; i < bits.length; i++) {
    const bit = bits[i] ? 1 : 0;
    if (bit === value) {
      run++;
    } else {
      runs.push(run);
      value = bit;
      run = 1;
    }
  }
  runs.push(run);
  return { width, height, runs };
}

export function decodeMask(mask: RleMask): Uint8Array {
  const total = mask.width * mask.height;
  const sum = mask.runs.reduce((a, b) => a + b, 0);
  if (sum !== total) {
    throw new Error(`runs sum to ${sum}, expected ${total}`);
  }
  const bits = new Uint8Array(total);
  let pos = 0;
  let value = 0;
  for (const run of mask.runs) {
    if (run < 0) throw new Error("negative run length");
    if (value) bits.fill(1, pos, pos + run);
    pos += run;
    value = 1 - value;
  }
  return bits;
}

export function markedPixels(mask: RleMask): number {
  let total = 0;
  for (let i = 1; i < mask.runs.length; i += 2) total += mask.runs[i];
  return total;
}

// Canonical JSON with alphabetical keys, byte-identical to the server's
// compact serialization of the same mask.
export function maskToWire(mask: RleMask): string {
  return `{"height":${mask.height},"runs":[${mask.runs.join(",")}],"width":${mask.width}}`;
}

export function maskFromWire(text: string): RleMask {
  const raw = JSON.parse(text) as Partial<RleMask>;
  if (
    typeof raw.width !== "number" ||
    typeof raw.height !== "number" ||
    !Array.isArray(raw.runs)
  ) {
    throw new Error("malformed mask wire object");
  }
  const mask = { width: raw.width, height: raw.height, runs: raw.runs.map(Number) };
  decodeMask(mask); // validates run sum
  return mask;
}
