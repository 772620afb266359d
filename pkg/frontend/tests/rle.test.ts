import { describe, expect, it } from "vitest";

import { decodeMask, encodeMask, markedPixels, maskFromWire, maskToWire } from "../src/rle.js";

function randomBits(n: number, seed: number): Uint8Array {
  // xorshift keeps the test deterministic without a dependency
  let state = seed || 1;
  const bits = new Uint8Array(n);
  for (let i = 0; i < n; i++) {
    state ^= state << 13;
    state ^= state >>> 17;
    state ^= state << 5;
    bits[i] = (state >>> 0) % 2 === 0 ? 0 : 1;
  }
  return bits;
}

describe("rle codec", () => {
  it("all-zero mask is a single zero run", () => {
    const mask = encodeMask(new Uint8Array(12), 4, 3);
    expect(mask.runs).toEqual([12]);
    expect(markedPixels(mask)).toBe(0);
  });

  it("all-one mask starts with an empty zero run", () => {
    const mask = encodeMask(new Uint8Array(12).fill(1), 4, 3);
    expect(mask.runs).toEqual([0, 12]);
    expect(markedPixels(mask)).toBe(12);
  });

  it("round-trips random masks exactly", () => {
    for (let seed = 1; seed <= 30; seed++) {
      const bits = randomBits(7 * 9, seed);
      const mask = encodeMask(bits, 7, 9);
      expect(decodeMask(mask)).toEqual(bits);
    }
  });

  it("wire format is bit-exact through encode/parse/encode", () => {
    for (let seed = 1; seed <= 20; seed++) {
      const bits = randomBits(5 * 6, seed);
      const mask = encodeMask(bits, 5, 6);
      const wire = maskToWire(mask);
      const parsed = maskFromWire(wire);
      expect(maskToWire(parsed)).toBe(wire);
      expect(decodeMask(parsed)).toEqual(bits);
    }
  });

  it("wire format matches the server's canonical serialization", () => {
    const mask = { width: 3, height: 2, runs: [1, 2, 3] };
    expect(maskToWire(mask)).toBe('{"height":2,"runs":[1,2,3],"width":3}');
  });

  it("rejects run sums that do not cover the raster", () => {
    expect(() => decodeMask({ width: 4, height: 4, runs: [3, 2] })).toThrow();
    expect(() => maskFromWire('{"height":4,"runs":[3,2],"width":4}')).toThrow();
  });
});
