import { describe, expect, it } from "vitest";

import { buildTiles, sheetFromTiles, toggleTile } from "../src/tiles.js";

describe("word/gap tiles", () => {
  it("builds 2n+1 tiles for n words", () => {
    for (const n of [1, 2, 3, 6]) {
      const words = Array.from({ length: n }, (_v, i) => `w${i}`);
      expect(buildTiles(words)).toHaveLength(2 * n + 1);
    }
  });

  it("three words give seven tiles, gaps at both boundaries", () => {
    const tiles = buildTiles(["a", "b", "c"]);
    expect(tiles.map((t) => t.kind)).toEqual(["gap", "word", "gap", "word", "gap", "word", "gap"]);
    expect(tiles[0]).toMatchObject({ kind: "gap", index: 0 });
    expect(tiles[6]).toMatchObject({ kind: "gap", index: 3 });
  });

  it("toggling a gap records an insertion in the sheet", () => {
    const words = ["a", "b"];
    const tiles = buildTiles(words);
    toggleTile(tiles[2]); // gap between the words
    const sheet = sheetFromTiles(words, tiles);
    expect(sheet.gap_labels).toEqual(["clean", "incorrect", "clean"]);
    expect(sheet.word_labels).toEqual(["correct", "correct"]);
  });

  it("sheet satisfies the payload shape invariants", () => {
    const words = ["x", "y", "z"];
    const sheet = sheetFromTiles(words, buildTiles(words));
    expect(sheet.word_labels).toHaveLength(sheet.words.length);
    expect(sheet.gap_labels).toHaveLength(sheet.words.length + 1);
  });

  it("rejects empty word lists", () => {
    expect(() => buildTiles([])).toThrow();
  });
});
