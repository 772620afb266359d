// Word/gap tile model for text-rendering annotation: one tile per expected
// word plus a gap tile between words and at both sentence boundaries
// (2n + 1 tiles for n words). Gaps record spurious insertions.

import type { GapLabel, WordLabel, WordTileSheet } from "./types.js";

export type Tile =
  | { kind: "word"; index: number; text: string; state: WordLabel }
  | { kind: "gap"; index: number; state: GapLabel };

export function buildTiles(words: string[]): Tile[] {
  if (words.length === 0) throw new Error("word tiles need at least one word");
  const tiles: Tile[] = [];
  words.forEach((text, i) => {
    tiles.push({ kind: "gap", index: i, state: "clean" });
    tiles.push({ kind: "word", index: i, text, state: "correct" });
  });
  tiles.push({ kind: "gap", index: words.length, state: "clean" });
  return tiles;
}

export function toggleTile(tile: Tile): void {
  if (tile.kind === "word") {
    tile.state = tile.state === "correct" ? "incorrect" : "correct";
  } else {
    tile.state = tile.state === "clean" ? "incorrect" : "clean";
  }
}

export function sheetFromTiles(words: string[], tiles: Tile[]): WordTileSheet {
  const word_labels = new Array<WordLabel>(words.length);
  const gap_labels = new Array<GapLabel>(words.length + 1);
  for (const tile of tiles) {
    if (tile.kind === "word") word_labels[tile.index] = tile.state;
    else gap_labels[tile.index] = tile.state;
  }
  if (word_labels.some((l) => l === undefined) || gap_labels.some((l) => l === undefined)) {
    throw new Error("incomplete tile set");
  }
  return { words: [...words], word_labels, gap_labels };
}
