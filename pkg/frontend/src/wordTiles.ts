// Word/gap tile strip: click a word to mark it incorrect, click a gap to
// record an insertion there. Gaps render narrow between the word tiles.

import { buildTiles, sheetFromTiles, toggleTile, type Tile } from "./tiles.js";
import type { WordTileSheet } from "./types.js";

export interface WordTileHandle {
  element: HTMLElement;
  tiles: Tile[];
  sheet(): WordTileSheet;
}

export function createWordTiles(words: string[], onChange?: () => void): WordTileHandle {
  const tiles = buildTiles(words);
  const strip = document.createElement("div");
  strip.className = "word-tiles";

  for (const tile of tiles) {
    const button = document.createElement("button");
    button.type = "button";
    button.className = tile.kind === "word" ? "tile word" : "tile gap";
    button.dataset.kind = tile.kind;
    button.dataset.index = String(tile.index);
    button.textContent = tile.kind === "word" ? tile.text : "·";
    button.title = tile.kind === "word" ? "toggle correct/incorrect" : "toggle inserted text";
    const paint = () => {
      button.classList.toggle("flagged", tile.state === "incorrect");
    };
    button.addEventListener("click", () => {
      toggleTile(tile);
      paint();
      onChange?.();
    });
    paint();
    strip.append(button);
  }

  return {
    element: strip,
    tiles,
    sheet: () => sheetFromTiles(words, tiles),
  };
}
