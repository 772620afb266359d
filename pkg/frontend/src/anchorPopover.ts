// Anchor reference popover: an image icon sits next to reference-dependent
// questions and reveals the top-k anchor images on hover, together with the
// 0-5 similarity rating buttons (plus unsure). No icon renders on a miss.

export interface AnchorPopoverOptions {
  anchors: string[];
  k?: number;
  onRate?: (value: number | "unsure") => void;
}

export interface AnchorPopoverHandle {
  icon: HTMLElement;
  panel: HTMLElement;
  value: number | "unsure" | null;
}

export const ANCHOR_SCALE_MIN = 0;
export const ANCHOR_SCALE_MAX = 5;

export function createAnchorPopover(row: HTMLElement, opts: AnchorPopoverOptions): AnchorPopoverHandle | null {
  const k = opts.k ?? 3;
  const shown = opts.anchors.slice(0, k);
  if (shown.length === 0) return null; // miss: caller falls back to the no-anchor flow

  const icon = document.createElement("span");
  icon.className = "anchor-icon";
  icon.textContent = "🖼";
  icon.tabIndex = 0;

  const panel = document.createElement("div");
  panel.className = "anchor-panel";
  panel.hidden = true;

  const strip = document.createElement("div");
  strip.className = "anchor-strip";
  for (const path of shown) {
    const img = document.createElement("img");
    img.src = path;
    img.alt = "reference";
    img.className = "anchor-image";
    strip.append(img);
  }
  panel.append(strip);

  const handle: AnchorPopoverHandle = { icon, panel, value: null };

  const ratings = document.createElement("div");
  ratings.className = "anchor-ratings";
  const choices: (number | "unsure")[] = [];
  for (let v = ANCHOR_SCALE_MIN; v <= ANCHOR_SCALE_MAX; v++) choices.push(v);
  choices.push("unsure");
  for (const choice of choices) {
    const button = document.createElement("button");
    button.type = "button";
    button.textContent = String(choice);
    button.dataset.value = String(choice);
    button.addEventListener("click", () => {
      handle.value = choice;
      for (const other of ratings.querySelectorAll("button")) {
        other.classList.toggle("selected", other === button);
      }
      opts.onRate?.(choice);
    });
    ratings.append(button);
  }
  panel.append(ratings);

  // icon and panel share one hover region so the pointer can travel between them
  const region = document.createElement("span");
  region.className = "anchor-region";
  region.append(icon, panel);
  region.addEventListener("mouseenter", () => {
    panel.hidden = false;
  });
  region.addEventListener("mouseleave", () => {
    panel.hidden = true;
  });

  row.append(region);
  return handle;
}
