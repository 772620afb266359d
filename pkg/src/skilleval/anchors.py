"""Reference anchors for knowledge-dependent questions (landmarks, styles,
named entities): a curated local index plus labeled collage composition.

The index is a JSON manifest mapping normalized keys to image entries; a
pluggable retriever can replace it later without touching callers.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image, ImageDraw, ImageFont

DEFAULT_K_HUMAN = 3  # anchors shown to human annotators
DEFAULT_K_AGENT = 2  # anchors composed into agent collages

_LABEL_BAR_PX = 18


def normalize_key(key: str) -> str:
    """Case-fold and collapse whitespace so lookups tolerate formatting noise."""
    return re.sub(r"\s+", " ", key.strip()).casefold()


@dataclass(frozen=True)
class AnchorEntry:
    path: str
    source_url: str = ""
    license_note: str = ""


@dataclass
class AnchorIndex:
    entries: dict[str, list[AnchorEntry]] = field(default_factory=dict)
    k_default: int = DEFAULT_K_HUMAN

    @classmethod
    def from_manifest(cls, path: str | Path, k_default: int = DEFAULT_K_HUMAN) -> "AnchorIndex":
        """Load `{key: [{path, source_url, license_note}, ...]}`; keys are normalized."""
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        entries: dict[str, list[AnchorEntry]] = {}
        base = Path(path).parent
        for key, items in raw.items():
            parsed = []
            for item in items:
                p = Path(item["path"])
                if not p.is_absolute():
                    p = base / p
                parsed.append(
                    AnchorEntry(
                        path=str(p),
                        source_url=item.get("source_url", ""),
                        license_note=item.get("license_note", ""),
                    )
                )
            entries[normalize_key(key)] = parsed
        return cls(entries=entries, k_default=k_default)

    def validate(self) -> list[str]:
        """Paths that do not exist on disk."""
        return [
            e.path
            for items in self.entries.values()
            for e in items
            if not Path(e.path).exists()
        ]


def retrieve_anchors(index: AnchorIndex, query: str, k: int | None = None) -> list[str]:
    """First k anchor paths for the normalized query; [] is a miss, not an error."""
    if k is None:
        k = index.k_default
    entry = index.entries.get(normalize_key(query), [])
    return [e.path for e in entry[:k]]


@dataclass(frozen=True)
class CollageSlot:
    index: int
    label: str
    x: int
    y: int
    width: int
    height: int
    path: str


@dataclass(frozen=True)
class Collage:
    image: Image.Image
    slots: tuple[CollageSlot, ...]

    def manifest_dict(self) -> dict:
        return {
            "width": self.image.width,
            "height": self.image.height,
            "slots": [
                {
                    "index": s.index,
                    "label": s.label,
                    "x": s.x,
                    "y": s.y,
                    "width": s.width,
                    "height": s.height,
                    "path": s.path,
                }
                for s in self.slots
            ],
        }


def build_collage(generated: str | Path, anchors: list[str | Path], height: int = 256) -> Collage:
    """Horizontal strip: the generated image leftmost, then labeled references.

    All slots are scaled to a uniform content height (aspect preserved) with a
    text banner above each; output is deterministic for fixed inputs.
    """
    paths = [Path(generated)] + [Path(a) for a in anchors]
    labels = ["generated"] + [f"reference {i + 1}" for i in range(len(anchors))]
    images = []
    for p in paths:
        try:
            with Image.open(p) as im:
                images.append(im.convert("RGB").copy())
        except OSError as e:
            raise ValueError(f"cannot read image {p}: {e}") from e

    content_h = height
    scaled = []
    for im in images:
        w = max(1, round(im.width * content_h / im.height))
        scaled.append(im.resize((w, content_h), Image.LANCZOS))

    total_w = sum(im.width for im in scaled)
    total_h = content_h + _LABEL_BAR_PX
    canvas = Image.new("RGB", (total_w, total_h), (24, 24, 24))
    draw = ImageDraw.Draw(canvas)
    font = ImageFont.load_default()

    slots = []
    x = 0
    for i, (im, label, path) in enumerate(zip(scaled, labels, paths)):
        canvas.paste(im, (x, _LABEL_BAR_PX))
        draw.text((x + 4, 3), label, fill=(255, 255, 255), font=font)
        slots.append(
            CollageSlot(index=i, label=label, x=x, y=0, width=im.width, height=total_h, path=str(path))
        )
        x += im.width
    return Collage(image=canvas, slots=tuple(slots))


def save_collage(collage: Collage, image_path: str | Path, manifest_path: str | Path | None = None) -> None:
    collage.image.save(image_path, format="PNG")
    if manifest_path is not None:
        Path(manifest_path).write_text(
            json.dumps(collage.manifest_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
