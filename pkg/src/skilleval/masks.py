"""Run-length encoded binary brush masks.

Wire format (UI <-> core, and on-disk): ``{"width": W, "height": H, "runs": [...]}``
where ``runs`` holds alternating run lengths in row-major pixel order, starting
with a run of zeros (the first entry is 0 when the mask begins with a marked
pixel).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class BrushMask:
    width: int
    height: int
    runs: tuple[int, ...]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("mask dimensions must be positive")
        if any(r < 0 for r in self.runs):
            raise ValueError("run lengths must be non-negative")
        if sum(self.runs) != self.width * self.height:
            raise ValueError(
                f"run lengths sum to {sum(self.runs)}, expected {self.width * self.height}"
            )

    @property
    def marked_pixels(self) -> int:
        # Odd-indexed runs are runs of ones.
        return sum(self.runs[1::2])

    def to_array(self) -> np.ndarray:
        """Decode to a (height, width) uint8 array."""
        flat = np.zeros(self.width * self.height, dtype=np.uint8)
        pos = 0
        value = 0
        for run in self.runs:
            if value:
                flat[pos : pos + run] = 1
            pos += run
            value = 1 - value
        return flat.reshape(self.height, self.width)

    def to_json_dict(self) -> dict:
        return {"width": self.width, "height": self.height, "runs": list(self.runs)}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_dict(cls, d: dict) -> "BrushMask":
        try:
            width, height, runs = d["width"], d["height"], d["runs"]
        except (KeyError, TypeError) as e:
            raise ValueError(f"malformed mask object: missing {e}") from None
        if not isinstance(runs, (list, tuple)):
            raise ValueError("mask runs must be a list")
        return cls(width=int(width), height=int(height), runs=tuple(int(r) for r in runs))

    @classmethod
    def from_json(cls, text: str) -> "BrushMask":
        return cls.from_json_dict(json.loads(text))

    @classmethod
    def from_array(cls, array: np.ndarray) -> "BrushMask":
        """Encode a (height, width) binary array canonically.

        Canonical form: first run counts zeros (may be 0), no other zero-length
        runs, no trailing empty run.
        """
        array = np.asarray(array)
        if array.ndim != 2:
            raise ValueError("mask array must be 2-D")
        height, width = array.shape
        flat = (array.reshape(-1) != 0).astype(np.int8)
        change = np.flatnonzero(np.diff(flat)) + 1
        bounds = np.concatenate(([0], change, [flat.size]))
        runs = np.diff(bounds).tolist()
        if flat[0] == 1:
            runs = [0] + runs
        return cls(width=width, height=height, runs=tuple(int(r) for r in runs))

    @classmethod
    def empty(cls, width: int, height: int) -> "BrushMask":
        return cls(width=width, height=height, runs=(width * height,))

    @classmethod
    def full(cls, width: int, height: int) -> "BrushMask":
        return cls(width=width, height=height, runs=(0, width * height))


def mask_to_ratio(mask: BrushMask) -> float:
    """Fraction of pixels marked as artifacts, in [0, 1]."""
    return mask.marked_pixels / (mask.width * mask.height)


def load_mask_file(path: str | Path) -> BrushMask:
    return BrushMask.from_json(Path(path).read_text(encoding="utf-8"))
