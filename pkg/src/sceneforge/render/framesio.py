"""PNG persistence for render channels.

File names follow the fixed per-view layout: camera_color.png (8-bit RGB),
camera_depth.png / camera_semantic.png / camera_instance.png (16-bit
grayscale), camera_normal.png (8-bit encoded normals).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

CHANNEL_FILES = {
    "color": "camera_color.png",
    "depth": "camera_depth.png",
    "normal": "camera_normal.png",
    "semantic": "camera_semantic.png",
    "instance": "camera_instance.png",
}


def save_u16(path: str | Path, array: np.ndarray) -> None:
    img = Image.fromarray(array.astype(np.uint16), mode="I;16")
    img.save(path)


def save_rgb(path: str | Path, array: np.ndarray) -> None:
    Image.fromarray(array.astype(np.uint8), mode="RGB").save(path)


def load_channel(path: str | Path) -> np.ndarray:
    """Load any channel PNG back to its numpy dtype (uint8 RGB or uint16)."""
    with Image.open(path) as img:
        if img.mode in ("I;16", "I"):
            return np.asarray(img, dtype=np.uint16)
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def save_frameset(frames, out_dir: str | Path) -> list[str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_rgb(out / CHANNEL_FILES["color"], frames.color)
    save_u16(out / CHANNEL_FILES["depth"], frames.depth)
    save_rgb(out / CHANNEL_FILES["normal"], frames.normal)
    save_u16(out / CHANNEL_FILES["semantic"], frames.semantic)
    save_u16(out / CHANNEL_FILES["instance"], frames.instance)
    return sorted(CHANNEL_FILES.values())
