"""Deterministic, collision-resistant random streams.

Every random decision in the pipeline draws from a stream derived from
(master_seed, scene_id, stage, slot). Streams are Philox counter-based
generators keyed by a blake2b hash of that tuple, so results are stable
across platforms, runs, and worker counts.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream_key(master_seed: int, scene_id: str, stage: str, slot: int = 0) -> int:
    """128-bit Philox key for the (seed, scene, stage, slot) tuple."""
    material = f"{master_seed & 0xFFFFFFFFFFFFFFFF}|{scene_id}|{stage}|{slot}"
    digest = hashlib.blake2b(material.encode("utf-8"), digest_size=16).digest()
    return int.from_bytes(digest, "little")


def seed_for(master_seed: int, scene_id: str, stage: str, slot: int = 0) -> np.random.Generator:
    """Independent generator for one (scene, stage, slot) cell of a job."""
    return np.random.Generator(np.random.Philox(key=stream_key(master_seed, scene_id, stage, slot)))
