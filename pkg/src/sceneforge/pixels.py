"""Pixel-stage operations: depth sensor noise models 0-4 and semantic
label remapping. Depth frames are handled as float64 millimeters; callers
quantize back to uint16 when persisting.

Model 4 follows the disparity-quantization formulation common to Kinect
simulators: quantize K/d with additive disparity noise, then resample the
frame under per-pixel Gaussian coordinate shifts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import AssetCatalog

KINECT_K = 35130.0
DEPTH_MAX = 65535.0

NOISE_NONE = 0
NOISE_GAUSSIAN = 1
NOISE_POISSON = 2
NOISE_SALT_PEPPER = 3
NOISE_KINECT = 4


@dataclass
class NoiseConfig:
    sigma: float = 25.0  # gaussian, mm
    scale: float = 10.0  # poisson bucket, mm
    p: float = 0.05  # salt-and-pepper corruption probability
    salt_value: float = DEPTH_MAX
    pepper_value: float = 0.0
    sigma_disp: float = 0.5  # kinect disparity noise
    sigma_shift: float = 0.5  # kinect pixel shift, px

    def validate(self) -> None:
        if self.sigma < 0 or self.sigma_disp < 0 or self.sigma_shift < 0:
            raise ValueError("noise sigmas must be >= 0")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("salt-and-pepper p must lie in [0, 1]")
        if self.scale <= 0:
            raise ValueError("poisson scale must be positive")


def apply_noise(
    depth: np.ndarray,
    model: int,
    rng: np.random.Generator,
    config: NoiseConfig | None = None,
) -> np.ndarray:
    """Apply one noise model; no-hit pixels (0) stay 0 in every model."""
    cfg = config or NoiseConfig()
    cfg.validate()
    d = np.asarray(depth, dtype=np.float64)
    mask = d > 0

    if model == NOISE_NONE:
        return d.copy()

    if model == NOISE_GAUSSIAN:
        noisy = np.clip(d + rng.normal(0.0, cfg.sigma, size=d.shape), 0.0, DEPTH_MAX)
        return np.where(mask, noisy, 0.0)

    if model == NOISE_POISSON:
        noisy = rng.poisson(d / cfg.scale).astype(np.float64) * cfg.scale
        return np.where(mask, np.clip(noisy, 0.0, DEPTH_MAX), 0.0)

    if model == NOISE_SALT_PEPPER:
        u = rng.random(size=d.shape)
        out = d.copy()
        out[mask & (u < cfg.p / 2)] = cfg.salt_value
        out[mask & (u >= cfg.p / 2) & (u < cfg.p)] = cfg.pepper_value
        return out

    if model == NOISE_KINECT:
        with np.errstate(divide="ignore", invalid="ignore"):
            disparity = np.where(mask, KINECT_K / np.maximum(d, 1e-9), 0.0)
        q = np.rint(disparity + rng.normal(0.0, cfg.sigma_disp, size=d.shape))
        with np.errstate(divide="ignore", invalid="ignore"):
            quantized = np.where(q > 0, KINECT_K / np.maximum(q, 1e-9), 0.0)
        quantized = np.where(mask, quantized, 0.0)
        h, w = d.shape
        dy = np.rint(rng.normal(0.0, cfg.sigma_shift, size=d.shape)).astype(np.int64)
        dx = np.rint(rng.normal(0.0, cfg.sigma_shift, size=d.shape)).astype(np.int64)
        ys = np.clip(np.arange(h)[:, None] + dy, 0, h - 1)
        xs = np.clip(np.arange(w)[None, :] + dx, 0, w - 1)
        shifted = quantized[ys, xs]
        return np.where(mask, np.clip(shifted, 0.0, DEPTH_MAX), 0.0)

    raise ValueError(f"unknown noise model {model}")


def remap_labels(semantic: np.ndarray, mapping_name: str, catalog: AssetCatalog) -> np.ndarray:
    """Per-pixel label mapping; background 0 stays 0."""
    frame = np.asarray(semantic)
    if mapping_name == "identity":
        return frame.copy()
    mapping = catalog.taxonomy.mappings.get(mapping_name)
    if mapping is None:
        from .catalog import CatalogError

        raise CatalogError(f"unknown label mapping {mapping_name!r}")
    top = int(frame.max(initial=0))
    lut = np.full(top + 1, mapping.other_id, dtype=frame.dtype)
    for cid, tid in mapping.table.items():
        if 0 < cid <= top:
            lut[cid] = tid
    lut[0] = 0
    return lut[frame]
