"""Random per-slice affine augmentation: rotation, shear and scaling.

Transforms compose as scale @ shear @ rotation about the slice center.
Shear acts along the x axis.  Sampling is uniform within the configured
ranges and fully determined by (seed, sample index, copy index).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ROTATION_RANGE = (-15.0, 15.0)   # degrees
SHEAR_RANGE = (-18.0, 18.0)      # degrees
SCALE_RANGE = (0.9, 1.1)


@dataclass(frozen=True)
class AffineParams:
    rotation_deg: float = 0.0
    shear_deg: float = 0.0
    scale_x: float = 1.0
    scale_y: float = 1.0

    def matrix(self) -> np.ndarray:
        """Forward 2x2 map acting on (x, y) offsets from the slice center."""
        theta = np.deg2rad(self.rotation_deg)
        rot = np.array([[np.cos(theta), -np.sin(theta)],
                        [np.sin(theta), np.cos(theta)]])
        shear = np.array([[1.0, np.tan(np.deg2rad(self.shear_deg))],
                          [0.0, 1.0]])
        scale = np.diag([self.scale_x, self.scale_y])
        return scale @ shear @ rot


def sample_affine(rng: np.random.Generator) -> AffineParams:
    """Draw parameters uniformly within the augmentation ranges."""
    return AffineParams(
        rotation_deg=float(rng.uniform(*ROTATION_RANGE)),
        shear_deg=float(rng.uniform(*SHEAR_RANGE)),
        scale_x=float(rng.uniform(*SCALE_RANGE)),
        scale_y=float(rng.uniform(*SCALE_RANGE)),
    )


def apply_affine(slice2d: np.ndarray, params: AffineParams, interpolation: str = "bilinear"):
    """Resample a 2D array under the affine map, about the slice center.

    Out-of-bounds samples read as 0.  Use "bilinear" for images and
    "nearest" for label masks; output dims equal input dims either way.
    """
    if interpolation not in ("bilinear", "nearest"):
        raise ValueError(f"unknown interpolation {interpolation!r}")
    slice2d = np.asarray(slice2d)
    h, w = slice2d.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0

    inv = np.linalg.inv(params.matrix())
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    dx, dy = xs - cx, ys - cy
    src_x = inv[0, 0] * dx + inv[0, 1] * dy + cx
    src_y = inv[1, 0] * dx + inv[1, 1] * dy + cy

    if interpolation == "nearest":
        ix = np.rint(src_x).astype(np.int64)
        iy = np.rint(src_y).astype(np.int64)
        valid = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
        out = np.zeros_like(slice2d)
        out[valid] = slice2d[iy[valid], ix[valid]]
        return out

    x0 = np.floor(src_x).astype(np.int64)
    y0 = np.floor(src_y).astype(np.int64)
    fx, fy = src_x - x0, src_y - y0
    out = np.zeros((h, w), dtype=np.float64)
    for dyy, dxx, weight in (
        (0, 0, (1 - fy) * (1 - fx)),
        (0, 1, (1 - fy) * fx),
        (1, 0, fy * (1 - fx)),
        (1, 1, fy * fx),
    ):
        yy, xx = y0 + dyy, x0 + dxx
        valid = (xx >= 0) & (xx < w) & (yy >= 0) & (yy < h)
        contrib = np.zeros((h, w), dtype=np.float64)
        contrib[valid] = slice2d[yy[valid], xx[valid]]
        out += weight * contrib
    return out.astype(slice2d.dtype if np.issubdtype(slice2d.dtype, np.floating) else np.float64)


def transform_for(seed: int, sample_index: int, copy_index: int) -> AffineParams:
    """Deterministic per-copy transform derived from (seed, indices)."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, sample_index, copy_index)))
    return sample_affine(rng)


def augment_dataset(samples: np.ndarray, labels: np.ndarray | None, factor: int, seed: int):
    """Expand a dataset ``factor``-fold with affine-transformed copies.

    ``samples`` is (N, C, H, W); ``labels`` (N, H, W) bool or None.  Output
    keeps every original sample and appends (factor - 1) transformed copies
    each; a sample and its label share identical parameters (image channels
    bilinear, labels nearest).
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if factor == 1:
        return samples, labels

    out_samples = [samples]
    out_labels = [labels] if labels is not None else None
    n = samples.shape[0]
    for j in range(1, factor):
        batch_s = np.empty_like(samples)
        batch_l = np.empty_like(labels) if labels is not None else None
        for i in range(n):
            params = transform_for(seed, i, j)
            for c in range(samples.shape[1]):
                batch_s[i, c] = apply_affine(samples[i, c], params, "bilinear")
            if labels is not None:
                batch_l[i] = apply_affine(labels[i], params, "nearest")
        out_samples.append(batch_s)
        if out_labels is not None:
            out_labels.append(batch_l)

    aug_samples = np.concatenate(out_samples)
    aug_labels = np.concatenate(out_labels) if out_labels is not None else None
    return aug_samples, aug_labels
