"""Ensemble inference and post-processing back to the original geometry."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .grids import BinaryMask3D, Volume3D
from .net.unet import DOWNSAMPLE_FACTOR, forward
from .preprocess import PreprocessRecord, invert_crop_or_pad


@dataclass
class EnsembleConfig:
    model_count: int = 3
    threshold: float = 0.5
    z_trim_fraction: float = 0.10

    def __post_init__(self):
        if self.model_count < 1:
            raise ContractError(f"model_count must be >= 1, got {self.model_count}")
        if not 0.0 < self.threshold < 1.0:
            raise ContractError(f"threshold must lie in (0, 1), got {self.threshold}")
        if not 0.0 <= self.z_trim_fraction < 0.5:
            raise ContractError(
                f"z_trim_fraction must lie in [0, 0.5), got {self.z_trim_fraction}"
            )


def _pad_to_multiple(samples: np.ndarray, multiple: int = DOWNSAMPLE_FACTOR):
    """Zero-pad (N, C, H, W) spatial dims up to the next multiple."""
    _, _, h, w = samples.shape
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph == 0 and pw == 0:
        return samples, (h, w)
    padded = np.pad(samples, ((0, 0), (0, 0), (0, ph), (0, pw)))
    return padded, (h, w)


def ensemble_predict(models, spec, samples: np.ndarray) -> np.ndarray:
    """Voxelwise mean of the per-model probability maps.

    ``models`` is a list of weight sets matching ``spec``; ``samples`` is
    (N, C, H, W).  Spatial dims not divisible by the pooling factor are
    zero-padded for the network and cropped back afterwards.  Returns
    (N, H, W) float probabilities.
    """
    if not models:
        raise ContractError("ensemble needs at least one model")
    padded, (h, w) = _pad_to_multiple(np.asarray(samples))
    total = None
    for weights in models:
        pred = forward(spec, weights, padded).astype(np.float64)
        total = pred if total is None else total + pred
    mean = total / len(models)
    return mean[:, :h, :w]


def threshold_map(prob: np.ndarray | Volume3D, threshold: float,
                  spacing=None) -> BinaryMask3D:
    """Binarize a probability map with a strict p > t rule."""
    if isinstance(prob, Volume3D):
        data, spacing = prob.data, prob.spacing
    else:
        data = np.asarray(prob)
        spacing = spacing if spacing is not None else (1.0, 1.0, 1.0)
    if data.min() < 0 or data.max() > 1:
        raise ContractError("probability map values must lie in [0, 1]")
    return BinaryMask3D(data=data > threshold, spacing=spacing)


def postprocess(mask: BinaryMask3D, record: PreprocessRecord,
                z_trim: float = 0.10) -> BinaryMask3D:
    """Clear near-end axial slices, then invert crop/pad to the original dims.

    The first and last floor(z_trim * nz) slices are wiped (anatomically
    implausible detections), then each slice is mapped back through the
    recorded geometry.
    """
    nz = mask.data.shape[0]
    nx, ny, _ = record.original_dims
    if record.original_dims[2] != nz:
        raise ContractError(
            f"mask has {nz} slices but the record says {record.original_dims[2]}"
        )
    trimmed = mask.data.copy()
    n_trim = int(z_trim * nz)
    if n_trim > 0:
        trimmed[:n_trim] = False
        trimmed[nz - n_trim :] = False

    restored = np.stack([
        invert_crop_or_pad(trimmed[z], record.offsets, (ny, nx)).astype(bool)
        for z in range(nz)
    ])
    return BinaryMask3D(data=restored, spacing=mask.spacing)
