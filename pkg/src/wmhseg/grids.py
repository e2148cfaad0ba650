"""Core 3D/2D grid types plus connected components, morphology and boundaries.

Volumes are stored axial-slice-major: ``data[z, y, x]``, so per-slice
operations touch contiguous memory.  ``dims`` follows the (nx, ny, nz)
convention of the NIfTI header, ``spacing`` is (sx, sy, sz) in mm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ContractError

# 2D slices use 8-connectivity for foreground, 4-connectivity for the
# background complement (standard duality).
_STRUCT_2D_FG = np.ones((3, 3), dtype=bool)


def _structure_3d(connectivity: int) -> np.ndarray:
    if connectivity not in (6, 18, 26):
        raise ContractError(f"3D connectivity must be 6, 18 or 26, got {connectivity}")
    order = {6: 1, 18: 2, 26: 3}[connectivity]
    return ndimage.generate_binary_structure(3, order)


@dataclass
class Volume3D:
    """A 3D scalar grid with voxel spacing in mm.

    ``data`` has shape (nz, ny, nx); ``spacing`` is (sx, sy, sz).
    """

    data: np.ndarray
    spacing: tuple[float, float, float]

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 3:
            raise ContractError(f"Volume3D data must be 3D, got ndim={self.data.ndim}")
        self.spacing = tuple(float(s) for s in self.spacing)
        if len(self.spacing) != 3 or any(s <= 0 for s in self.spacing):
            raise ContractError(f"spacing components must be positive, got {self.spacing}")

    @property
    def dims(self) -> tuple[int, int, int]:
        nz, ny, nx = self.data.shape
        return (nx, ny, nz)

    @property
    def n_slices(self) -> int:
        return self.data.shape[0]


@dataclass
class BinaryMask3D:
    """A boolean grid aligned with a Volume3D."""

    data: np.ndarray
    spacing: tuple[float, float, float]

    def __post_init__(self):
        self.data = np.asarray(self.data).astype(bool)
        if self.data.ndim != 3:
            raise ContractError(f"BinaryMask3D data must be 3D, got ndim={self.data.ndim}")
        self.spacing = tuple(float(s) for s in self.spacing)
        if len(self.spacing) != 3 or any(s <= 0 for s in self.spacing):
            raise ContractError(f"spacing components must be positive, got {self.spacing}")

    @property
    def dims(self) -> tuple[int, int, int]:
        nz, ny, nx = self.data.shape
        return (nx, ny, nz)

    @property
    def population(self) -> int:
        return int(self.data.sum())

    def aligned_with(self, other) -> bool:
        return self.data.shape == other.data.shape and self.spacing == other.spacing


@dataclass
class ComponentLabeling:
    """Result of 3D connected-component labeling.

    ``labels`` holds one nonnegative integer per voxel (0 = background);
    label values form the contiguous set {0..count}, assigned in
    first-encounter scan order.
    """

    labels: np.ndarray
    count: int
    connectivity: int


def _relabel_scan_order(labels: np.ndarray, count: int) -> np.ndarray:
    """Remap labels so they are numbered by first appearance in C scan order."""
    if count == 0:
        return labels
    flat = labels.ravel()
    values, first_idx = np.unique(flat, return_index=True)
    nonzero = values != 0
    values, first_idx = values[nonzero], first_idx[nonzero]
    order = np.argsort(first_idx)
    remap = np.zeros(count + 1, dtype=labels.dtype)
    remap[values[order]] = np.arange(1, len(values) + 1)
    return remap[labels]


def connected_components_3d(mask: BinaryMask3D, connectivity: int = 26) -> ComponentLabeling:
    """Label 3D connected components under 6/18/26-connectivity.

    Labels are deterministic: component k is the k-th one encountered in a
    (z, y, x) raster scan.  An empty mask yields count 0.
    """
    structure = _structure_3d(connectivity)
    labels, count = ndimage.label(mask.data, structure=structure)
    labels = _relabel_scan_order(labels, count)
    return ComponentLabeling(labels=labels, count=int(count), connectivity=connectivity)


def largest_component_2d(mask_slice: np.ndarray) -> np.ndarray:
    """Keep only the largest 8-connected component of a 2D boolean grid.

    Ties are broken in favor of the component encountered first in scan
    order.  An empty slice maps to an empty slice.
    """
    mask_slice = np.asarray(mask_slice, dtype=bool)
    labels, count = ndimage.label(mask_slice, structure=_STRUCT_2D_FG)
    if count == 0:
        return np.zeros_like(mask_slice)
    labels = _relabel_scan_order(labels, count)
    sizes = np.bincount(labels.ravel(), minlength=count + 1)
    best = 1 + int(np.argmax(sizes[1:]))  # argmax keeps the lowest (earliest) label on ties
    return labels == best


def fill_holes_2d(mask_slice: np.ndarray) -> np.ndarray:
    """Fill background regions not 4-connected to the slice border."""
    mask_slice = np.asarray(mask_slice, dtype=bool)
    return ndimage.binary_fill_holes(mask_slice)


_NEIGHBORS_6 = [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)]


def boundary_voxels(mask: BinaryMask3D) -> np.ndarray:
    """Coordinates (z, y, x) of foreground voxels with a background 6-neighbor.

    Voxels on the grid border count as boundary (outside is background).
    Returns an (n, 3) integer array, empty for an empty mask.
    """
    m = mask.data
    if not m.any():
        return np.zeros((0, 3), dtype=np.int64)
    padded = np.pad(m, 1, mode="constant", constant_values=False)
    interior = np.ones_like(m, dtype=bool)
    for dz, dy, dx in _NEIGHBORS_6:
        interior &= padded[
            1 + dz : 1 + dz + m.shape[0],
            1 + dy : 1 + dy + m.shape[1],
            1 + dx : 1 + dx + m.shape[2],
        ]
    return np.argwhere(m & ~interior)
