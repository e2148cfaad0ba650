"""The five challenge evaluation metrics.

Voxel-level: dice similarity coefficient, 95th-percentile Hausdorff distance
(mm, over boundary voxels in physical coordinates) and average volume
difference.  Lesion-level: recall and F1, where a lesion is a 3D connected
component and a component counts as detected when it shares at least one
voxel with the other map.  Degenerate inputs (empty masks) yield ``None``
for the affected metrics rather than an arbitrary number.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import ContractError
from .grids import BinaryMask3D, boundary_voxels, connected_components_3d


@dataclass
class MetricReport:
    """Per-case metric values; None marks an undefined (degenerate) metric."""

    dsc: float | None
    h95: float | None
    avd: float | None
    recall: float | None
    f1: float | None
    n_truth_lesions: int = 0
    n_detected_lesions: int = 0
    n_false_lesions: int = 0
    both_empty: bool = False

    def as_row(self) -> dict:
        def fmt(v):
            return "" if v is None else f"{v:.6f}"

        return {
            "dsc": fmt(self.dsc),
            "h95_mm": fmt(self.h95),
            "avd": fmt(self.avd),
            "recall": fmt(self.recall),
            "f1": fmt(self.f1),
        }


def _check_aligned(truth: BinaryMask3D, pred: BinaryMask3D):
    if truth.data.shape != pred.data.shape:
        raise ContractError(
            f"mask shapes differ: {truth.data.shape} vs {pred.data.shape}"
        )


def dsc(truth: BinaryMask3D, pred: BinaryMask3D) -> float:
    """Dice similarity coefficient 2|G n P| / (|G| + |P|); both empty -> 1."""
    _check_aligned(truth, pred)
    vg, vp = truth.population, pred.population
    if vg + vp == 0:
        return 1.0
    overlap = int(np.logical_and(truth.data, pred.data).sum())
    return 2.0 * overlap / (vg + vp)


def hausdorff95(truth: BinaryMask3D, pred: BinaryMask3D, spacing=None) -> float | None:
    """Robust Hausdorff distance: max of the two directed 95th percentiles.

    Distances are Euclidean over boundary voxels in physical (mm)
    coordinates; the percentile is the linear-interpolated order statistic.
    Undefined (None) when either mask is empty.
    """
    _check_aligned(truth, pred)
    if truth.population == 0 or pred.population == 0:
        return None
    spacing = spacing if spacing is not None else truth.spacing
    scale = np.array([spacing[2], spacing[1], spacing[0]])  # coords are (z, y, x)
    a = boundary_voxels(truth) * scale
    b = boundary_voxels(pred) * scale
    d_ab, _ = cKDTree(b).query(a)
    d_ba, _ = cKDTree(a).query(b)
    return float(max(np.percentile(d_ab, 95), np.percentile(d_ba, 95)))


def avd(truth: BinaryMask3D, pred: BinaryMask3D) -> float | None:
    """Average volume difference |V_G - V_P| / V_G; undefined for empty G."""
    _check_aligned(truth, pred)
    vg = truth.population
    if vg == 0:
        return None
    return abs(vg - pred.population) / vg


def _lesion_counts(truth: BinaryMask3D, pred: BinaryMask3D, connectivity: int):
    truth_cc = connected_components_3d(truth, connectivity)
    pred_cc = connected_components_3d(pred, connectivity)

    # Ground-truth components touched by any predicted voxel.
    touched_truth = np.unique(truth_cc.labels[pred.data])
    n_detected = int((touched_truth != 0).sum())
    # Predicted components touched by any truth voxel.
    touched_pred = np.unique(pred_cc.labels[truth.data])
    n_pred_hit = int((touched_pred != 0).sum())
    n_false = pred_cc.count - n_pred_hit
    return truth_cc.count, n_detected, n_pred_hit, n_false


def lesion_recall(truth: BinaryMask3D, pred: BinaryMask3D, connectivity: int = 26):
    """Fraction of ground-truth lesions overlapped by the prediction."""
    _check_aligned(truth, pred)
    n_truth, n_detected, _, _ = _lesion_counts(truth, pred, connectivity)
    if n_truth == 0:
        return None
    return n_detected / n_truth


def lesion_f1(truth: BinaryMask3D, pred: BinaryMask3D, connectivity: int = 26):
    """Fraction of predicted lesions that overlap the ground truth.

    (The challenge's "F1" is algebraically the lesion precision
    N_P / (N_P + N_F); it is implemented exactly as published.)
    """
    _check_aligned(truth, pred)
    _, _, n_pred_hit, n_false = _lesion_counts(truth, pred, connectivity)
    if n_pred_hit + n_false == 0:
        return None
    return n_pred_hit / (n_pred_hit + n_false)


def evaluate_case(truth: BinaryMask3D, pred: BinaryMask3D, spacing=None,
                  connectivity: int = 26) -> MetricReport:
    """All five metrics plus lesion counts for one case."""
    _check_aligned(truth, pred)
    n_truth, n_detected, n_pred_hit, n_false = _lesion_counts(truth, pred, connectivity)
    return MetricReport(
        dsc=dsc(truth, pred),
        h95=hausdorff95(truth, pred, spacing),
        avd=avd(truth, pred),
        recall=(n_detected / n_truth) if n_truth else None,
        f1=(n_pred_hit / (n_pred_hit + n_false)) if (n_pred_hit + n_false) else None,
        n_truth_lesions=n_truth,
        n_detected_lesions=n_detected,
        n_false_lesions=n_false,
        both_empty=(truth.population == 0 and pred.population == 0),
    )
