"""White-matter-hyperintensity segmentation: preprocessing, a 2D FCN
ensemble trained with Dice loss, challenge metrics, rank scoring and an
experiment harness with synthetic phantoms."""

from .grids import (
    BinaryMask3D,
    ComponentLabeling,
    Volume3D,
    boundary_voxels,
    connected_components_3d,
    fill_holes_2d,
    largest_component_2d,
)
from .metrics import MetricReport, avd, dsc, evaluate_case, hausdorff95, lesion_f1, lesion_recall
from .nifti import read_nifti, read_nifti_mask, write_nifti
from .preprocess import CaseRecord, PreprocessRecord, preprocess_case
from .ranking import RankTable, rank_teams

__version__ = "0.1.0"
