"""Per-slice crop/pad, threshold brain masking and Gaussian normalization.

The geometry bookkeeping (PreprocessRecord) lets the prediction path invert
every spatial change exactly, so final masks land back on the original grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .grids import BinaryMask3D, Volume3D, fill_holes_2d, largest_component_2d

DEFAULT_TARGET = (200, 200)
DEFAULT_FLAIR_THRESHOLD = 70.0
DEFAULT_T1_THRESHOLD = 30.0

# Offsets are ((row_low, row_high), (col_low, col_high)); negative = cropped
# on that side, positive = padded.
Offsets = tuple[tuple[int, int], tuple[int, int]]


@dataclass
class CaseRecord:
    """One subject: FLAIR + T1 volumes and (optionally) ground truth."""

    subject_id: str
    scanner_id: str
    flair: Volume3D
    t1: Volume3D
    ground_truth: BinaryMask3D | None = None

    def __post_init__(self):
        shapes = {self.flair.data.shape, self.t1.data.shape}
        spacings = {self.flair.spacing, self.t1.spacing}
        if self.ground_truth is not None:
            shapes.add(self.ground_truth.data.shape)
            spacings.add(self.ground_truth.spacing)
        if len(shapes) != 1 or len(spacings) != 1:
            raise ContractError(
                f"case {self.subject_id}: all grids must share dims and spacing"
            )


@dataclass
class PreprocessRecord:
    """Everything needed to undo preprocessing geometry and audit statistics."""

    original_dims: tuple[int, int, int]          # (nx, ny, nz)
    offsets: Offsets
    thresholds: dict[str, float]
    normalization: dict[str, tuple[float, float]]  # modality -> (mean, std)
    brain_masks: dict[str, BinaryMask3D] = field(default_factory=dict)
    degenerate: bool = False


def _split_excess(excess: int) -> tuple[int, int]:
    # excess > 0: pad amounts; excess < 0: crop amounts (negated). Extra
    # element goes to the high-index side.
    low = abs(excess) // 2
    high = abs(excess) - low
    sign = 1 if excess >= 0 else -1
    return sign * low, sign * high


def crop_or_pad_slice(slice2d: np.ndarray, target=DEFAULT_TARGET):
    """Center-crop or zero-pad a 2D array to ``target`` (rows, cols).

    Returns (output, offsets).  Excess is split evenly with the extra pixel
    on the high side; padding value is 0.
    """
    th, tw = target
    if th <= 0 or tw <= 0:
        raise ContractError(f"target dims must be positive, got {target}")
    slice2d = np.asarray(slice2d)
    h, w = slice2d.shape
    row_off = _split_excess(th - h)
    col_off = _split_excess(tw - w)

    out = slice2d
    for axis, (low, high) in enumerate((row_off, col_off)):
        if low < 0 or high < 0:
            start, stop = -low, out.shape[axis] + high
            out = out[start:stop] if axis == 0 else out[:, start:stop]
        elif low > 0 or high > 0:
            pad = [(0, 0), (0, 0)]
            pad[axis] = (low, high)
            out = np.pad(out, pad, mode="constant", constant_values=0)
    return out, (row_off, col_off)


def invert_crop_or_pad(mask_slice: np.ndarray, offsets: Offsets, original_dims):
    """Undo crop_or_pad_slice on a slice of matching processed size.

    Voxels in the overlap region are preserved exactly; regions that were
    cropped away come back as background.
    """
    mask_slice = np.asarray(mask_slice)
    oh, ow = original_dims
    out = mask_slice
    for axis, (low, high) in enumerate(offsets):
        if low > 0 or high > 0:  # was padded: cut the padding off
            start, stop = low, out.shape[axis] - high
            out = out[start:stop] if axis == 0 else out[:, start:stop]
        elif low < 0 or high < 0:  # was cropped: restore as background
            pad = [(0, 0), (0, 0)]
            pad[axis] = (-low, -high)
            out = np.pad(out, pad, mode="constant", constant_values=0)
    if out.shape != (oh, ow):
        raise ContractError(
            f"offsets {offsets} do not reproduce original dims {original_dims} "
            f"(got {out.shape})"
        )
    return out


def brain_mask(volume: Volume3D, threshold: float) -> BinaryMask3D:
    """Threshold-based brain mask, built slice by slice.

    Per axial slice: voxels above the threshold, then the largest 8-connected
    component, then hole filling.  Slices with no suprathreshold voxel stay
    empty.
    """
    if not np.isfinite(threshold):
        raise ContractError("threshold must be finite")
    out = np.zeros(volume.data.shape, dtype=bool)
    for z in range(volume.n_slices):
        raw = volume.data[z] > threshold
        if not raw.any():
            continue
        out[z] = fill_holes_2d(largest_component_2d(raw))
    return BinaryMask3D(data=out, spacing=volume.spacing)


def gaussian_normalize(volume: Volume3D, mask: BinaryMask3D, std_floor: float = 1e-9):
    """Z-score a scan with mean/std taken over the masked voxels.

    The transform is applied to every voxel, inside and outside the mask.
    Returns (normalized_volume, mean, std, degenerate).  A degenerate case
    (empty mask or ~constant intensities) yields an all-zero volume.
    """
    if mask.data.shape != volume.data.shape:
        raise ContractError("mask is not aligned with the volume")
    values = volume.data[mask.data]
    if values.size == 0:
        return Volume3D(np.zeros(volume.data.shape, np.float32), volume.spacing), 0.0, 0.0, True
    mean = float(values.mean(dtype=np.float64))
    std = float(values.std(dtype=np.float64))  # population std
    if std < std_floor:
        return Volume3D(np.zeros(volume.data.shape, np.float32), volume.spacing), mean, std, True
    normalized = ((volume.data.astype(np.float64) - mean) / std).astype(np.float32)
    return Volume3D(normalized, volume.spacing), mean, std, False


def robust_normalize(volume: Volume3D, mask: BinaryMask3D, std_floor: float = 1e-9):
    """Median/MAD variant of gaussian_normalize (lesion-robust, off by default)."""
    if mask.data.shape != volume.data.shape:
        raise ContractError("mask is not aligned with the volume")
    values = volume.data[mask.data]
    if values.size == 0:
        return Volume3D(np.zeros(volume.data.shape, np.float32), volume.spacing), 0.0, 0.0, True
    med = float(np.median(values))
    mad = float(np.median(np.abs(values - med))) * 1.4826
    if mad < std_floor:
        return Volume3D(np.zeros(volume.data.shape, np.float32), volume.spacing), med, mad, True
    normalized = ((volume.data.astype(np.float64) - med) / mad).astype(np.float32)
    return Volume3D(normalized, volume.spacing), med, mad, False


def preprocess_case(
    case: CaseRecord,
    target=DEFAULT_TARGET,
    flair_threshold: float = DEFAULT_FLAIR_THRESHOLD,
    t1_threshold: float = DEFAULT_T1_THRESHOLD,
    modalities: tuple[str, ...] = ("flair", "t1"),
    robust: bool = False,
):
    """Turn a case into per-slice network samples plus a PreprocessRecord.

    Returns (samples, truth, record) where samples has shape
    (n_slices, channels, target_h, target_w) float32 and truth is either a
    (n_slices, target_h, target_w) bool stack or None.
    """
    volumes = {"flair": case.flair, "t1": case.t1}
    thresholds = {"flair": flair_threshold, "t1": t1_threshold}
    normalize = robust_normalize if robust else gaussian_normalize

    record = PreprocessRecord(
        original_dims=case.flair.dims,
        offsets=((0, 0), (0, 0)),
        thresholds={m: thresholds[m] for m in modalities},
        normalization={},
    )

    channel_stacks = []
    for modality in modalities:
        vol = volumes[modality]
        mask = brain_mask(vol, thresholds[modality])
        normalized, mean, std, degenerate = normalize(vol, mask)
        record.normalization[modality] = (mean, std)
        record.brain_masks[modality] = mask
        record.degenerate = record.degenerate or degenerate

        slices = []
        for z in range(normalized.n_slices):
            out, offsets = crop_or_pad_slice(normalized.data[z], target)
            slices.append(out)
        record.offsets = offsets
        channel_stacks.append(np.stack(slices).astype(np.float32))

    samples = np.stack(channel_stacks, axis=1)  # (n, C, H, W)

    truth = None
    if case.ground_truth is not None:
        truth_slices = [
            crop_or_pad_slice(case.ground_truth.data[z], target)[0]
            for z in range(case.ground_truth.data.shape[0])
        ]
        truth = np.stack(truth_slices).astype(bool)

    return samples, truth, record


def write_record(record: PreprocessRecord, path) -> None:
    """Serialize the scalar fields of a PreprocessRecord as key=value lines."""
    nx, ny, nz = record.original_dims
    lines = [
        f"original_dims={nx},{ny},{nz}",
        f"offsets_rows={record.offsets[0][0]},{record.offsets[0][1]}",
        f"offsets_cols={record.offsets[1][0]},{record.offsets[1][1]}",
        f"degenerate={int(record.degenerate)}",
    ]
    for modality, thr in record.thresholds.items():
        lines.append(f"threshold_{modality}={thr!r}")
    for modality, (mean, std) in record.normalization.items():
        lines.append(f"mean_{modality}={mean!r}")
        lines.append(f"std_{modality}={std!r}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_record(path) -> PreprocessRecord:
    """Parse a record file written by write_record (masks are not restored)."""
    kv = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line and "=" in line:
                key, value = line.split("=", 1)
                kv[key] = value
    nx, ny, nz = (int(v) for v in kv["original_dims"].split(","))
    rows = tuple(int(v) for v in kv["offsets_rows"].split(","))
    cols = tuple(int(v) for v in kv["offsets_cols"].split(","))
    thresholds = {}
    normalization = {}
    for key, value in kv.items():
        if key.startswith("threshold_"):
            thresholds[key[len("threshold_"):]] = float(value)
        elif key.startswith("mean_"):
            modality = key[len("mean_"):]
            normalization[modality] = (float(value), float(kv[f"std_{modality}"]))
    return PreprocessRecord(
        original_dims=(nx, ny, nz),
        offsets=(rows, cols),
        thresholds=thresholds,
        normalization=normalization,
        degenerate=bool(int(kv.get("degenerate", "0"))),
    )
