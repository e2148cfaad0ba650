"""Command line interface.

Subcommands: phantom, split, preprocess, train, predict, evaluate, rank,
sweep, stats.  Global flags --seed, --workers and --config FILE (plain
key=value lines supplying defaults for any option name).  Exit code is 0 on
success; failures print one machine-readable line "ERROR <kind>: <message>"
to stderr and exit nonzero.
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import click
import numpy as np

from . import datasets
from .augment import augment_dataset
from .ensemble import EnsembleConfig
from .errors import WmhsegError
from .grids import Volume3D
from .metrics import evaluate_case
from .net.training import TrainConfig, train
from .net.unet import build_unet
from .net.weights_io import load_weights, save_weights
from .nifti import read_nifti, read_nifti_mask, write_nifti
from .phantom import PhantomSpec, phantom_generate
from .pipeline import case_training_arrays, predict_case
from .preprocess import CaseRecord, preprocess_case, write_record
from .ranking import rank_teams, read_team_csv, write_rank_csv
from .splits import split_cross_scanner, split_loso, split_ratio
from .stats import benjamini_hochberg, wilcoxon_signed_rank
from .sweep import ensemble_sweep


def _load_config_defaults(path) -> dict:
    defaults = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, value = (s.strip() for s in line.split("=", 1))
            defaults[key.replace("-", "_")] = value
    return defaults


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Global random seed.")
@click.option("--workers", type=int, default=1, show_default=True,
              help="Worker count for parallel jobs.")
@click.option("--config", "config_file", type=click.Path(exists=True), default=None,
              help="key=value file with option defaults.")
@click.pass_context
def main(ctx, seed, workers, config_file):
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    ctx.obj["workers"] = workers
    if config_file:
        defaults = _load_config_defaults(config_file)
        ctx.default_map = {cmd: defaults for cmd in main.commands}
        ctx.obj["seed"] = int(defaults.get("seed", seed))
        ctx.obj["workers"] = int(defaults.get("workers", workers))


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--count", type=int, default=20, show_default=True)
@click.option("--dims", default="64,64,16", show_default=True, help="nx,ny,nz")
@click.option("--lesions", default="3,6", show_default=True, help="min,max lesion count")
@click.pass_context
def phantom(ctx, out_dir, count, dims, lesions):
    """Generate a synthetic phantom dataset with ground truth."""
    nx, ny, nz = (int(v) for v in dims.split(","))
    lo, hi = (int(v) for v in lesions.split(","))
    spec = PhantomSpec(dims=(nx, ny, nz), lesion_count_range=(lo, hi),
                       seed=ctx.obj["seed"])
    cases = phantom_generate(spec, count)
    datasets.save_dataset(cases, out_dir)
    click.echo(f"wrote {count} phantom cases to {out_dir}")


@main.command()
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--kind", type=click.Choice(["subject", "scanner", "ratio"]), default="subject",
              show_default=True)
@click.option("--test-fraction", type=float, default=0.2, show_default=True)
@click.option("--out", "out_csv", required=True, type=click.Path())
@click.pass_context
def split(ctx, data_dir, kind, test_fraction, out_csv):
    """Write split plans (fold, role, subject) as CSV."""
    cases = datasets.load_dataset(data_dir)
    if kind == "subject":
        plans = split_loso(cases)
    elif kind == "scanner":
        plans = split_cross_scanner(cases)
    else:
        plans = [split_ratio(cases, test_fraction, seed=ctx.obj["seed"])]
    with open(out_csv, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["fold_id", "role", "subject_id"])
        for plan in plans:
            for sid in plan.train_ids:
                writer.writerow([plan.fold_id, "train", sid])
            for sid in plan.test_ids:
                writer.writerow([plan.fold_id, "test", sid])
    click.echo(f"wrote {len(plans)} folds to {out_csv}")


@main.command()
@click.option("--flair", required=True, type=click.Path(exists=True))
@click.option("--t1", "t1_path", required=True, type=click.Path(exists=True))
@click.option("--gt", "gt_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--flair-thresh", type=float, default=70.0, show_default=True)
@click.option("--t1-thresh", type=float, default=30.0, show_default=True)
@click.option("--target", default="200,200", show_default=True)
def preprocess(flair, t1_path, gt_path, out_dir, flair_thresh, t1_thresh, target):
    """Preprocess one case: normalized slice stacks + sidecar record."""
    th, tw = (int(v) for v in target.split(","))
    case = CaseRecord(
        subject_id="case", scanner_id="unknown",
        flair=read_nifti(flair), t1=read_nifti(t1_path),
        ground_truth=read_nifti_mask(gt_path) if gt_path else None,
    )
    samples, truth, record = preprocess_case(
        case, target=(th, tw), flair_threshold=flair_thresh, t1_threshold=t1_thresh
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spacing = case.flair.spacing
    for ci, name in enumerate(("flair", "t1")):
        write_nifti(Volume3D(samples[:, ci], spacing), out / f"{name}_norm.nii.gz")
    if truth is not None:
        from .grids import BinaryMask3D

        write_nifti(BinaryMask3D(truth, spacing), out / "gt_aligned.nii.gz")
    write_record(record, out / "record.txt")
    click.echo(f"wrote preprocessed stacks and record to {out_dir}")


@main.command(name="train")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--epochs", type=int, default=50, show_default=True)
@click.option("--batch", type=int, default=30, show_default=True)
@click.option("--lr", type=float, default=2e-4, show_default=True)
@click.option("--base-width", type=int, default=64, show_default=True)
@click.option("--input-channels", type=int, default=2, show_default=True)
@click.option("--augment-factor", type=int, default=1, show_default=True)
@click.option("--stop-loss", type=float, default=None,
              help="Early stop once epoch loss falls below this value.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def train_cmd(ctx, data_dir, epochs, batch, lr, base_width, input_channels,
              augment_factor, stop_loss, out_path):
    """Train a single model on a dataset directory."""
    cases = datasets.load_dataset(data_dir)
    cases = [c for c in cases if c.ground_truth is not None]
    modalities = ("flair", "t1")[:input_channels]
    x, g = case_training_arrays(cases, modalities=modalities)
    if augment_factor > 1:
        x, g = augment_dataset(x, g, augment_factor, ctx.obj["seed"])
    spec = build_unet(input_channels=input_channels, base_width=base_width)
    config = TrainConfig(batch_size=batch, learning_rate=lr, epochs=epochs,
                         seed=ctx.obj["seed"], stop_loss=stop_loss)
    weights, history = train(spec, x, g, config)
    save_weights(out_path, spec, weights)
    click.echo(f"final training loss {history['train_loss'][-1]:.4f} "
               f"after {len(history['train_loss'])} epochs; model -> {out_path}")


@main.command()
@click.option("--models", required=True, help="Comma-separated weight files.")
@click.option("--flair", required=True, type=click.Path(exists=True))
@click.option("--t1", "t1_path", required=True, type=click.Path(exists=True))
@click.option("--threshold", type=float, default=0.5, show_default=True)
@click.option("--z-trim", type=float, default=0.10, show_default=True)
@click.option("--target", default="200,200", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def predict(models, flair, t1_path, threshold, z_trim, target, out_path):
    """Segment a case with a model ensemble; writes a binary mask."""
    paths = [p for p in models.split(",") if p]
    loaded = [load_weights(p) for p in paths]
    spec = loaded[0][0]
    weight_sets = [w for _, w in loaded]
    th, tw = (int(v) for v in target.split(","))
    case = CaseRecord(subject_id="case", scanner_id="unknown",
                      flair=read_nifti(flair), t1=read_nifti(t1_path))
    modalities = ("flair", "t1")[: spec.input_channels]
    config = EnsembleConfig(model_count=len(weight_sets), threshold=threshold,
                            z_trim_fraction=z_trim)
    mask = predict_case(case, spec, weight_sets, config, target=(th, tw),
                        modalities=modalities)
    write_nifti(mask, out_path)
    click.echo(f"wrote segmentation ({mask.population} voxels) to {out_path}")


@main.command()
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True))
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--team", default="case", show_default=True)
def evaluate(gt_path, pred_path, team):
    """Print one CSV row with the five metrics."""
    truth = read_nifti_mask(gt_path)
    pred = read_nifti_mask(pred_path)
    report = evaluate_case(truth, pred, spacing=truth.spacing)
    row = report.as_row()
    click.echo("team,dsc,h95_mm,avd,recall,f1")
    click.echo(",".join([team, row["dsc"], row["h95_mm"], row["avd"],
                         row["recall"], row["f1"]]))


@main.command()
@click.option("--table", "table_csv", required=True, type=click.Path(exists=True))
@click.option("--out", "out_csv", default=None, type=click.Path())
def rank(table_csv, out_csv):
    """Rank teams from a metric table CSV (columns team,dsc,h95_mm,avd,recall,f1)."""
    ranked = rank_teams(read_team_csv(table_csv))
    order = sorted(ranked.teams, key=lambda t: ranked.final[t])
    for t in order:
        click.echo(f"{t},{ranked.final[t]:.6f}")
    if out_csv:
        write_rank_csv(ranked, out_csv)
        click.echo(f"wrote rank table to {out_csv}")


@main.command()
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--sizes", default="1,3,5", show_default=True)
@click.option("--repeats", type=int, default=5, show_default=True)
@click.option("--epochs", type=int, default=15, show_default=True)
@click.option("--batch", type=int, default=30, show_default=True)
@click.option("--lr", type=float, default=2e-4, show_default=True)
@click.option("--base-width", type=int, default=8, show_default=True)
@click.option("--out", "out_csv", required=True, type=click.Path())
@click.pass_context
def sweep(ctx, data_dir, sizes, repeats, epochs, batch, lr, base_width, out_csv):
    """Ensemble-size sweep on a dataset with ground truth."""
    cases = datasets.load_dataset(data_dir)
    spec = build_unet(input_channels=2, base_width=base_width)
    config = TrainConfig(batch_size=batch, learning_rate=lr, epochs=epochs,
                         seed=ctx.obj["seed"])
    result = ensemble_sweep(
        cases, [int(s) for s in sizes.split(",")], repeats, spec, config,
        seed=ctx.obj["seed"], workers=ctx.obj["workers"],
    )
    result.to_csv(out_csv)
    click.echo(f"wrote sweep summary to {out_csv}")


@main.command()
@click.option("--input", "input_csv", required=True, type=click.Path(exists=True),
              help="CSV of paired differences, one column per comparison.")
@click.option("--out", "out_csv", default=None, type=click.Path())
def stats(input_csv, out_csv):
    """Wilcoxon signed-rank p-values per column, FDR-adjusted across columns."""
    with open(input_csv, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        columns = {name: [] for name in header}
        for row in reader:
            for name, value in zip(header, row):
                if value != "":
                    columns[name].append(float(value))
    p_values = [wilcoxon_signed_rank(np.array(columns[name])) for name in header]
    adjusted = benjamini_hochberg([p for p in p_values if not np.isnan(p)])
    adj_iter = iter(adjusted)
    rows = []
    for name, p in zip(header, p_values):
        adj = float("nan") if np.isnan(p) else float(next(adj_iter))
        rows.append((name, p, adj))
        click.echo(f"{name},{p:.6g},{adj:.6g}")
    if out_csv:
        with open(out_csv, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["comparison", "p_value", "p_adjusted"])
            writer.writerows(rows)


def run():
    try:
        main(standalone_mode=False)
    except WmhsegError as exc:
        print(f"ERROR {type(exc).__name__}: {exc}", file=sys.stderr)
        sys.exit(2)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code or 1)
    except click.Abort:
        sys.exit(130)


if __name__ == "__main__":
    run()
