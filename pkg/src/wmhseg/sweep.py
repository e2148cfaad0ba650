"""Ensemble-size sweep: repeated trainings, held-out evaluation, mean/std."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .ensemble import EnsembleConfig
from .errors import ConfigurationError
from .metrics import MetricReport, evaluate_case
from .net.training import TrainConfig, train
from .pipeline import case_training_arrays, predict_case
from .splits import split_ratio

METRICS = ("dsc", "h95", "avd", "recall", "f1")


@dataclass
class SweepResult:
    sizes: tuple[int, ...]
    repeats: int
    # metric -> size -> (mean, std) over repeats
    summary: dict[str, dict[int, tuple[float, float]]]

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["size"] + [f"{m}_{s}" for m in METRICS for s in ("mean", "std")])
            for size in self.sizes:
                row = [size]
                for m in METRICS:
                    mean, std = self.summary[m][size]
                    row += [f"{mean:.6f}", f"{std:.6f}"]
                writer.writerow(row)


def _mean_metrics(reports: list[MetricReport]) -> dict[str, float]:
    out = {}
    for m in METRICS:
        values = [getattr(r, m) for r in reports if getattr(r, m) is not None]
        out[m] = float(np.mean(values)) if values else float("nan")
    return out


def ensemble_sweep(
    cases,
    sizes,
    repeats: int,
    spec,
    train_config: TrainConfig,
    eval_fraction: float = 0.2,
    threshold: float = 0.5,
    z_trim: float = 0.10,
    seed: int = 0,
    workers: int = 1,
) -> SweepResult:
    """Train size*repeats models per ensemble size and summarize metrics.

    Cases are split once (stratified by scanner) into training and held-out
    evaluation sets; each (size, repeat) cell trains its own models with a
    derived seed, evaluates the averaged ensemble on the held-out cases and
    the per-size mean/std is taken across repeats.
    """
    sizes = tuple(sizes)
    if not sizes:
        raise ConfigurationError("sizes must be nonempty")
    if repeats < 2:
        raise ConfigurationError(f"repeats must be >= 2, got {repeats}")
    if len(cases) < 2:
        raise ConfigurationError("need at least two cases to split")

    plan = split_ratio(cases, test_fraction=eval_fraction, seed=seed)
    by_id = {c.subject_id: c for c in cases}
    train_cases = [by_id[i] for i in plan.train_ids]
    eval_cases = [by_id[i] for i in plan.test_ids]
    x, g = case_training_arrays(train_cases)

    jobs = []
    for size in sizes:
        for repeat in range(repeats):
            for member in range(size):
                jobs.append((size, repeat, member))

    def train_one(job):
        size, repeat, member = job
        model_seed = hash((seed, size, repeat, member)) & 0x7FFFFFFF
        cfg = replace(train_config, seed=model_seed)
        weights, _ = train(spec, x, g, cfg)
        return job, weights

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            trained = dict(pool.map(train_one, jobs))
    else:
        trained = dict(map(train_one, jobs))

    per_metric: dict[str, dict[int, list[float]]] = {m: {s: [] for s in sizes} for m in METRICS}
    for size in sizes:
        for repeat in range(repeats):
            models = [trained[(size, repeat, member)] for member in range(size)]
            config = EnsembleConfig(model_count=size, threshold=threshold,
                                    z_trim_fraction=z_trim)
            reports = []
            for case in eval_cases:
                pred = predict_case(case, spec, models, config,
                                    target=case.flair.data.shape[1:])
                reports.append(evaluate_case(case.ground_truth, pred,
                                             spacing=case.flair.spacing))
            means = _mean_metrics(reports)
            for m in METRICS:
                per_metric[m][size].append(means[m])

    summary = {
        m: {
            s: (float(np.mean(per_metric[m][s])), float(np.std(per_metric[m][s])))
            for s in sizes
        }
        for m in METRICS
    }
    return SweepResult(sizes=sizes, repeats=repeats, summary=summary)
