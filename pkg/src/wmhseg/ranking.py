"""Challenge rank scoring: per-metric min-max normalization, best team -> 0.

Each metric column is normalized to [0, 1] with the best-performing team at
0 and the worst at 1 (DSC/recall/F1 higher is better; H95/AVD lower is
better).  The final score is the mean over the five per-metric scores, so
smaller final scores rank higher.  Ties share identical scores; a column
where every team is equal contributes 0 to everyone.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .errors import ContractError

METRIC_NAMES = ("dsc", "h95", "avd", "recall", "f1")
HIGHER_BETTER = {"dsc": True, "h95": False, "avd": False, "recall": True, "f1": True}


@dataclass
class RankTable:
    teams: list[str]
    raw: dict[str, dict[str, float | None]]        # team -> metric -> value
    scores: dict[str, dict[str, float | None]]     # team -> metric -> rank score
    final: dict[str, float]                        # team -> averaged score
    excluded: dict[str, list[str]] = field(default_factory=dict)  # team -> missing metrics

    def winner(self) -> str:
        return min(self.final, key=self.final.get)


def rank_teams(table: dict[str, dict[str, float | None]]) -> RankTable:
    """Score every team from its raw metric values.

    ``table`` maps team -> {metric -> value}; a missing/None value excludes
    the team from that metric (flagged in ``excluded``), and its final score
    averages the metrics it does have.
    """
    if len(table) < 2:
        raise ContractError("ranking needs at least two teams")
    teams = list(table)
    scores: dict[str, dict[str, float | None]] = {t: {} for t in teams}
    excluded: dict[str, list[str]] = {}

    for metric in METRIC_NAMES:
        values = {t: table[t].get(metric) for t in teams}
        present = {t: v for t, v in values.items() if v is not None}
        for t in teams:
            if values[t] is None:
                scores[t][metric] = None
                excluded.setdefault(t, []).append(metric)
        if not present:
            continue
        vals = list(present.values())
        best = max(vals) if HIGHER_BETTER[metric] else min(vals)
        worst = min(vals) if HIGHER_BETTER[metric] else max(vals)
        span = worst - best
        for t, v in present.items():
            scores[t][metric] = 0.0 if span == 0 else (v - best) / span

    final = {}
    for t in teams:
        available = [s for s in scores[t].values() if s is not None]
        if not available:
            raise ContractError(f"team {t!r} has no usable metric values")
        final[t] = sum(available) / len(available)

    return RankTable(teams=teams, raw=dict(table), scores=scores, final=final,
                     excluded=excluded)


def read_team_csv(path) -> dict[str, dict[str, float | None]]:
    """Read a team table CSV with columns: team, dsc, h95_mm, avd, recall, f1."""
    column_map = {"dsc": "dsc", "h95_mm": "h95", "h95": "h95", "avd": "avd",
                  "recall": "recall", "f1": "f1"}
    table = {}
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            team = row.pop("team", None)
            if team is None:
                raise ContractError("team CSV must have a 'team' column")
            values = {}
            for col, metric in column_map.items():
                if col in row and row[col] not in (None, ""):
                    values[metric] = float(row[col])
            table[team] = values
    return table


def write_rank_csv(ranked: RankTable, path) -> None:
    fields = ["team"] + [f"score_{m}" for m in METRIC_NAMES] + ["score"]
    order = sorted(ranked.teams, key=lambda t: ranked.final[t])
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        for t in order:
            row = {"team": t, "score": f"{ranked.final[t]:.6f}"}
            for m in METRIC_NAMES:
                s = ranked.scores[t][m]
                row[f"score_{m}"] = "" if s is None else f"{s:.6f}"
            writer.writerow(row)
