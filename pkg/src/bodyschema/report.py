"""Experiment reports: per-trial records, aggregates, CSV/JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

CSV_COLUMNS = (
    "scenario_id", "task", "variant", "mode", "probe_id", "trial",
    "truth_x", "truth_y", "truth_z",
    "response_x", "response_y", "response_z",
    "error_x", "error_y", "error_z",
)


@dataclass(frozen=True)
class TrialRecord:
    variant: str
    probe: str
    trial: int
    truth: tuple[float, float, float]
    response: tuple[float, float, float]

    @property
    def error(self):
        return tuple(r - t for r, t in zip(self.response, self.truth))


def aggregate(records) -> dict:
    """Constant error (mean signed error) and variable error (response spread).

    Variable error is ``sqrt(trace(cov))`` of the error vectors with the
    population (ddof=0) covariance.
    """
    err = np.array([r.error for r in records], dtype=float)
    ce = err.mean(axis=0)
    ve = math.sqrt(float(np.sum(err.var(axis=0))))
    return {
        "n": len(records),
        "constant_error": [float(v) for v in ce],
        "constant_error_norm": float(np.linalg.norm(ce)),
        "variable_error": ve,
    }


@dataclass
class ExperimentReport:
    scenario: dict
    records: list[TrialRecord]
    aggregates: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def scenario_id(self):
        return self.scenario["id"]

    @property
    def task(self):
        return self.scenario["task"]

    def compute_aggregates(self):
        groups = {}
        for r in self.records:
            groups.setdefault((r.variant, r.probe), []).append(r)
        self.aggregates = [
            {"variant": v, "probe": p, **aggregate(recs)} for (v, p), recs in groups.items()
        ]
        return self.aggregates

    def aggregate_for(self, probe, variant=None) -> dict:
        for a in self.aggregates:
            if a["probe"] == probe and (variant is None or a["variant"] == variant):
                return a
        raise KeyError(probe)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        mode = self.scenario.get("mode", "")
        for r in self.records:
            w.writerow([self.scenario_id, self.task, r.variant, mode, r.probe, r.trial,
                        *map(repr, r.truth), *map(repr, r.response), *map(repr, r.error)])
        return buf.getvalue()

    def to_json(self) -> str:
        from . import __version__
        doc = {
            "scenario": self.scenario,
            "seed": self.scenario.get("seed"),
            "software_version": __version__,
            "record_count": len(self.records),
            "aggregates": self.aggregates,
            "summary": self.summary,
        }
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def read_csv_records(text: str) -> list[TrialRecord]:
    rows = csv.DictReader(io.StringIO(text))
    return [
        TrialRecord(row["variant"], row["probe_id"], int(row["trial"]),
                    tuple(float(row[f"truth_{a}"]) for a in "xyz"),
                    tuple(float(row[f"response_{a}"]) for a in "xyz"))
        for row in rows
    ]
