"""Sweep harness: repeated seeded trainings over noise-rate or depth grids.

Every sweep cell trains `repeats` times with run seeds base_seed..base_seed +
repeats - 1, shared across all cells so rows differ only through the quantity
being swept.  Noise-reduced graphs are sampled once per rate (seed offset
100000 + rate index, far above any run seed) and reused across repeats, so
the per-seed spread measures training noise rather than graph-edit noise.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .datasets import Dataset
from .errors import InputError
from .graph import Graph, noise_rate, reduce_noise
from .models import (
    accuracy,
    gcn_predict,
    gcnstar_predict,
    mcgl_predict,
    train_gcn,
    train_gcnstar,
    train_mcgl_um,
)
from .nn import TrainConfig

MODELS = ("gcn", "gcn_star", "mcgl_um")
AXES = ("noise_rate", "depth")
DEPTH_NOISE_LEVELS = ("original", 0.1, 0.0)
_EDIT_SEED_OFFSET = 100000


@dataclass
class SweepSpec:
    """One sweep: a model, an axis, its grid, and the fixed training config."""

    dataset: str
    model: str
    axis: str
    values: list
    cfg: TrainConfig = field(default_factory=TrainConfig)
    repeats: int = 10
    base_seed: int = 0
    noise_levels: tuple = DEPTH_NOISE_LEVELS  # depth sweeps only

    def validate(self) -> None:
        if self.model not in MODELS:
            raise InputError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.axis not in AXES:
            raise InputError(f"unknown axis {self.axis!r}; expected one of {AXES}")
        if not self.values:
            raise InputError("sweep needs at least one axis value")
        if list(self.values) != sorted(self.values):
            raise InputError("axis values must be sorted ascending")
        if self.repeats < 1:
            raise InputError("repeats must be at least 1")
        if self.axis == "depth":
            if self.model != "gcn_star":
                raise InputError("depth sweeps are defined for gcn_star only")
            for v in self.values:
                if int(v) != v or not 0 <= v <= 15:
                    raise InputError(f"depth values must be integers in [0, 15], got {v}")
        else:
            # passing the graph's own rate reproduces the unedited graph, so
            # the grid never needs a non-numeric "keep it" sentinel
            for v in self.values:
                if not isinstance(v, (int, float)) or not 0.0 <= v <= 1.0:
                    raise InputError(f"noise rates must be numbers in [0, 1], got {v!r}")
        self.cfg.validate()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["values"] = [float(v) for v in self.values]
        d["noise_levels"] = [str(v) for v in self.noise_levels]
        return d


@dataclass
class ExperimentRecord:
    """Per-seed accuracies of one sweep cell plus its input fingerprint."""

    dataset: str
    model: str
    axis: str
    value: float
    group: str | None
    seeds: list[int]
    accuracies: list[float]
    wall_clock: list[float]
    fingerprint: str

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        return sample_std(self.accuracies)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mean"] = self.mean
        d["std"] = self.std
        return d


def record_from_dict(d: dict) -> ExperimentRecord:
    """Rebuild a record from its to_dict form (derived keys ignored)."""
    names = {f.name for f in dataclasses.fields(ExperimentRecord)}
    return ExperimentRecord(**{k: v for k, v in d.items() if k in names})


def sample_std(values) -> float:
    """Standard deviation with the n-1 denominator; 0 for a single value."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise InputError("cannot take the std of an empty list")
    if values.size == 1:
        return 0.0
    return float(np.std(values, ddof=1))


def format_pm(mean: float, std: float) -> str:
    """Percent rendering used by the tables, e.g. 0.85/0.0707 -> '85.00±7.07'."""
    return f"{mean * 100:.2f}±{std * 100:.2f}"


def _fingerprint(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _cell_fingerprint(spec: SweepSpec, value, group, seeds, edit_seed) -> str:
    return _fingerprint(
        {
            "dataset": spec.dataset,
            "model": spec.model,
            "axis": spec.axis,
            "value": float(value),
            "group": group,
            "cfg": asdict(spec.cfg),
            "seeds": list(seeds),
            "edit_seed": edit_seed,
        }
    )


def train_and_score(
    model: str,
    g: Graph,
    x,
    y,
    split,
    cfg: TrainConfig,
    seed: int,
    depth: int | None = None,
) -> tuple[float, float]:
    """One seeded training run; returns (test accuracy, wall-clock seconds).

    Datasets without a test set (graph_xor) are scored on their training set.
    """
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    if model == "mcgl_um":
        m = train_mcgl_um(g, x, y, split.train_ids, cfg, rng, val_ids=split.val_ids)
        preds = mcgl_predict(m, x)
    elif model == "gcn":
        m = train_gcn(g, x, y, split, cfg, rng)
        preds = gcn_predict(m, x)
    elif model == "gcn_star":
        m = train_gcnstar(g, x, y, split, cfg, rng, depth=depth)
        preds = gcnstar_predict(m, x)
    else:
        raise InputError(f"unknown model {model!r}")
    wall = time.perf_counter() - t0
    score_ids = split.test_ids if len(split.test_ids) else split.train_ids
    return accuracy(preds, y, score_ids), wall


def _run_job(args) -> tuple[float, float]:
    model, g, x, y, split, cfg, seed, depth = args
    return train_and_score(model, g, x, y, split, cfg, seed, depth)


def _execute(payloads: list, jobs: int) -> list[tuple[float, float]]:
    if jobs <= 1:
        return [_run_job(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_job, payloads))


def _reduced_graph(ds: Dataset, rate, orig: float, edit_seed: int) -> Graph:
    if rate == "original":
        return ds.graph
    rate = float(rate)
    if rate > orig + 1e-12:
        raise InputError(
            f"target noise rate {rate} exceeds the graph's rate {orig:.4f}"
        )
    return reduce_noise(ds.graph, ds.y, rate, seed=edit_seed)


def _collect(
    spec: SweepSpec,
    ds: Dataset,
    cells: list,  # (value, group, graph, depth)
    jobs: int,
) -> list[ExperimentRecord]:
    seeds = [spec.base_seed + j for j in range(spec.repeats)]
    payloads = [
        (spec.model, g, ds.x, ds.y, ds.split, spec.cfg, s, depth)
        for (_, _, g, depth, _) in cells
        for s in seeds
    ]
    results = _execute(payloads, jobs)
    records = []
    for i, (value, group, _, _, edit_seed) in enumerate(cells):
        chunk = results[i * spec.repeats : (i + 1) * spec.repeats]
        records.append(
            ExperimentRecord(
                dataset=spec.dataset,
                model=spec.model,
                axis=spec.axis,
                value=float(value),
                group=group,
                seeds=seeds,
                accuracies=[a for a, _ in chunk],
                wall_clock=[w for _, w in chunk],
                fingerprint=_cell_fingerprint(spec, value, group, seeds, edit_seed),
            )
        )
    return records


def run_noise_sweep(spec: SweepSpec, ds: Dataset, jobs: int = 1) -> list[ExperimentRecord]:
    """Train at every reduced noise rate in spec.values.

    Each rate gets one noise-reduced graph shared by all repeats; a rate equal
    to the original leaves the graph untouched.
    """
    spec.validate()
    if spec.axis != "noise_rate":
        raise InputError("run_noise_sweep needs axis='noise_rate'")
    orig = noise_rate(ds.graph, ds.y)
    cells = []
    for idx, rate in enumerate(spec.values):
        edit_seed = spec.base_seed + _EDIT_SEED_OFFSET + idx
        g = _reduced_graph(ds, rate, orig, edit_seed)
        cells.append((rate, None, g, None, edit_seed))
    return _collect(spec, ds, cells, jobs)


def run_depth_sweep(spec: SweepSpec, ds: Dataset, jobs: int = 1) -> list[ExperimentRecord]:
    """Train GCN* at every propagation depth, once per noise level.

    Levels come from spec.noise_levels ("original" or a numeric target rate);
    the K=0 cells are graph-independent and so coincide across levels.
    """
    spec.validate()
    if spec.axis != "depth":
        raise InputError("run_depth_sweep needs axis='depth'")
    orig = noise_rate(ds.graph, ds.y)
    cells = []
    for lvl_idx, level in enumerate(spec.noise_levels):
        edit_seed = spec.base_seed + _EDIT_SEED_OFFSET + lvl_idx
        g = _reduced_graph(ds, level, orig, edit_seed)
        group = "original" if level == "original" else f"{float(level):g}"
        for k in spec.values:
            cells.append((k, group, g, int(k), edit_seed))
    return _collect(spec, ds, cells, jobs)


# ---------------------------------------------------------------------------
# Reporting


def summarize(records: list[ExperimentRecord]) -> tuple[str, str]:
    """(text grid, CSV) of mean±std per cell.

    CSV columns: dataset, model, axis, value, mean, std, n, group; means and
    stds are percents.  The text grid groups rows the way the result tables
    are laid out: one block per dataset/model/noise-level.
    """
    if not records:
        raise InputError("no records to summarize")
    for r in records:
        if not r.accuracies:
            raise InputError("record with empty accuracy list")
    ordered = sorted(
        records, key=lambda r: (r.dataset, r.model, r.axis, r.group or "", r.value)
    )
    lines = []
    csv_rows = ["dataset,model,axis,value,mean,std,n,group"]
    block_key = None
    for r in ordered:
        key = (r.dataset, r.model, r.axis, r.group)
        if key != block_key:
            if lines:
                lines.append("")
            head = f"{r.dataset} {r.model} by {r.axis}"
            if r.group is not None:
                head += f" (noise {r.group})"
            lines.append(head)
            lines.append(f"{r.axis:>12}  accuracy")
            block_key = key
        lines.append(f"{r.value:>12g}  {format_pm(r.mean, r.std)}")
        csv_rows.append(
            f"{r.dataset},{r.model},{r.axis},{r.value:g},"
            f"{r.mean * 100:.4f},{r.std * 100:.4f},{len(r.accuracies)},"
            f"{r.group or ''}"
        )
    return "\n".join(lines) + "\n", "\n".join(csv_rows) + "\n"


def save_records(
    out_dir: str | Path,
    spec: SweepSpec,
    records: list[ExperimentRecord],
    timestamp: str | None = None,
) -> tuple[Path, Path]:
    """Persist one sweep as <dataset>_<model>_<axis>[_<timestamp>].{json,csv}."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{spec.dataset}_{spec.model}_{spec.axis}"
    if timestamp:
        stem += f"_{timestamp}"
    json_path = out / f"{stem}.json"
    csv_path = out / f"{stem}.csv"
    payload = {"spec": spec.to_dict(), "records": [r.to_dict() for r in records]}
    with open(json_path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    _, csv_text = summarize(records)
    with open(csv_path, "w") as f:
        f.write(csv_text)
    return json_path, csv_path
