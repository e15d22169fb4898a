"""Sweep harness: seeding discipline, statistics, and reporting."""

import json

import numpy as np
import pytest

import mcgl
from mcgl import InputError
from mcgl.experiments import (
    ExperimentRecord,
    SweepSpec,
    record_from_dict,
    run_depth_sweep,
    run_noise_sweep,
    save_records,
    summarize,
    train_and_score,
)

from oracles import make_noisy_dataset, tiny_cfg


def _noise_spec(values, model="mcgl_um", repeats=2, **cfg_over):
    return SweepSpec(
        dataset="noisy_toy",
        model=model,
        axis="noise_rate",
        values=values,
        cfg=tiny_cfg(**cfg_over),
        repeats=repeats,
    )


def test_sample_std_oracle():
    assert mcgl.sample_std([0.8, 0.9]) == pytest.approx(0.07071067811865475)
    assert mcgl.sample_std([0.42]) == 0.0
    with pytest.raises(InputError):
        mcgl.sample_std([])


def test_format_pm():
    assert mcgl.format_pm(0.85, 0.0707) == "85.00±7.07"
    assert mcgl.format_pm(1.0, 0.0) == "100.00±0.00"
    assert mcgl.format_pm(0.57786, 0.0212) == "57.79±2.12"


def test_sweep_spec_validation():
    ok = _noise_spec([0.0, 0.1])
    ok.validate()
    with pytest.raises(InputError):
        _noise_spec([0.1, 0.0]).validate()  # unsorted
    with pytest.raises(InputError):
        _noise_spec([]).validate()
    with pytest.raises(InputError):
        _noise_spec([0.0], model="resnet").validate()
    with pytest.raises(InputError):
        _noise_spec([0.0], repeats=0).validate()
    bad_axis = _noise_spec([0.0])
    bad_axis.axis = "learning_rate"
    with pytest.raises(InputError):
        bad_axis.validate()
    with pytest.raises(InputError):
        _noise_spec([0.0, 1.5]).validate()
    with pytest.raises(InputError):
        _noise_spec(["original"]).validate()


def test_depth_spec_gcnstar_only():
    spec = SweepSpec("noisy_toy", "gcn", "depth", [0, 1], cfg=tiny_cfg())
    with pytest.raises(InputError):
        spec.validate()
    spec = SweepSpec("noisy_toy", "gcn_star", "depth", [0, 16], cfg=tiny_cfg())
    with pytest.raises(InputError):
        spec.validate()
    spec = SweepSpec("noisy_toy", "gcn_star", "depth", [0, 1.5], cfg=tiny_cfg())
    with pytest.raises(InputError):
        spec.validate()
    SweepSpec("noisy_toy", "gcn_star", "depth", [0, 2, 15], cfg=tiny_cfg()).validate()


def test_noise_sweep_shape_and_seeds():
    ds = make_noisy_dataset(seed=0)
    orig = mcgl.noise_rate(ds.graph, ds.y)
    spec = _noise_spec([0.0, orig], repeats=3)
    records = run_noise_sweep(spec, ds)
    assert len(records) == 2
    for r in records:
        assert r.seeds == [0, 1, 2]
        assert len(r.accuracies) == 3
        assert len(r.wall_clock) == 3
        assert all(0.0 <= a <= 1.0 for a in r.accuracies)
        assert r.axis == "noise_rate" and r.group is None
    assert records[0].fingerprint != records[1].fingerprint


def test_noise_sweep_at_original_rate_equals_direct_runs():
    # sweeping at the graph's own rate removes nothing, so the cell must
    # reproduce plain repeated training exactly
    ds = make_noisy_dataset(seed=1)
    orig = mcgl.noise_rate(ds.graph, ds.y)
    spec = _noise_spec([orig], repeats=2)
    records = run_noise_sweep(spec, ds)
    direct = [
        train_and_score("mcgl_um", ds.graph, ds.x, ds.y, ds.split, spec.cfg, s)[0]
        for s in (0, 1)
    ]
    assert records[0].accuracies == direct


def test_noise_sweep_infeasible_rate():
    ds = make_noisy_dataset(seed=2)
    orig = mcgl.noise_rate(ds.graph, ds.y)
    spec = _noise_spec([orig + 0.2])
    with pytest.raises(InputError):
        run_noise_sweep(spec, ds)


def test_noise_sweep_reproducible():
    ds = make_noisy_dataset(seed=3)
    spec = _noise_spec([0.0, 0.05], repeats=2)
    a = run_noise_sweep(spec, ds)
    b = run_noise_sweep(spec, ds)
    for ra, rb in zip(a, b):
        assert ra.accuracies == rb.accuracies
        assert ra.fingerprint == rb.fingerprint


def test_depth_sweep_k0_identical_across_noise_levels():
    # at K=0 the graph is unused, so every noise level shows the same scores
    ds = make_noisy_dataset(seed=4)
    spec = SweepSpec(
        "noisy_toy", "gcn_star", "depth", [0, 1],
        cfg=tiny_cfg(), repeats=2,
        noise_levels=("original", 0.0),
    )
    records = run_depth_sweep(spec, ds)
    assert len(records) == 4
    k0 = [r for r in records if r.value == 0]
    assert len(k0) == 2
    assert k0[0].accuracies == k0[1].accuracies
    groups = {r.group for r in records}
    assert groups == {"original", "0"}


def test_depth_sweep_axis_mismatch():
    ds = make_noisy_dataset(seed=5)
    with pytest.raises(InputError):
        run_depth_sweep(_noise_spec([0.0]), ds)
    spec = SweepSpec("noisy_toy", "gcn_star", "depth", [0], cfg=tiny_cfg())
    with pytest.raises(InputError):
        run_noise_sweep(spec, ds)


def test_parallel_matches_serial():
    ds = make_noisy_dataset(seed=6)
    spec = _noise_spec([0.0], repeats=2)
    serial = run_noise_sweep(spec, ds, jobs=1)
    parallel = run_noise_sweep(spec, ds, jobs=2)
    assert serial[0].accuracies == parallel[0].accuracies


def test_train_and_score_models():
    ds = make_noisy_dataset(seed=7, bad_edges=2)
    for model in ("mcgl_um", "gcn", "gcn_star"):
        acc, wall = train_and_score(model, ds.graph, ds.x, ds.y, ds.split,
                                    tiny_cfg(), seed=0)
        assert 0.0 <= acc <= 1.0
        assert wall > 0
    with pytest.raises(InputError):
        train_and_score("mlp", ds.graph, ds.x, ds.y, ds.split, tiny_cfg(), 0)


def test_summarize_layout():
    records = [
        ExperimentRecord("toy", "gcn", "noise_rate", 0.1, None, [0, 1],
                         [0.8, 0.9], [0.1, 0.1], "f1"),
        ExperimentRecord("toy", "gcn", "noise_rate", 0.0, None, [0, 1],
                         [0.9, 1.0], [0.1, 0.1], "f2"),
    ]
    text, csv = summarize(records)
    lines = text.splitlines()
    assert lines[0] == "toy gcn by noise_rate"
    assert lines[1].endswith("accuracy")
    # rows come out sorted by value regardless of input order
    assert "85.00±7.07" in lines[3]
    assert "95.00±7.07" in lines[2]
    rows = csv.splitlines()
    assert rows[0] == "dataset,model,axis,value,mean,std,n,group"
    assert rows[1] == "toy,gcn,noise_rate,0,95.0000,7.0711,2,"
    assert rows[2] == "toy,gcn,noise_rate,0.1,85.0000,7.0711,2,"
    with pytest.raises(InputError):
        summarize([])


def test_record_roundtrip():
    rec = ExperimentRecord("toy", "mcgl_um", "noise_rate", 0.0, None,
                           [0, 1], [0.5, 0.7], [0.01, 0.01], "abc")
    back = record_from_dict(rec.to_dict())
    assert back == rec
    assert back.mean == pytest.approx(0.6)


def test_save_records_files(tmp_path):
    ds = make_noisy_dataset(seed=8)
    spec = _noise_spec([0.0], repeats=1)
    records = run_noise_sweep(spec, ds)
    jp, cp = save_records(tmp_path, spec, records)
    assert jp.name == "noisy_toy_mcgl_um_noise_rate.json"
    assert cp.name == "noisy_toy_mcgl_um_noise_rate.csv"
    jp2, _ = save_records(tmp_path, spec, records, timestamp="20240101T000000")
    assert jp2.name == "noisy_toy_mcgl_um_noise_rate_20240101T000000.json"
    payload = json.loads(jp.read_text())
    assert payload["spec"]["dataset"] == "noisy_toy"
    rebuilt = [record_from_dict(d) for d in payload["records"]]
    assert rebuilt == records
    header = cp.read_text().splitlines()[0]
    assert header == "dataset,model,axis,value,mean,std,n,group"
