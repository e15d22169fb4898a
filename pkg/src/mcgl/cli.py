"""Command-line interface.

Subcommands: generate, train, infer, sweep-noise, sweep-depth, noise-rate,
reduce-noise, plot.  Every option can also come from a flat ``key = value``
config file (--config); explicit flags win over the file, which wins over
the built-in per-dataset defaults.  Exit codes: 0 success, 2 input/config
error, 3 ingestion error, 4 internal invariant failure.

Result files are timestamped so reruns never overwrite anything; --force
switches to fixed names and allows overwriting.  MCGL_DATA_DIR sets the
default dataset root.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import defaults
from .datasets import (
    Dataset,
    SynthSpec,
    gen_graph_xor,
    generate,
    load_coauthor,
    load_planetoid,
    load_text_dataset,
    save_text_dataset,
)
from .errors import IngestionError, InputError, InternalError
from .experiments import (
    SweepSpec,
    record_from_dict,
    run_depth_sweep,
    run_noise_sweep,
    save_records,
    summarize,
)
from .graph import noise_rate, normalize, reduce_noise
from .models import (
    gcn_predict,
    gcn_predict_with,
    gcnstar_predict,
    gcnstar_predict_with,
    mcgl_infer,
    mcgl_predict,
    train_gcn,
    train_gcnstar,
    train_mcgl_um,
    accuracy,
)
from .nn import load_params, save_params
from .plotting import scatter_plot, sweep_plot

_SYNTH = ("graph-xor", "circles", "communities", "large-variance")
_MODELS = ("gcn", "gcn-star", "mcgl-um")
_CFG_FIELDS = (
    "hidden_units", "learning_rate", "weight_decay", "dropout_rate",
    "batch_size", "depth", "infer_depth", "max_epochs", "patience",
    "batches_per_epoch",
)

# dest -> value converter, per subcommand; used to type config-file entries
_REGISTRY: dict[str, dict] = {}


def _parse_bool(s: str) -> bool:
    low = str(s).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise InputError(f"expected a boolean, got {s!r}")


def _float_list(s: str) -> list[float]:
    return sorted(float(t) for t in s.split(",") if t.strip())


def _int_list(s: str) -> list[int]:
    return sorted(int(t) for t in s.split(",") if t.strip())


def _level_list(s: str) -> list:
    out = []
    for t in s.split(","):
        t = t.strip()
        if not t:
            continue
        out.append("original" if t == "original" else float(t))
    return out


def _add(sp, reg: dict, *flags, **kw):
    action = kw.get("action")
    conv = kw.get("type", str)
    arg = sp.add_argument(*flags, **kw)
    reg[arg.dest] = _parse_bool if action == "store_true" else conv
    return arg


def _add_cfg_options(sp, reg) -> None:
    _add(sp, reg, "--hidden-units", type=int, help="MLP hidden layer width")
    _add(sp, reg, "--learning-rate", type=float, help="Adam learning rate")
    _add(sp, reg, "--weight-decay", type=float, help="L2 penalty on weights")
    _add(sp, reg, "--dropout-rate", type=float, help="dropout probability")
    _add(sp, reg, "--batch-size", type=int, help="sampled pairs per batch")
    _add(sp, reg, "--depth", type=int, help="graph-operation depth K")
    _add(sp, reg, "--infer-depth", type=int,
         help="aggregation depth at inference (defaults to --depth)")
    _add(sp, reg, "--max-epochs", type=int, help="epoch cap")
    _add(sp, reg, "--patience", type=int,
         help="epochs without improvement before stopping")
    _add(sp, reg, "--batches-per-epoch", type=int,
         help="sampled batches per epoch")


def _add_data_options(sp, reg, synth: bool = True) -> None:
    _add(sp, reg, "--data-dir",
         help="dataset root (default: $MCGL_DATA_DIR or '.')")
    if synth:
        _add(sp, reg, "--n", type=int, help="synthetic node count (default 60)")
        _add(sp, reg, "--gen-seed", type=int,
             help="synthetic generator seed (default 0)")


def _add_common(sp, reg, out_default: str = "runs") -> None:
    _add(sp, reg, "--out-dir", help=f"output directory (default {out_default!r})")
    _add(sp, reg, "--seed", type=int, help="run seed (default 0)")
    _add(sp, reg, "--force", action="store_true", default=None,
         help="fixed output names, overwriting existing files")
    sp.add_argument("--config", help="flat key = value config file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcgl",
        description="Monte Carlo graph learning vs. graph convolution benchmarks",
    )
    sub = parser.add_subparsers(dest="_cmd", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset triple + scatter SVG")
    reg = _REGISTRY["generate"] = {}
    p.add_argument("kind", choices=_SYNTH)
    _add(p, reg, "--n", type=int, help="node count (default 60)")
    _add(p, reg, "--seed", type=int, help="generator seed (default 0)")
    _add(p, reg, "--variance", type=float, help="per-class feature variance")
    _add(p, reg, "--knn-k", type=int, help="neighbors per node (default 3)")
    _add(p, reg, "--train-per-class", type=int,
         help="training nodes per class (default 5)")
    _add(p, reg, "--name", help="basename of the written files (default: kind)")
    _add(p, reg, "--out-dir", help="output directory (default '.')")
    _add(p, reg, "--force", action="store_true", default=None,
         help="overwrite existing files")
    p.add_argument("--config", help="flat key = value config file")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train one model, write metrics + checkpoint")
    reg = _REGISTRY["train"] = {}
    p.add_argument("model", choices=_MODELS)
    p.add_argument("dataset")
    _add_data_options(p, reg)
    _add_cfg_options(p, reg)
    _add(p, reg, "--infer-mode", choices=["row-stochastic", "symmetric"],
         help="adjacency used by MCGL-UM inference")
    _add(p, reg, "--aggregate", choices=["probability", "logit"],
         help="scores aggregated by MCGL-UM inference")
    _add(p, reg, "--exclude-self", action="store_true", default=None,
         help="sample from neighbors only (drop the node itself)")
    _add_common(p, reg)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="predict with a saved checkpoint")
    reg = _REGISTRY["infer"] = {}
    p.add_argument("checkpoint")
    p.add_argument("dataset")
    _add_data_options(p, reg)
    _add(p, reg, "--infer-depth", type=int,
         help="override the checkpoint's aggregation depth")
    _add_common(p, reg)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("sweep-noise", help="accuracy vs. reduced noise rate")
    reg = _REGISTRY["sweep-noise"] = {}
    p.add_argument("dataset")
    _add(p, reg, "--model", choices=["gcn", "mcgl-um", "gcn-star", "both"],
         help="model(s) to sweep (default both = gcn + mcgl-um)")
    _add(p, reg, "--rates", type=_float_list,
         help="comma-separated target noise rates (default 0..0.18 step 0.03)")
    _add(p, reg, "--repeats", type=int, help="runs per rate (default 10)")
    _add(p, reg, "--jobs", type=int, help="parallel workers (default 1)")
    _add_data_options(p, reg)
    _add_cfg_options(p, reg)
    _add_common(p, reg)
    p.set_defaults(func=cmd_sweep_noise)

    p = sub.add_parser("sweep-depth", help="GCN* accuracy vs. propagation depth")
    reg = _REGISTRY["sweep-depth"] = {}
    p.add_argument("dataset")
    _add(p, reg, "--depths", type=_int_list,
         help="comma-separated K values (default 0..15)")
    _add(p, reg, "--noise-levels", type=_level_list,
         help="comma-separated rates or 'original' (default original,0.1,0)")
    _add(p, reg, "--repeats", type=int, help="runs per cell (default 10)")
    _add(p, reg, "--jobs", type=int, help="parallel workers (default 1)")
    _add_data_options(p, reg)
    _add_cfg_options(p, reg)
    _add_common(p, reg)
    p.set_defaults(func=cmd_sweep_depth)

    p = sub.add_parser("noise-rate", help="print a dataset's noise rate")
    reg = _REGISTRY["noise-rate"] = {}
    p.add_argument("dataset")
    _add_data_options(p, reg)
    p.add_argument("--config", help="flat key = value config file")
    p.set_defaults(func=cmd_noise_rate)

    p = sub.add_parser("reduce-noise", help="write a noise-reduced copy of a dataset")
    reg = _REGISTRY["reduce-noise"] = {}
    p.add_argument("dataset")
    _add(p, reg, "--target", type=float, required=True, help="target noise rate")
    _add(p, reg, "--name", help="basename of the written files")
    _add_data_options(p, reg)
    _add(p, reg, "--out-dir", help="output directory (default '.')")
    _add(p, reg, "--seed", type=int, help="edit seed (default 0)")
    _add(p, reg, "--force", action="store_true", default=None,
         help="overwrite existing files")
    p.add_argument("--config", help="flat key = value config file")
    p.set_defaults(func=cmd_reduce_noise)

    p = sub.add_parser("plot", help="render sweep record JSON files to an SVG")
    reg = _REGISTRY["plot"] = {}
    p.add_argument("records", nargs="+")
    _add(p, reg, "--out", help="output SVG path (default: first input stem + .svg)")
    _add(p, reg, "--title", help="figure title")
    _add(p, reg, "--force", action="store_true", default=None,
         help="overwrite an existing output file")
    p.add_argument("--config", help="flat key = value config file")
    p.set_defaults(func=cmd_plot)

    return parser


# ---------------------------------------------------------------------------
# Config file handling


def _read_config(path: str) -> dict[str, str]:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"config file not found: {p}")
    entries: dict[str, str] = {}
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{p}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        entries[key.strip().replace("-", "_")] = value.strip()
    return entries


def _apply_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    reg = _REGISTRY[args._cmd]
    for key, raw in _read_config(args.config).items():
        if key not in reg:
            raise InputError(
                f"unknown config key {key!r} for {args._cmd}; "
                f"accepted: {', '.join(sorted(reg))}"
            )
        if getattr(args, key) is None:  # explicit flags win
            try:
                setattr(args, key, reg[key](raw))
            except (ValueError, TypeError) as exc:
                raise InputError(f"bad value for config key {key!r}: {raw!r}") from exc


# ---------------------------------------------------------------------------
# Shared resolution helpers


def _data_dir(args) -> Path:
    d = Path(getattr(args, "data_dir", None) or os.environ.get("MCGL_DATA_DIR", "."))
    if not d.is_dir():
        raise InputError(f"data directory not found: {d}")
    return d


def _resolve_dataset(args) -> Dataset:
    name = args.dataset.replace("-", "_")
    if name == "graph_xor":
        return gen_graph_xor()
    if name in ("circles", "communities", "large_variance"):
        return generate(SynthSpec(kind=name, n=getattr(args, "n", None) or 60,
                                  seed=getattr(args, "gen_seed", None) or 0))
    d = _data_dir(args)
    if name in ("cora", "citeseer", "pubmed"):
        return load_planetoid(d, name)
    if name == "ms_academic":
        return load_coauthor(d)
    if (d / f"{name}.labels.csv").exists():
        return load_text_dataset(d, name)
    raise InputError(
        f"unknown dataset {args.dataset!r}: not a built-in name and no "
        f"{name}.labels.csv in {d}"
    )


def _resolve_cfg(args, dataset: str, model: str):
    cfg = defaults.default_config(dataset, model)
    for field in _CFG_FIELDS:
        value = getattr(args, field, None)
        if value is not None:
            setattr(cfg, field, value)
    cfg.seed = args.seed if getattr(args, "seed", None) is not None else 0
    cfg.validate()
    return cfg


def _stamp() -> str:
    return time.strftime("%Y%m%d-%H%M%S")


def _out_paths(out_dir, stem: str, exts: list[str], force: bool) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if force:
        return [out / f"{stem}{e}" for e in exts]
    stamped = f"{stem}_{_stamp()}"
    paths = [out / f"{stamped}{e}" for e in exts]
    bump = 1
    while any(p.exists() for p in paths):
        paths = [out / f"{stamped}-{bump}{e}" for e in exts]
        bump += 1
    return paths


def _refuse_existing(paths: list[Path], force: bool) -> None:
    if force:
        return
    for p in paths:
        if p.exists():
            raise InputError(f"output file exists: {p} (pass --force to overwrite)")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_generate(args) -> int:
    kind = args.kind.replace("-", "_")
    spec = SynthSpec(
        kind=kind,
        n=args.n if args.n is not None else 60,
        variance=args.variance,
        seed=args.seed if args.seed is not None else 0,
        knn_k=args.knn_k if args.knn_k is not None else 3,
        train_per_class=(args.train_per_class
                         if args.train_per_class is not None else 5),
    )
    ds = generate(spec)
    name = args.name or kind
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    triple = [out / f"{name}.edges", out / f"{name}.features.csv",
              out / f"{name}.labels.csv", out / f"{name}.split.json"]
    svg = out / f"{name}.svg"
    _refuse_existing(triple + [svg], bool(args.force))
    paths = save_text_dataset(ds, out, name)
    scatter_plot(ds, svg)
    for p in paths + [svg]:
        print(p)
    return 0


def _train_one(model: str, ds: Dataset, cfg, args):
    rng = np.random.default_rng(cfg.seed)
    include_self = not bool(getattr(args, "exclude_self", None))
    infer_mode = (getattr(args, "infer_mode", None) or "row-stochastic").replace("-", "_")
    aggregate = getattr(args, "aggregate", None) or "probability"
    if model == "mcgl_um":
        m = train_mcgl_um(ds.graph, ds.x, ds.y, ds.split.train_ids, cfg, rng,
                          val_ids=ds.split.val_ids, include_self=include_self,
                          infer_mode=infer_mode, aggregate=aggregate)
        preds = mcgl_predict(m, ds.x)
        meta = {"model": model, "depth": m.depth, "infer_depth": m.infer_depth,
                "adjacency": m.adj.mode, "aggregate": m.aggregate,
                "include_self": include_self}
    elif model == "gcn":
        m = train_gcn(ds.graph, ds.x, ds.y, ds.split, cfg, rng)
        preds = gcn_predict(m, ds.x)
        meta = {"model": model, "adjacency": m.adj.mode}
    else:
        m = train_gcnstar(ds.graph, ds.x, ds.y, ds.split, cfg, rng)
        preds = gcnstar_predict(m, ds.x)
        meta = {"model": model, "depth": m.depth, "adjacency": m.adj.mode}
    return m, preds, meta


def cmd_train(args) -> int:
    ds = _resolve_dataset(args)
    model = args.model.replace("-", "_")
    cfg = _resolve_cfg(args, ds.name, model)
    t0 = time.perf_counter()
    m, preds, meta = _train_one(model, ds, cfg, args)
    wall = time.perf_counter() - t0
    results = {"epochs_run": m.epochs_run,
               "best_monitor_accuracy": m.best_val_accuracy}
    for part, ids in (("train", ds.split.train_ids), ("val", ds.split.val_ids),
                      ("test", ds.split.test_ids)):
        results[f"{part}_accuracy"] = (
            accuracy(preds, ds.y, ids) if len(ids) else None
        )
    metrics_path, ckpt_path = _out_paths(
        args.out_dir or "runs", f"{ds.name}_{model}",
        [".metrics.json", ".ckpt.json"], bool(args.force),
    )
    rate = noise_rate(ds.graph, ds.y) if ds.graph.num_edges else None
    _write_json(metrics_path, {
        "command": "train",
        "dataset": ds.name,
        "model": model,
        "config": {**asdict(cfg), **meta},
        "graph": {"num_nodes": ds.graph.num_nodes,
                  "num_edges": ds.graph.num_edges,
                  "noise_rate": rate},
        "results": results,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "wall_clock_seconds": wall,
    })
    save_params(ckpt_path, m.params, extra={**meta, "dataset": ds.name})
    shown = results["test_accuracy"]
    part = "test"
    if shown is None:
        shown, part = results["train_accuracy"], "train"
    print(f"{ds.name} {model}: {part} accuracy {shown:.4f} "
          f"({m.epochs_run} epochs, {wall:.1f}s)")
    print(metrics_path)
    print(ckpt_path)
    return 0


def cmd_infer(args) -> int:
    ckpt = Path(args.checkpoint)
    if not ckpt.is_file():
        raise InputError(f"checkpoint not found: {ckpt}")
    try:
        params, meta = load_params(ckpt)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise IngestionError(f"corrupt checkpoint: {ckpt}: {exc}") from exc
    ds = _resolve_dataset(args)
    model = meta.get("model", "mcgl_um")
    adj = normalize(ds.graph, meta.get("adjacency", "symmetric"))
    if model == "mcgl_um":
        depth = (args.infer_depth if args.infer_depth is not None
                 else int(meta.get("infer_depth", 2)))
        preds = mcgl_infer(params, ds.x, adj, depth,
                           meta.get("aggregate", "probability"))
    elif model == "gcn":
        preds = gcn_predict_with(params, adj, ds.x)
    elif model == "gcn_star":
        depth = (args.infer_depth if args.infer_depth is not None
                 else int(meta.get("depth", 2)))
        preds = gcnstar_predict_with(params, adj, ds.x, depth)
    else:
        raise InputError(f"checkpoint has unknown model {model!r}")
    (pred_path,) = _out_paths(args.out_dir or "runs",
                              f"{ds.name}_{model}_predictions", [".csv"],
                              bool(args.force))
    with open(pred_path, "w") as f:
        f.write("node,prediction\n")
        for i, p in enumerate(preds):
            f.write(f"{i},{int(p)}\n")
    ids = ds.split.test_ids if len(ds.split.test_ids) else ds.split.train_ids
    print(f"accuracy {accuracy(preds, ds.y, ids):.4f} on {len(ids)} nodes")
    print(pred_path)
    return 0


def _sweep_common(args, ds: Dataset, model: str, axis: str, values,
                  noise_levels=None) -> SweepSpec:
    cfg = _resolve_cfg(args, ds.name, model)
    spec = SweepSpec(
        dataset=ds.name,
        model=model,
        axis=axis,
        values=values,
        cfg=cfg,
        repeats=args.repeats if args.repeats is not None else 10,
        base_seed=args.seed if args.seed is not None else 0,
    )
    if noise_levels is not None:
        spec.noise_levels = tuple(noise_levels)
    return spec


def cmd_sweep_noise(args) -> int:
    ds = _resolve_dataset(args)
    choice = (args.model or "both").replace("-", "_")
    models = ["gcn", "mcgl_um"] if choice == "both" else [choice]
    rates = args.rates if args.rates is not None else list(defaults.NOISE_RATES)
    jobs = args.jobs if args.jobs is not None else 1
    force = bool(args.force)
    out_dir = args.out_dir or "runs"
    stamp = None if force else _stamp()
    all_records = []
    written = []
    for model in models:
        spec = _sweep_common(args, ds, model, "noise_rate", rates)
        records = run_noise_sweep(spec, ds, jobs=jobs)
        written += save_records(out_dir, spec, records, timestamp=stamp)
        all_records += records
    (svg,) = _out_paths(out_dir, f"{ds.name}_noise_sweep", [".svg"], force)
    sweep_plot(all_records, svg, title=f"{ds.name}: accuracy vs. noise rate")
    text, _ = summarize(all_records)
    print(text, end="")
    for p in written + [svg]:
        print(p)
    return 0


def cmd_sweep_depth(args) -> int:
    ds = _resolve_dataset(args)
    depths = args.depths if args.depths is not None else list(defaults.DEPTHS)
    levels = (args.noise_levels if args.noise_levels is not None
              else ["original", 0.1, 0.0])
    spec = _sweep_common(args, ds, "gcn_star", "depth", depths,
                         noise_levels=levels)
    jobs = args.jobs if args.jobs is not None else 1
    force = bool(args.force)
    out_dir = args.out_dir or "runs"
    records = run_depth_sweep(spec, ds, jobs=jobs)
    written = list(save_records(out_dir, spec, records,
                                timestamp=None if force else _stamp()))
    (svg,) = _out_paths(out_dir, f"{ds.name}_depth_sweep", [".svg"], force)
    sweep_plot(records, svg, title=f"{ds.name}: GCN* accuracy vs. depth")
    text, _ = summarize(records)
    print(text, end="")
    for p in written + [svg]:
        print(p)
    return 0


def cmd_noise_rate(args) -> int:
    ds = _resolve_dataset(args)
    print(f"{noise_rate(ds.graph, ds.y):.4f}")
    return 0


def cmd_reduce_noise(args) -> int:
    ds = _resolve_dataset(args)
    seed = args.seed if args.seed is not None else 0
    g2 = reduce_noise(ds.graph, ds.y, args.target, seed=seed)
    name = args.name or f"{ds.name}_noise{args.target:g}"
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    triple = [out / f"{name}.edges", out / f"{name}.features.csv",
              out / f"{name}.labels.csv", out / f"{name}.split.json"]
    _refuse_existing(triple, bool(args.force))
    reduced = Dataset(g2, ds.x, ds.y, ds.split, name=name)
    paths = save_text_dataset(reduced, out, name)
    print(f"noise rate {noise_rate(g2, ds.y):.4f} "
          f"({g2.num_edges} of {ds.graph.num_edges} edges kept)")
    for p in paths:
        print(p)
    return 0


def cmd_plot(args) -> int:
    records = []
    for raw in args.records:
        path = Path(raw)
        if not path.is_file():
            raise InputError(f"records file not found: {path}")
        try:
            with open(path) as f:
                payload = json.load(f)
            records += [record_from_dict(d) for d in payload["records"]]
        except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
            raise IngestionError(f"corrupt records file: {path}: {exc}") from exc
    out = Path(args.out) if args.out else Path(args.records[0]).with_suffix(".svg")
    if out.exists() and not args.force:
        raise InputError(f"output file exists: {out} (pass --force to overwrite)")
    sweep_plot(records, out, title=args.title)
    print(out)
    return 0


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.func(args) or 0
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IngestionError as exc:
        print(f"ingestion error: {exc}", file=sys.stderr)
        return 3
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
