"""Command-line interface.

Subcommands:
  train       run a training job from a config file or preset
  ror-curves  sweep robustness curves for a saved model snapshot
  ctrl-sim    exercise the feedback loop against the synthetic plant
  report      aggregate metrics across run directories

Every path that emits tabular output also renders a matching PNG figure in
the same directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from ctrlaug.augpool import ALL_KINDS
from ctrlaug.config import ConfigError, RunConfig, load_config, preset, save_config
from ctrlaug.data import DataFormatError, compute_norm_stats, flip_double, NormStats
from ctrlaug.models import SnapshotFormatError, build_model, load_snapshot, save_snapshot
from ctrlaug.plant import default_plant, mean_table_strength, simulate
from ctrlaug.plots import render_ctrl_sim, render_report, render_ror_curves, render_training
from ctrlaug.ror import default_grid, fit_erf, measure_curves, update_strength_params
from ctrlaug.trainer import make_predictor, ror_signs, build_datasets, run_from_config, table_to_json
from ctrlaug.evalstats import mean_ci95


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        raise ConfigError("one of --config or --preset is required")
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "mode", None):
        cfg.control.mode = args.mode
    if getattr(args, "setpoint", None) is not None:
        cfg.control.setpoint = args.setpoint
    if getattr(args, "epochs", None) is not None:
        cfg.optim.epochs = args.epochs
    return cfg.validate()


def _norm_stats_for(cfg: RunConfig, train_images: np.ndarray) -> NormStats:
    if cfg.pipeline.normalize_shift == "half":
        return NormStats((0.5, 0.5, 0.5), compute_norm_stats(train_images).std)
    return compute_norm_stats(train_images)


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_config(out / "config.json", cfg)
    result = run_from_config(
        cfg,
        data_root=args.data_dir,
        log_path=out / "phase_log.jsonl",
        progress=lambda msg: print(msg, flush=True),
    )
    save_snapshot(out / "model.ctrla", result.model)
    (out / "metrics.json").write_text(json.dumps(result.metrics, indent=2) + "\n")
    phases = [r.to_json_dict() for r in result.phases]
    render_training(phases, cfg.control.setpoint, out / "training.png")
    print(f"final val acc {result.metrics['final_val_acc']:.4f}", flush=True)
    if result.metrics["final_test_acc"] is not None:
        print(f"final test acc {result.metrics['final_test_acc']:.4f}", flush=True)
    print(f"wrote {out}/{{config.json,phase_log.jsonl,metrics.json,model.ctrla,training.png}}")
    return 0


def cmd_ror_curves(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train, val, _ = build_datasets(cfg, args.data_dir)
    if cfg.pipeline.flip_double:
        train = flip_double(train)
    stats = _norm_stats_for(cfg, train.images)
    model = build_model(
        cfg.model.arch, (3, val.images.shape[1], val.images.shape[2]), val.n_classes, cfg.seed
    )
    if args.snapshot:
        load_snapshot(args.snapshot, model)
    grid = default_grid(cfg.control.grid_step)
    signs = ror_signs(cfg.seed, args.phase, len(val))
    sweep = measure_curves(make_predictor(model, stats), val.images, val.labels, ALL_KINDS, grid, signs)
    if sweep is None:
        print("baseline accuracy is zero; no curves to report", file=sys.stderr)
        return 1
    curves, base_acc = sweep
    retention = args.retention if args.retention is not None else cfg.control.retention_init

    fits = {}
    rows = []
    fit_payload = {}
    for kind, curve in curves.items():
        fit = fit_erf(curve)
        fits[kind] = fit
        params = update_strength_params(fit, curve[-1][1], retention)
        fit_payload[kind.value] = {
            "a": fit.a,
            "b": fit.b,
            "rmse": fit.rmse,
            "max_strength": params.max_strength,
            "tilt": params.tilt,
        }
        for gamma, rel in curve:
            rows.append((kind.value, gamma, rel))

    with open(out / "ror_curves.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["operation", "strength", "relative_accuracy"])
        writer.writerows(rows)
    (out / "ror_fits.json").write_text(
        json.dumps({"base_accuracy": base_acc, "retention": retention, "fits": fit_payload}, indent=2)
        + "\n"
    )
    render_ror_curves(curves, fits, out / "ror_curves.png", retention)
    print(f"baseline accuracy {base_acc:.4f}; wrote {out}/{{ror_curves.csv,ror_fits.json,ror_curves.png}}")
    return 0


def cmd_ctrl_sim(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = default_plant(seed=args.seed, noisy=args.noisy)
    trace = simulate(cfg, setpoint=args.setpoint, phases=args.phases)

    with open(out / "ctrl_sim.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["phase", "loss_ratio", "retention", "mean_strength", "saturated"])
        for t in trace:
            writer.writerow(
                [t.phase, f"{t.loss_ratio:.6f}", f"{t.retention:.6f}",
                 f"{mean_table_strength(t.table):.6f}", int(t.saturated)]
            )
    with open(out / "ctrl_sim.jsonl", "w") as f:
        for t in trace:
            f.write(json.dumps({
                "phase": t.phase,
                "loss_ratio": t.loss_ratio,
                "retention": t.retention,
                "saturated": t.saturated,
                "table": table_to_json(t.table),
            }) + "\n")
    tail = trace[-min(3, len(trace)):]
    summary = {
        "setpoint": args.setpoint,
        "phases": args.phases,
        "noisy": args.noisy,
        "seed": args.seed,
        "final_loss_ratio": trace[-1].loss_ratio,
        "final_retention": trace[-1].retention,
        "mean_abs_error_last3": sum(abs(t.loss_ratio - args.setpoint) for t in tail) / len(tail),
        "saturated": trace[-1].saturated,
        "table": table_to_json(trace[-1].table),
    }
    (out / "ctrl_sim.json").write_text(json.dumps(summary, indent=2) + "\n")
    render_ctrl_sim(trace, args.setpoint, out / "ctrl_sim.png")
    state = "saturated" if trace[-1].saturated else f"ratio {trace[-1].loss_ratio:.4f}"
    print(
        f"{args.phases} phases, final {state}; "
        f"wrote {out}/{{ctrl_sim.csv,ctrl_sim.jsonl,ctrl_sim.json,ctrl_sim.png}}"
    )
    return 0


REPORT_METRICS = ("final_val_acc", "final_test_acc", "final_loss_ratio", "final_retention", "wallclock_s")


def cmd_report(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    runs = []
    for run_dir in args.runs:
        path = Path(run_dir) / "metrics.json"
        if not path.is_file():
            print(f"skipping {run_dir}: no metrics.json", file=sys.stderr)
            continue
        runs.append((str(run_dir), json.loads(path.read_text())))
    if not runs:
        print("no usable run directories", file=sys.stderr)
        return 1

    rows = []
    for metric in REPORT_METRICS:
        values = [m[metric] for _, m in runs if isinstance(m.get(metric), (int, float))]
        if not values:
            continue
        mean, half = mean_ci95([float(v) for v in values])
        rows.append({"metric": metric, "n": len(values), "mean": mean, "ci95_halfwidth": half})

    with open(out / "report.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["metric", "n", "mean", "ci95_halfwidth"])
        for r in rows:
            writer.writerow([r["metric"], r["n"], f"{r['mean']:.6f}", f"{r['ci95_halfwidth']:.6f}"])
    (out / "report.json").write_text(
        json.dumps({"runs": [d for d, _ in runs], "aggregate": rows}, indent=2) + "\n"
    )
    render_report(rows, out / "report.png")
    print(f"aggregated {len(runs)} runs; wrote {out}/{{report.csv,report.json,report.png}}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctrlaug", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p, with_overrides=True):
        p.add_argument("--config", help="path to a config JSON file")
        p.add_argument("--preset", help="named preset recipe")
        p.add_argument("--data-dir", help="dataset root (or set CTRLA_DATA_DIR)")
        if with_overrides:
            p.add_argument("--seed", type=int, help="override the config seed")
            p.add_argument("--mode", choices=("none", "fixed-table", "ctrl-a"), help="override the mode")
            p.add_argument("--setpoint", type=float, help="override the loss-ratio setpoint")
            p.add_argument("--epochs", type=int, help="override the epoch count")

    t = sub.add_parser("train", help="run a training job")
    add_config_args(t)
    t.add_argument("--out", required=True, help="output directory")
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("ror-curves", help="sweep robustness curves for a snapshot")
    add_config_args(r)
    r.add_argument("--snapshot", help="model snapshot to evaluate (fresh init if omitted)")
    r.add_argument("--retention", type=float, help="retention target for the table preview")
    r.add_argument("--phase", type=int, default=1, help="phase index for direction draws")
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_ror_curves)

    s = sub.add_parser("ctrl-sim", help="simulate the feedback loop on the plant")
    s.add_argument("--setpoint", type=float, default=1.5)
    s.add_argument("--phases", type=int, default=40)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--noisy", action="store_true", help="binomial measurement noise")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_ctrl_sim)

    g = sub.add_parser("report", help="aggregate metrics over run directories")
    g.add_argument("--runs", nargs="+", required=True, help="run directories with metrics.json")
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataFormatError, SnapshotFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
