"""Command-line entry point: bounds, train, sweep, verify, fig1.

Every command resolves one flat config (preset <- file <- --set overrides),
runs, and, when an output directory is given, writes its artifacts plus a
manifest.json recording the fully resolved config, seed, outputs, and
outcome.  Exit codes: 0 success, 1 runtime or check failure, 2 bad usage
or malformed config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .activations import bound_constants
from .bounds import BoundInputs, min_width_for, theorem1_report, theorem2_report
from .config import (ConfigError, problem_from, resolve_config,
                     train_config_from, weights_from)
from .data import sample_dataset
from .experiment import (SweepConfig, analyze_sweep, emit_fig1_data,
                         read_records_csv, run_sweep)
from .network import save_params
from .training import TrainingDiverged, init_network, train, write_trace_csv
from .verify import default_suite

__all__ = ["main"]


def _parse_set(pairs):
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"--set expects KEY=VALUE, got {pair!r}")
        key, _, raw = pair.partition("=")
        from .config import _parse_value

        out[key.strip()] = _parse_value(raw)
    return out


def _write_manifest(out_dir, command, cfg, seed, jobs, outputs, status,
                    error, started):
    if out_dir is None:
        return
    manifest = {
        "command": command,
        "version": __version__,
        "config": cfg,
        "seed": seed,
        "jobs": jobs,
        "outputs": sorted(outputs),
        "status": status,
        "error": error,
        "wall_clock_s": round(time.monotonic() - started, 3),
    }
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _dump_json(obj, out_dir, name, outputs):
    text = json.dumps(obj, indent=2, sort_keys=True)
    print(text)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(text + "\n")
        outputs.append(name)


def _resolved_radius(cfg, width):
    radius = float(cfg["weight_radius"])
    if radius > 0:
        return radius
    d = width * (int(cfg["space_dim"]) + 1)
    return 10.0 * float(np.sqrt(d))


def cmd_bounds(cfg, seed, out_dir, outputs):
    problem = problem_from(cfg)
    weights = weights_from(cfg)
    width = int(cfg["width"])
    outer = np.random.default_rng(seed).normal(3.0, 1.0, width)
    b = bound_constants(cfg["activation"], outer)
    label_bound = float(cfg["label_bound"])
    init_bound = float(cfg["init_bound"])
    if label_bound <= 0 or init_bound <= 0:
        data = sample_dataset(problem, int(cfg["n_colloc"]), int(cfg["n_init"]),
                              int(cfg["n_sup"]), noise_var=float(cfg["noise_var"]),
                              noise_kind=cfg["noise_kind"], seed=int(cfg["data_seed"]))
        label_bound = label_bound if label_bound > 0 else data.label_bound
        init_bound = init_bound if init_bound > 0 else data.init_bound
    bi = BoundInputs(
        space_dim=problem.space_dim,
        width=width,
        weight_radius=_resolved_radius(cfg, width),
        output_bound=b.output_bound,
        gradient_bound=b.gradient_bound,
        curvature_bound=b.curvature_bound,
        box_halfwidth=problem.coordinate_bound,
        horizon=problem.horizon,
        label_bound=label_bound,
        init_bound=init_bound,
        lambda_init=weights.lambda_init,
        lambda_sup=weights.lambda_sup,
        noise_var=float(cfg["noise_var"]),
        eta=float(cfg["eta"]),
        delta=float(cfg["delta"]),
        n_sup=int(cfg["n_sup"]),
        n_init=int(cfg["n_init"]),
        s=float(cfg["s"]) or None,
    )
    report = theorem1_report(bi).to_json_dict()
    report["min_d_N"] = min_width_for(bi, "supervised")
    other = theorem2_report(bi).to_json_dict()
    other["min_d_N"] = min_width_for(bi, "initial_condition")
    report["initial_condition"] = other
    _dump_json(report, out_dir, "bounds.json", outputs)
    return 0


def cmd_train(cfg, seed, out_dir, outputs):
    problem = problem_from(cfg)
    weights = weights_from(cfg)
    data = sample_dataset(problem, int(cfg["n_colloc"]), int(cfg["n_init"]),
                          int(cfg["n_sup"]), noise_var=float(cfg["noise_var"]),
                          noise_kind=cfg["noise_kind"], seed=int(cfg["data_seed"]))
    width = int(cfg["width"])
    radius = float(cfg["weight_radius"]) or None
    p0 = init_network(width, problem.space_dim, seed=seed,
                      activation=cfg["activation"], radius=radius)
    tc = train_config_from(cfg, seed=seed)
    trace = train(p0, data, weights, tc)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_trace_csv(trace, os.path.join(out_dir, "trace.csv"))
        save_params(trace.final_params, os.path.join(out_dir, "net.json"))
        outputs += ["trace.csv", "net.json"]
    final = trace.final
    _dump_json(
        {
            "steps": tc.steps,
            "final": {
                "pde_term": final.pde_term,
                "init_term": final.init_term,
                "sup_term": final.sup_term,
                "total": final.total,
                "accuracy": 1.0 - final.total,
            },
            "crossed_noise_floor": final.total < float(cfg["noise_var"]),
        },
        out_dir, "train_summary.json", outputs,
    )
    return 0


def cmd_sweep(cfg, seed, out_dir, jobs, outputs):
    if out_dir is None:
        raise ConfigError("sweep needs --out for its records and traces")
    problem = problem_from(cfg)
    sweep = SweepConfig(
        widths=[int(w) for w in cfg["widths"]],
        seeds=[int(s) for s in cfg["seeds"]],
        problem=problem,
        weights=weights_from(cfg),
        noise_var=float(cfg["noise_var"]),
        n_colloc=int(cfg["n_colloc"]),
        n_init=int(cfg["n_init"]),
        n_sup=int(cfg["n_sup"]),
        noise_kind=cfg["noise_kind"],
        data_seed=int(cfg["data_seed"]),
        shared_dataset=bool(cfg["shared_dataset"]),
        steps=int(cfg["steps"]),
        lr=float(cfg["lr"]),
        beta1=float(cfg["beta1"]),
        beta2=float(cfg["beta2"]),
        eps=float(cfg["eps"]),
        record_every=int(cfg["record_every"]),
        activation=cfg["activation"],
        project_ball=bool(cfg["project_ball"]),
        weight_radius=float(cfg["weight_radius"]) or None,
    )
    records = run_sweep(sweep, out_dir, jobs=jobs)
    outputs.append("records.csv")
    outputs += [r.trace_path for r in records]
    try:
        summary = analyze_sweep(records)
    except ValueError as exc:
        print(f"note: skipping analysis ({exc})", file=sys.stderr)
        return 0
    _dump_json(summary, out_dir, "analysis.json", outputs)
    return 0


def cmd_verify(cfg, seed, out_dir, outputs):
    results = default_suite(seed=seed, trials_scale=float(cfg["verify_scale"]))
    lines = [json.dumps(r.to_json_dict(), sort_keys=True) for r in results]
    for line in lines:
        print(line)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "verify.jsonl"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
        outputs.append("verify.jsonl")
    return 0 if all(r.passed for r in results) else 1


def cmd_fig1(cfg, sweep_dir, out_dir, outputs):
    if sweep_dir is None:
        raise ConfigError("fig1 needs --sweep-dir pointing at a finished sweep")
    records_path = os.path.join(sweep_dir, "records.csv")
    if not os.path.exists(records_path):
        raise ConfigError(f"no records.csv under {sweep_dir}")
    records = read_records_csv(records_path)
    target = out_dir or sweep_dir
    os.makedirs(target, exist_ok=True)
    emit_fig1_data(records, os.path.join(target, "fig1.csv"), base_dir=sweep_dir,
                   svg_path=os.path.join(target, "fig1.svg"))
    if out_dir is not None:
        outputs += ["fig1.csv", "fig1.svg"]
    print(json.dumps({"fig1_csv": os.path.join(target, "fig1.csv"),
                      "fig1_svg": os.path.join(target, "fig1.svg")}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hjbpinn",
        description="Bounded shallow PDE surrogates with noisy labels: "
                    "training, width sweeps, capacity bounds, verification.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("bounds", "print the capacity bound report as JSON"),
        ("train", "train one network and record its loss trace"),
        ("sweep", "train across widths and seeds, record the transition"),
        ("verify", "run the Monte Carlo and gradient verification suite"),
        ("fig1", "emit the accuracy-vs-size scatter data from a sweep"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("--preset", default="desk", choices=sorted("desk paper".split()))
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key", default=None)
        if name == "fig1":
            p.add_argument("--sweep-dir", default=None,
                           help="directory holding records.csv and runs/")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.monotonic()
    outputs: list = []
    cfg = None
    seed = None
    status, error, code = "ok", None, 0
    try:
        cfg = resolve_config(args.config, preset=args.preset,
                             overrides=_parse_set(args.set))
        seed = int(cfg["seed"] if args.seed is None else args.seed)
        if args.command == "bounds":
            code = cmd_bounds(cfg, seed, args.out, outputs)
        elif args.command == "train":
            code = cmd_train(cfg, seed, args.out, outputs)
        elif args.command == "sweep":
            code = cmd_sweep(cfg, seed, args.out, args.jobs, outputs)
        elif args.command == "verify":
            code = cmd_verify(cfg, seed, args.out, outputs)
        elif args.command == "fig1":
            code = cmd_fig1(cfg, getattr(args, "sweep_dir", None), args.out, outputs)
        if code != 0:
            status = "failed"
    except ConfigError as exc:
        status, error, code = "error", str(exc), 2
        print(f"error: {exc}", file=sys.stderr)
    except TrainingDiverged as exc:
        status, error, code = "error", str(exc), 1
        print(f"error: {exc}", file=sys.stderr)
    except Exception as exc:  # noqa: BLE001 - manifest must record the cause
        status, error, code = "error", f"{type(exc).__name__}: {exc}", 1
        print(f"error: {exc}", file=sys.stderr)
    finally:
        _write_manifest(args.out, args.command, cfg, seed, args.jobs,
                        outputs, status, error, started)
    return code


if __name__ == "__main__":
    sys.exit(main())
