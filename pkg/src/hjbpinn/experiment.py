"""Width-sweep runner: trains one network per (width, seed) and reports
whether the final risk crosses the label-noise floor, how accuracy grows
with parameter count, and the data behind the accuracy-vs-size scatter.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.stats import spearmanr

from .data import Dataset, sample_dataset
from .hjb import HjbProblem
from .loss import LossWeights
from .network import params_to_json
from .training import (TrainConfig, TrainingDiverged, init_network,
                       read_trace_csv, train, write_trace_csv)

__all__ = ["SweepConfig", "SweepRecord", "run_sweep", "analyze_sweep",
           "emit_fig1_data", "read_records_csv"]


@dataclass(frozen=True)
class SweepConfig:
    widths: Sequence[int]
    seeds: Sequence[int]
    problem: HjbProblem
    weights: LossWeights
    noise_var: float = 0.5
    n_colloc: int = 600
    n_init: int = 200
    n_sup: int = 3276
    noise_kind: str = "uniform"
    data_seed: int = 12345
    shared_dataset: bool = True
    steps: int = 5000
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    record_every: int = 100
    activation: str = "tanh"
    project_ball: bool = False
    weight_radius: Optional[float] = None

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        if not widths or any(b <= a for a, b in zip(widths, widths[1:])):
            raise ValueError("widths must be nonempty and strictly increasing")
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(steps=self.steps, lr=self.lr, beta1=self.beta1,
                           beta2=self.beta2, eps=self.eps,
                           record_every=self.record_every, seed=seed,
                           project_ball=self.project_ball)


@dataclass(frozen=True)
class SweepRecord:
    width: int
    param_count: int
    seed: int
    pde_term: float
    init_term: float
    sup_term: float
    total: float
    accuracy: float
    crossed_noise_floor: bool
    noise_var: float
    trace_path: str
    failed: bool = False

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "param_count": self.param_count,
            "seed": self.seed,
            "pde_term": self.pde_term,
            "init_term": self.init_term,
            "sup_term": self.sup_term,
            "total": self.total,
            "accuracy": self.accuracy,
            "crossed_noise_floor": self.crossed_noise_floor,
            "noise_var": self.noise_var,
            "trace_path": self.trace_path,
            "failed": self.failed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepRecord":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def _run_dataset(cfg: SweepConfig, width: int, seed: int) -> Dataset:
    data_seed = cfg.data_seed if cfg.shared_dataset else (cfg.data_seed, width, seed)
    return sample_dataset(cfg.problem, cfg.n_colloc, cfg.n_init, cfg.n_sup,
                          noise_var=cfg.noise_var, noise_kind=cfg.noise_kind,
                          seed=data_seed)


def _run_one(cfg: SweepConfig, width: int, seed: int):
    """Train one (width, seed) cell; returns (record fields, trace, params)."""
    data = _run_dataset(cfg, width, seed)
    p0 = init_network(width, cfg.problem.space_dim, seed=seed,
                      activation=cfg.activation, radius=cfg.weight_radius)
    try:
        trace = train(p0, data, cfg.weights, cfg.train_config(seed))
        failed = False
    except TrainingDiverged as exc:
        trace = exc.trace
        failed = True
    return width, seed, trace, failed


def _record_from(cfg: SweepConfig, width, seed, trace, failed, trace_path) -> SweepRecord:
    if trace.breakdowns:
        rb = trace.final
    else:
        rb = None
    total = rb.total if rb else float("nan")
    return SweepRecord(
        width=width,
        param_count=width * (cfg.problem.space_dim + 1),
        seed=seed,
        pde_term=rb.pde_term if rb else float("nan"),
        init_term=rb.init_term if rb else float("nan"),
        sup_term=rb.sup_term if rb else float("nan"),
        total=total,
        accuracy=1.0 - total if rb else float("nan"),
        crossed_noise_floor=bool(rb and total < cfg.noise_var),
        noise_var=cfg.noise_var,
        trace_path=trace_path,
        failed=failed,
    )


_RECORD_COLUMNS = ("width", "param_count", "seed", "pde_term", "init_term",
                   "sup_term", "total", "accuracy", "crossed_noise_floor",
                   "noise_var", "trace_path", "failed")


def write_records_csv(records: List[SweepRecord], path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_RECORD_COLUMNS)
        for r in records:
            d = r.to_dict()
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in (d[c] for c in _RECORD_COLUMNS)])


def read_records_csv(path) -> List[SweepRecord]:
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            out.append(SweepRecord(
                width=int(rec["width"]),
                param_count=int(rec["param_count"]),
                seed=int(rec["seed"]),
                pde_term=float(rec["pde_term"]),
                init_term=float(rec["init_term"]),
                sup_term=float(rec["sup_term"]),
                total=float(rec["total"]),
                accuracy=float(rec["accuracy"]),
                crossed_noise_floor=rec["crossed_noise_floor"] == "True",
                noise_var=float(rec["noise_var"]),
                trace_path=rec["trace_path"],
                failed=rec["failed"] == "True",
            ))
    return out


def run_sweep(cfg: SweepConfig, out_dir, jobs: int = 1) -> List[SweepRecord]:
    """Train every (width, seed) cell and persist records incrementally.

    Per-run artifacts land in out_dir/runs/ as they finish (single writer);
    records.csv is written in (width, seed) order at the end so reruns are
    byte-identical regardless of completion order.
    """
    out_dir = str(out_dir)
    runs_dir = os.path.join(out_dir, "runs")
    os.makedirs(runs_dir, exist_ok=True)
    cells = [(w, s) for w in cfg.widths for s in cfg.seeds]
    results = {}

    def finish(width, seed, trace, failed):
        rel = os.path.join("runs", f"trace_w{width}_s{seed}.csv")
        write_trace_csv(trace, os.path.join(out_dir, rel))
        if trace.final_params is not None:
            with open(os.path.join(runs_dir, f"net_w{width}_s{seed}.json"), "w") as fh:
                fh.write(params_to_json(trace.final_params) + "\n")
        record = _record_from(cfg, width, seed, trace, failed, rel)
        with open(os.path.join(runs_dir, f"record_w{width}_s{seed}.json"), "w") as fh:
            json.dump(record.to_dict(), fh, sort_keys=True)
            fh.write("\n")
        results[(width, seed)] = record

    if jobs <= 1:
        for width, seed in cells:
            finish(*_run_one(cfg, width, seed))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_one, cfg, w, s) for w, s in cells]
            for fut in futures:
                finish(*fut.result())

    records = [results[cell] for cell in cells]
    write_records_csv(records, os.path.join(out_dir, "records.csv"))
    return records


def analyze_sweep(records: List[SweepRecord], plateau_rel_tol: float = 0.01) -> dict:
    """Crossing width, proportional sqrt-size fit, and monotone-trend stats.

    The pre-plateau region runs through the first width whose mean accuracy
    is within plateau_rel_tol of the best width's mean accuracy.
    """
    ok = [r for r in records if not r.failed]
    if len(ok) < 3:
        raise ValueError("need at least 3 successful records to analyze")
    crossed = sorted(r.param_count for r in ok if r.crossed_noise_floor)
    widths = sorted({r.width for r in ok})
    mean_acc = {
        w: float(np.mean([r.accuracy for r in ok if r.width == w])) for w in widths
    }
    best = max(mean_acc.values())
    cutoff = best - plateau_rel_tol * abs(best)
    boundary = next(w for w in widths if mean_acc[w] >= cutoff)
    pre = [r for r in ok if r.width <= boundary]

    acc = np.array([r.accuracy for r in pre])
    root_d = np.sqrt([r.param_count for r in pre])
    denom = float(root_d @ root_d)
    slope = float(root_d @ acc) / denom if denom else float("nan")
    resid = acc - slope * root_d
    ss_tot = float(np.sum((acc - acc.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0

    def _spearman(rows):
        if len({r.param_count for r in rows}) < 2:
            return float("nan")
        rho = spearmanr([r.param_count for r in rows],
                        [r.accuracy for r in rows]).statistic
        return float(rho)

    return {
        "records": len(ok),
        "failed_records": len(records) - len(ok),
        "smallest_crossing_param_count": crossed[0] if crossed else "none",
        "plateau_rel_tol": plateau_rel_tol,
        "plateau_boundary_width": boundary,
        "pre_plateau_widths": [w for w in widths if w <= boundary],
        "sqrt_fit_slope": slope,
        "sqrt_fit_r2": r2,
        "spearman_pre_plateau": _spearman(pre),
        "spearman_all": _spearman(ok),
        "mean_accuracy_by_width": {str(w): mean_acc[w] for w in widths},
    }


def emit_fig1_data(records: List[SweepRecord], out_csv, base_dir=None,
                   svg_path=None) -> str:
    """Write the accuracy scatter data: every recorded step of every run
    (is_final=0) plus the final points (is_final=1), with the reference
    accuracy 1 - noise variance in a leading comment line."""
    if not records:
        raise ValueError("no records to emit")
    base_dir = base_dir or "."
    reference = 1.0 - records[0].noise_var
    rows = []
    for r in records:
        trace = read_trace_csv(os.path.join(base_dir, r.trace_path))
        for entry in trace:
            final = int(entry["step"] == trace[-1]["step"])
            rows.append((r.param_count, entry["accuracy"], final, entry["step"]))
    with open(out_csv, "w", newline="") as fh:
        fh.write(f"# reference_accuracy={reference!r}\n")
        writer = csv.writer(fh)
        writer.writerow(("d_N", "accuracy", "is_final", "step"))
        for d, acc, final, step in rows:
            writer.writerow((d, repr(acc), final, step))
    if svg_path:
        _write_scatter_svg(rows, reference, svg_path)
    return out_csv


def read_fig1_csv(path):
    rows = []
    reference = None
    with open(path, newline="") as fh:
        first = fh.readline()
        if first.startswith("#"):
            reference = float(first.split("=", 1)[1])
        else:
            fh.seek(0)
        for rec in csv.DictReader(fh):
            rows.append((int(rec["d_N"]), float(rec["accuracy"]),
                         int(rec["is_final"]), int(rec["step"])))
    return rows, reference


def _write_scatter_svg(rows, reference, path, width=640, height=480, pad=50):
    xs = [r[0] for r in rows]
    ys = [r[1] for r in rows] + [reference]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def sx(v):
        return pad + (v - x_lo) / x_span * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - y_lo) / y_span * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 10}" font-size="12">model size</text>',
        f'<text x="10" y="{height // 2}" font-size="12" transform="rotate(-90 14,{height // 2})">accuracy</text>',
    ]
    ry = sy(reference)
    parts.append(
        f'<line x1="{pad}" y1="{ry:.2f}" x2="{width - pad}" y2="{ry:.2f}" '
        f'stroke="gray" stroke-dasharray="6,4"/>'
    )
    for d, acc, final, _step in rows:
        if not final:
            parts.append(
                f'<circle cx="{sx(d):.2f}" cy="{sy(acc):.2f}" r="2" '
                f'fill="steelblue" fill-opacity="0.45"/>'
            )
    for d, acc, final, _step in rows:
        if final:
            parts.append(
                f'<circle cx="{sx(d):.2f}" cy="{sy(acc):.2f}" r="3.5" fill="crimson"/>'
            )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
