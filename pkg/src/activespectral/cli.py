"""Benchmark command line: single runs, multi-seed sweeps, dataset export, serving."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .engine import CurvePoint, SessionConfig, init_session, advance, run, save_session
from .errors import ActiveSpectralError


def _parse_k(value: str) -> int | None:
    if value == "auto":
        return None
    return int(value)


def _parse_seed_range(value: str) -> list[int]:
    if ".." in value:
        lo, hi = value.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(value)]


def _add_session_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset CSV or precomputed similarity file")
    p.add_argument("--kernel", choices=["gaussian", "chi2", "precomputed"], default=None)
    p.add_argument("--sigma", type=float, default=None, help="gaussian bandwidth (default: median heuristic)")
    p.add_argument("--gamma", type=float, default=None, help="chi-squared kernel scale")
    p.add_argument("--strategy", default=None,
                   choices=["urasc_n", "urasc_p", "urasc_go", "urasc_no", "urasc_po",
                            "random", "random_pairs"])
    p.add_argument("--budget", type=int, default=None, help="max oracle questions")
    p.add_argument("--noise", type=float, default=None, help="oracle flip probability")
    p.add_argument("--k", type=_parse_k, default=argparse.SUPPRESS, metavar="{auto|INT}",
                   help="cluster count, or 'auto' to grow from 2")
    p.add_argument("--b", type=int, default=None, help="gradient shortlist size")
    p.add_argument("--knn-k", type=int, default=None, help="neighbors for the entropy model")
    p.add_argument("--eval-every", type=int, default=None)
    p.add_argument("--labels", default=None, help="label CSV for precomputed kernels")
    p.add_argument("--label-column", default=None)
    p.add_argument("--unlabeled", action="store_true", help="feature CSV has no label column")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--config", default=None, help="JSON file mirroring SessionConfig fields")


def _build_config(args, seed: int) -> SessionConfig:
    raw: dict = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text())
    overrides = {
        "data": args.data,
        "kernel": args.kernel,
        "sigma": args.sigma,
        "gamma": args.gamma,
        "strategy": args.strategy,
        "query_budget": args.budget,
        "noise_rate": args.noise,
        "b": args.b,
        "knn_k": args.knn_k,
        "eval_every": args.eval_every,
        "labels": args.labels,
        "label_column": args.label_column,
    }
    for key, value in overrides.items():
        if value is not None:
            raw[key] = value
    if hasattr(args, "k"):
        raw["n_c"] = args.k
    if args.unlabeled:
        raw["labeled"] = False
    if args.no_standardize:
        raw["standardize"] = False
    raw["seed"] = seed
    return SessionConfig.from_dict(raw)


def write_curve_csv(curve: list[CurvePoint], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["queries", "jcc", "vmeasure", "n_c", "wall_ms"])
        for p in curve:
            writer.writerow([p.queries_used, repr(p.jcc), repr(p.v_measure), p.n_c, p.wall_ms])


def write_curve_json(curve: list[CurvePoint], path) -> None:
    Path(path).write_text(json.dumps([asdict(p) for p in curve], indent=2))


def _cmd_run(args) -> int:
    cfg = _build_config(args, args.seed)
    if args.save_session:
        st = init_session(cfg)
        advance(st)
        save_session(st, args.save_session)
        curve = st.curve
    else:
        curve = run(cfg)
    out = Path(args.out)
    write_curve_csv(curve, out)
    write_curve_json(curve, out.with_suffix(".json"))
    final = curve[-1] if curve else None
    if final:
        print(f"strategy={cfg.strategy} seed={cfg.seed} queries={final.queries_used} "
              f"jcc={final.jcc:.4f} vmeasure={final.v_measure:.4f} n_c={final.n_c}")
    else:
        print("session produced no curve points (unlabeled data?)")
    return 0


def _cmd_sweep(args) -> int:
    seeds = _parse_seed_range(args.seeds)
    finals: list[tuple[int, CurvePoint]] = []
    curves_dir = Path(args.curves_dir) if args.curves_dir else None
    if curves_dir:
        curves_dir.mkdir(parents=True, exist_ok=True)
    for seed in seeds:
        cfg = _build_config(args, seed)
        curve = run(cfg)
        if curves_dir:
            write_curve_csv(curve, curves_dir / f"seed{seed}.csv")
        finals.append((seed, curve[-1]))
        print(f"seed={seed} queries={curve[-1].queries_used} jcc={curve[-1].jcc:.4f} "
              f"vmeasure={curve[-1].v_measure:.4f} n_c={curve[-1].n_c}")
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "queries", "jcc", "vmeasure", "n_c"])
        for seed, p in finals:
            writer.writerow([seed, p.queries_used, repr(p.jcc), repr(p.v_measure), p.n_c])
    mean_jcc = sum(p.jcc for _, p in finals) / len(finals)
    mean_v = sum(p.v_measure for _, p in finals) / len(finals)
    print(f"mean over {len(finals)} seeds: jcc={mean_jcc:.4f} vmeasure={mean_v:.4f}")
    return 0


def _cmd_dataset(args) -> int:
    from .datasets import BUILTIN_DATASETS, write_csv

    if args.name not in BUILTIN_DATASETS:
        print(f"unknown dataset {args.name!r}; available: {sorted(BUILTIN_DATASETS)}",
              file=sys.stderr)
        return 2
    ds = BUILTIN_DATASETS[args.name]()
    write_csv(ds, args.out)
    print(f"wrote {args.name} (n={ds.n}, d={ds.d}, classes={ds.class_count}) to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(data_dir=args.data_dir, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="activespectral",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one benchmark session and write its curve")
    _add_session_args(p_run)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--out", required=True, help="curve CSV path (JSON written alongside)")
    p_run.add_argument("--save-session", default=None, help="also checkpoint the final state")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a seed range and report mean final metrics")
    _add_session_args(p_sweep)
    p_sweep.add_argument("--seeds", required=True, help="seed range a..b (inclusive) or single seed")
    p_sweep.add_argument("--out", required=True, help="summary CSV path")
    p_sweep.add_argument("--curves-dir", default=None, help="directory for per-seed curves")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_data = sub.add_parser("dataset", help="export a bundled benchmark dataset to CSV")
    p_data.add_argument("name", help="wine | balance")
    p_data.add_argument("--out", required=True)
    p_data.set_defaults(func=_cmd_dataset)

    p_serve = sub.add_parser("serve", help="serve live sessions for the oracle UI")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--data-dir", default=None, help="where idle sessions are auto-saved")
    p_serve.add_argument("--ui-dir", default=None, help="built UI bundle to mount at /ui")
    p_serve.set_defaults(func=_cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ActiveSpectralError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
