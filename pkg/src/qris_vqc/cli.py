"""Command-line entry point: gen-data, train, eval and sweep.

Exit codes: 0 success, 1 usage error (bad flags or config values),
2 runtime or data error (missing/malformed files, degenerate inputs).

Every CSV starts with a ``schema`` column holding ``<table>/<version>`` so
downstream readers can check the layout. Floats are written with ``repr``.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import dataset as ds
from .encoding import INPUT_MODES
from .params_file import load_params, save_params
from .training import TrainConfig, evaluate, prepare_inputs, train
from .vqc import LABELS

log = logging.getLogger("qris_vqc")

METRICS_SCHEMA = "epoch-metrics/1"
EVAL_SCHEMA = "eval/1"
SWEEP_SCHEMA = "sweep/1"
DEFAULT_GRIDS = {"noise": (0.0, 0.05, 0.1, 0.2), "damping": (0.5, 0.65, 0.8, 0.95)}

# command-line flag -> TrainConfig field
FLAG_FIELDS = {
    "epochs": "epochs", "batch": "batch_size", "lr": "learning_rate",
    "weight_decay": "weight_decay", "p": "p", "q": "q", "gamma_max": "gamma_max",
    "gamma_init": "gamma_init", "fmin": "f_min", "lambda_": "lambda_init",
    "lambda_cap": "lambda_cap", "jitter": "noise_jitter", "config_selector": "mode",
    "num_layers": "num_layers", "alpha": "alpha", "seed": "seed",
}
CONFUSION_COLUMNS = [f"conf_{t}_{p}" for t in LABELS for p in LABELS]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _bounded(kind, lo=None, hi=None, lo_open=False, hi_open=False):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}") from None
        if kind is float and not np.isfinite(v):
            raise argparse.ArgumentTypeError(f"{text!r} is not finite")
        if lo is not None and (v < lo or (lo_open and v == lo)):
            raise argparse.ArgumentTypeError(f"{v} is below the minimum {lo}")
        if hi is not None and (v > hi or (hi_open and v == hi)):
            raise argparse.ArgumentTypeError(f"{v} is above the maximum {hi}")
        return v
    return parse


probability = _bounded(float, 0.0, 1.0)
unit_open = _bounded(float, 0.0, 1.0, lo_open=True, hi_open=True)
positive_int = _bounded(int, 1)
non_negative = _bounded(float, 0.0)


def _csv_list(item):
    def parse(text):
        parts = [s.strip() for s in text.split(",") if s.strip()]
        if not parts:
            raise argparse.ArgumentTypeError("list is empty")
        return [item(s) for s in parts]
    return parse


def _mode(text):
    if text not in INPUT_MODES:
        raise argparse.ArgumentTypeError(f"{text!r} is not one of {', '.join(INPUT_MODES)}")
    return text


def _training_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    g = parent.add_argument_group("training (defaults < --config file < flags)")
    g.add_argument("--config", type=Path, help="JSON file of TrainConfig field overrides")
    g.add_argument("--epochs", type=positive_int)
    g.add_argument("--batch", type=positive_int, help="batch size")
    g.add_argument("--lr", type=_bounded(float, 0.0, lo_open=True), help="Adam learning rate")
    g.add_argument("--weight-decay", type=non_negative)
    g.add_argument("--p", type=probability, help="nominal depolarizing probability")
    g.add_argument("--q", type=probability, help="nominal dephasing probability")
    g.add_argument("--gamma-max", type=unit_open)
    g.add_argument("--gamma-init", type=unit_open)
    g.add_argument("--fmin", type=unit_open, help="fidelity floor F_min")
    g.add_argument("--lambda", dest="lambda_", type=non_negative, help="initial penalty weight")
    g.add_argument("--lambda-cap", type=non_negative)
    g.add_argument("--jitter", type=probability, help="per-sample noise jitter fraction")
    g.add_argument("--config-selector", type=_mode, help="input configuration")
    g.add_argument("--num-layers", type=positive_int)
    g.add_argument("--alpha", type=probability, help="mixture weight when the data has none")
    g.add_argument("--seed", type=int)
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qris-vqc", description="Noise-aware VQC blockage classifier.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    train_flags = _training_flags()

    p = sub.add_parser("gen-data", help="write a synthetic dataset file")
    p.add_argument("--n", type=_bounded(int, 3), default=1000, help="number of samples (>= 3)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=non_negative, default=0.05, help="image blob spread")
    p.add_argument("--train-fraction", type=unit_open, default=0.7)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("train", parents=[train_flags], help="train and save metrics + params")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)

    p = sub.add_parser("eval", help="evaluate a params file on a dataset split")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--params", type=Path, required=True)
    p.add_argument("--split", choices=("test", "train", "all"), default="test")
    p.add_argument("--p", type=probability, help="override the stored depolarizing probability")
    p.add_argument("--q", type=probability, help="override the stored dephasing probability")
    p.add_argument("--num-layers", type=positive_int,
                   help="expected ansatz depth; must match the params file")
    p.add_argument("--out", type=Path, help="CSV output path")

    p = sub.add_parser("sweep", parents=[train_flags], help="train+eval over a grid")
    p.add_argument("--kind", choices=tuple(DEFAULT_GRIDS), required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--grid", type=_csv_list(probability),
                   help="comma-separated values (p for noise, gamma_max for damping)")
    p.add_argument("--configs", type=_csv_list(_mode), default=["hybrid"],
                   help="comma-separated input configurations")
    p.add_argument("--jobs", type=positive_int, default=1, help="parallel worker processes")
    p.add_argument("--out", type=Path, required=True)
    return parser


def resolve_config(args) -> TrainConfig:
    """Built-in defaults, then the --config file, then explicit flags."""
    values = asdict(TrainConfig())
    explicit = set()
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(loaded) - set(values)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(loaded)
        explicit |= set(loaded)
    for flag, name in FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
            explicit.add(name)
    if "gamma_init" not in explicit:
        values["gamma_init"] = min(values["gamma_init"], values["gamma_max"])
    if isinstance(values.get("rate_bounds"), list):
        values["rate_bounds"] = tuple(values["rate_bounds"])
    try:
        return TrainConfig(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "" if v is None else str(v)


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row[k]) for k in header])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")


def run_id(config: TrainConfig, data_path: Path, extra: str = "") -> str:
    """Short content hash of the resolved config and the dataset bytes."""
    h = hashlib.sha256(json.dumps(asdict(config), sort_keys=True, default=str).encode())
    h.update(Path(data_path).read_bytes())
    h.update(extra.encode())
    return h.hexdigest()[:12]


def load_split(path: Path):
    """Dataset file -> (train, test, meta); the split seed is stored in the file."""
    samples, meta = ds.load(path)
    seed = meta.seed if meta.seed is not None else 0
    train_s, test_s = ds.split(samples, meta.train_fraction, seed=seed)
    return train_s, test_s, meta


def cmd_gen_data(args) -> int:
    params = ds.ClassParams(sigma=args.sigma)
    samples, meta = ds.generate(args.n, seed=args.seed, class_params=params)
    meta.train_fraction = args.train_fraction
    ds.split(samples, args.train_fraction, seed=args.seed)  # fail early on an empty side
    args.out.parent.mkdir(parents=True, exist_ok=True)
    ds.save(args.out, samples, meta)
    print(f"wrote {len(samples)} samples to {args.out}")
    return 0


def _params_config(config: TrainConfig, rate_bounds) -> dict:
    return {"num_layers": config.num_layers, "mode": config.mode,
            "rate_min": rate_bounds[0], "rate_max": rate_bounds[1], "p": config.p,
            "q": config.q, "alpha": config.alpha, "qris_phase": config.qris_phase,
            "noise_scope": config.noise_scope, "gamma_max": config.gamma_max}


def cmd_train(args) -> int:
    config = resolve_config(args)
    train_s, test_s, meta = load_split(args.data)
    X_tr, y_tr = ds.to_arrays(train_s)
    X_te, y_te = ds.to_arrays(test_s)
    params, metrics = train(X_tr, y_tr, X_te, y_te, config, rate_bounds=meta.rate_bounds)
    rid = run_id(config, args.data)
    header = ["schema", "run_id", "mode", "p", "q", "seed", "epoch", "mean_loss", "mean_ce",
              "mean_fidelity", "train_accuracy", "test_accuracy", "lambda", "gamma"]
    rows = [{"schema": METRICS_SCHEMA, "run_id": rid, "mode": config.mode, "p": config.p,
             "q": config.q, "seed": config.seed, "epoch": m.epoch, "mean_loss": m.mean_loss,
             "mean_ce": m.mean_ce, "mean_fidelity": m.mean_fidelity,
             "train_accuracy": m.train_accuracy, "test_accuracy": m.test_accuracy,
             "lambda": m.lam, "gamma": m.gamma} for m in metrics]
    out = args.out_dir
    write_csv(out / "metrics.csv", header, rows)
    save_params(out / "params.txt", params, _params_config(config, meta.rate_bounds))
    (out / "config.json").write_text(json.dumps(asdict(config), sort_keys=True, indent=2)
                                     + "\n", encoding="utf-8")
    last = metrics[-1]
    print(f"run {rid}: test accuracy {last.test_accuracy:.4f}, "
          f"train fidelity {last.mean_fidelity:.4f}, gamma {params.gamma:.4f}")
    print(f"wrote {out / 'metrics.csv'} and {out / 'params.txt'}")
    return 0


def _eval_row(config, params, samples, rate_bounds):
    X, y = ds.to_arrays(samples)
    res = evaluate(prepare_inputs(X, y, config, rate_bounds), params, config)
    row = {"accuracy": res["accuracy"], "mean_fidelity": res["mean_fidelity"], "n": len(y)}
    row.update({c: int(v) for c, v in zip(CONFUSION_COLUMNS, res["confusion"].ravel())})
    return row, res["confusion"]


def cmd_eval(args) -> int:
    params, stored = load_params(args.params)
    if args.num_layers is not None and args.num_layers != stored["num_layers"]:
        raise ValueError(f"params file holds a {stored['num_layers']}-layer ansatz "
                         f"({params.thetas.size} angles) but --num-layers is {args.num_layers}")
    train_s, test_s, _ = load_split(args.data)
    samples = {"test": test_s, "train": train_s, "all": train_s + test_s}[args.split]
    config = TrainConfig(
        num_layers=stored["num_layers"], mode=stored["mode"],
        p=stored["p"] if args.p is None else args.p, q=stored["q"] if args.q is None else args.q,
        alpha=stored["alpha"], qris_phase=stored["qris_phase"],
        noise_scope=stored["noise_scope"], gamma_max=stored["gamma_max"],
        gamma_init=min(params.gamma, stored["gamma_max"]))
    bounds = (stored["rate_min"], stored["rate_max"])
    row, confusion = _eval_row(config, params, samples, bounds)
    print(f"accuracy      {row['accuracy']:.4f}")
    print(f"mean fidelity {row['mean_fidelity']:.6f}")
    print("confusion (rows true, cols predicted; labels -1, 0, 1)")
    for lab, counts in zip(LABELS, confusion):
        print(f"  {lab:>2} " + " ".join(f"{c:>5d}" for c in counts))
    if args.out is not None:
        row.update({"schema": EVAL_SCHEMA, "params": Path(args.params).name,
                    "split": args.split, "mode": config.mode, "p": config.p, "q": config.q,
                    "gamma": params.gamma})
        header = ["schema", "params", "split", "mode", "p", "q", "gamma", "n", "accuracy",
                  "mean_fidelity", *CONFUSION_COLUMNS]
        write_csv(args.out, header, [row])
    return 0


def cell_seed(base: int, index: int) -> int:
    """Independent per-cell seed derived from (base seed, cell index)."""
    return int(np.random.SeedSequence([int(base) & 0xFFFFFFFF, index]).generate_state(1)[0])


def sweep_cells(kind: str, grid, configs, base: TrainConfig) -> list[dict]:
    cells = []
    for mode in configs:
        for value in grid:
            cfg = asdict(base)
            cfg["mode"] = mode
            if kind == "noise":
                # dephasing follows depolarizing at the nominal ratio
                ratio = base.q / base.p if base.p > 0 else 0.0
                cfg["p"], cfg["q"] = float(value), float(min(value * ratio, 1.0))
            else:
                cfg["gamma_max"] = cfg["gamma_init"] = float(value)
            cfg["seed"] = cell_seed(base.seed, len(cells))
            cells.append(cfg)
    return cells


def run_cell(cell: dict, data_path: str) -> dict:
    config = TrainConfig(**cell)
    train_s, test_s, meta = load_split(Path(data_path))
    X_tr, y_tr = ds.to_arrays(train_s)
    params, metrics = train(X_tr, y_tr, None, None, config, rate_bounds=meta.rate_bounds)
    row, _ = _eval_row(config, params, test_s, meta.rate_bounds)
    last = metrics[-1]
    return {"test_accuracy": row["accuracy"], "test_fidelity": row["mean_fidelity"],
            "train_fidelity": last.mean_fidelity, "final_loss": last.mean_loss,
            "final_lambda": last.lam, "final_gamma": params.gamma}


def cmd_sweep(args) -> int:
    if args.grid is not None and not args.grid:
        raise UsageError("empty grid")
    grid = args.grid or list(DEFAULT_GRIDS[args.kind])
    if args.kind == "damping" and any(not 0.0 < g < 1.0 for g in grid):
        raise UsageError("damping grid values must lie in (0, 1)")
    base = resolve_config(args)
    cells = sweep_cells(args.kind, grid, args.configs, base)
    ds.load(args.data)  # surface data errors before spawning work
    data = str(args.data)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_cell, cells, [data] * len(cells)))
    else:
        results = [run_cell(c, data) for c in cells]
    header = ["schema", "cell", "kind", "mode", "p", "q", "gamma_max", "gamma_init", "seed",
              "epochs", "test_accuracy", "test_fidelity", "train_fidelity", "final_loss",
              "final_lambda", "final_gamma"]
    rows = []
    for i, (cell, res) in enumerate(zip(cells, results)):
        rows.append({"schema": SWEEP_SCHEMA, "cell": i, "kind": args.kind, **cell, **res})
        log.info("cell %d %s p=%g gamma_max=%g acc=%.3f fid=%.4f", i, cell["mode"], cell["p"],
                 cell["gamma_max"], res["test_accuracy"], res["test_fidelity"])
    write_csv(args.out, header, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


COMMANDS = {"gen-data": cmd_gen_data, "train": cmd_train, "eval": cmd_eval, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"qris-vqc: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"qris-vqc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
