"""Command-line entry points.

Exit codes: 0 success, 1 numerical failure, 2 I/O or configuration failure.
Failures print one ``error: <kind>: <message>`` line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import time

import numpy as np

from . import checkpoint as ckpt_io
from .autodiff import no_grad
from .config import RunConfig, _bool, load_config, rng_stream
from .data import SeriesTable, ZScore, load_csv, prepare, split_mode_for
from .errors import (
    CheckpointError,
    ConfigError,
    ContractError,
    DataError,
    DimensionError,
    FilterBankError,
    NumericalError,
    UninitializedStatsError,
    WPMixerError,
)
from .model import WPMixer

EXIT_OK, EXIT_NUMERIC, EXIT_IO = 0, 1, 2
METRIC_COLUMNS = ("dataset", "horizon", "seed", "split", "mse", "mae")
CHECKPOINT_NAME = "checkpoint.wpmx"
REPORT_NAME = "train_report.csv"
METRICS_NAME = "metrics.csv"


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (NumericalError, FilterBankError, UninitializedStatsError, FloatingPointError)):
        return EXIT_NUMERIC
    return EXIT_IO


def _say(msg: str) -> None:
    print(msg, flush=True)


# -- shared plumbing -------------------------------------------------------

def _cli_overrides(args) -> dict:
    out = {}
    if getattr(args, "seed", None) is not None:
        out[("run", "seed")] = str(args.seed)
    if getattr(args, "out", None):
        out[("run", "out_dir")] = args.out
    if getattr(args, "strict_splits", None) is not None:
        out[("data", "strict_splits")] = args.strict_splits
    if getattr(args, "device", "cpu") != "cpu":
        raise ConfigError(f"device {args.device!r} is not available; only 'cpu' is supported")
    return out


def _resolve(args) -> RunConfig:
    return load_config(getattr(args, "config", None), overrides=_cli_overrides(args))


def _prepared(cfg: RunConfig):
    if not cfg.data.path:
        raise ConfigError("data.path is not set")
    if not os.path.isfile(cfg.data.path):
        raise DataError(f"dataset file not found: {cfg.data.path}")
    table = load_csv(cfg.data.path)
    mode = split_mode_for(cfg.data.path, cfg.data.split)
    prep = prepare(table, cfg.model.seq_len, cfg.model.pred_len, mode,
                   back_reach=not cfg.data.strict_splits, ratios=tuple(cfg.data.ratios))
    return prep


def _make_checkpoint(cfg: RunConfig, model: WPMixer, zscore: ZScore, columns, extra=None):
    tensors = dict(model.state_dict())
    tensors["data.zscore.mean"] = zscore.mean
    tensors["data.zscore.std"] = zscore.std
    meta = {"n_channels": model.cfg.n_channels, "columns": list(columns),
            "dataset": cfg.dataset_name()}
    meta.update(extra or {})
    return ckpt_io.Checkpoint(cfg, tensors, meta)


def _model_from_checkpoint(ck: ckpt_io.Checkpoint) -> tuple[WPMixer, ZScore]:
    model = WPMixer(ck.config.model_config(int(ck.meta["n_channels"])))
    state = {k: v for k, v in ck.tensors.items() if not k.startswith("data.")}
    try:
        model.load_state_dict(state)
    except ContractError as exc:
        raise CheckpointError(f"checkpoint does not fit its own config: {exc}") from None
    try:
        zs = ZScore(ck.tensors["data.zscore.mean"], ck.tensors["data.zscore.std"])
    except KeyError:
        raise CheckpointError("checkpoint lacks standardisation statistics") from None
    return model, zs


def metrics_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_COLUMNS)
    for r in rows:
        w.writerow([r[0], r[1], r[2], r[3], repr(float(r[4])), repr(float(r[5]))])
    return buf.getvalue()


# -- commands ------------------------------------------------------------------

def cmd_train(args) -> int:
    from .training import train

    cfg = _resolve(args)
    prep = _prepared(cfg)
    mcfg = cfg.model_config(prep.table.n_channels)
    seed = cfg.run.seed
    model = WPMixer(mcfg, rng_stream(seed, "init"))
    os.makedirs(cfg.run.out_dir, exist_ok=True)
    path = os.path.join(cfg.run.out_dir, CHECKPOINT_NAME)

    def on_best(m, rec):
        ck = _make_checkpoint(cfg, m, prep.zscore, prep.table.columns, {"best_epoch": rec.epoch})
        ckpt_io.save(path, ck)

    log = None if args.quiet else _say
    report = train(model, prep.train, prep.val, cfg.train_settings(),
                   rng_stream(seed, "shuffle"), rng_stream(seed, "dropout"), seed=seed,
                   on_best=on_best, log=log)
    with open(os.path.join(cfg.run.out_dir, REPORT_NAME), "w") as fh:
        fh.write(report.to_csv())
    with open(os.path.join(cfg.run.out_dir, "config.ini"), "w") as fh:
        fh.write(cfg.to_ini())
    best = report.best
    _say(f"best epoch {best.epoch}: val_mse {best.val_mse!r} val_mae {best.val_mae!r}")
    _say(f"checkpoint {path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .training import evaluate

    ck = ckpt_io.load(args.checkpoint)
    cfg = ck.config
    if args.config:
        given = _resolve(args)
        diff = ckpt_io.config_diff(cfg, given)
        if diff:
            raise CheckpointError("config/checkpoint mismatch: " + "; ".join(diff))
        cfg = RunConfig(given.data, cfg.model, cfg.train, given.run)
    else:
        cfg = cfg.with_values(_cli_overrides(args), "command line")
    model, _ = _model_from_checkpoint(ck)
    prep = _prepared(cfg)
    rows = []
    for split in args.split:
        mse, mae = evaluate(model, prep.part(split), cfg.train.eval_batch_size)
        rows.append((cfg.dataset_name(), cfg.model.pred_len, cfg.run.seed, split, mse, mae))
    text = metrics_csv(rows)
    out_dir = args.out or os.path.dirname(os.path.abspath(args.checkpoint))
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, METRICS_NAME), "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_predict(args) -> int:
    ck = ckpt_io.load(args.checkpoint)
    model, zs = _model_from_checkpoint(ck)
    if not os.path.isfile(args.input):
        raise DataError(f"input file not found: {args.input}")
    table = load_csv(args.input)
    L, T = model.cfg.seq_len, model.cfg.pred_len
    if table.n_channels != model.cfg.n_channels:
        raise DataError(f"{args.input}: {table.n_channels} value columns, model expects "
                        f"{model.cfg.n_channels}")
    if table.n_rows < L:
        raise DataError(f"{args.input}: {table.n_rows} rows, at least L = {L} are required")
    x = zs.apply(table.values[-L:]).T[None]
    with no_grad():
        y = model.forward(x, training=False).data[0].T  # (T, C)
    out = SeriesTable(tuple(f"+{h}" for h in range(1, T + 1)), table.columns, zs.invert(y))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("step",) + out.columns)
    for ts, row in zip(out.timestamps, out.values):
        w.writerow([ts] + [repr(float(v)) for v in row])
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    from .gradcheck import run_toy_check

    results = run_toy_check(seed=args.seed if args.seed is not None else 0)
    worst = max(r.rel_error for r in results)
    if args.verbose:
        for r in results:
            _say(f"{r.name:40s} {r.size:6d}  rel_err {r.rel_error:.3e}")
    _say(f"gradcheck: {len(results)} tensors, {sum(r.size for r in results)} entries, "
         f"max relative error {worst:.3e} (tolerance {args.tol:g})")
    if not worst < args.tol:
        raise NumericalError(f"gradient check failed: max relative error {worst:.3e}")
    return EXIT_OK


def cmd_flops(args) -> int:
    from .flops import flop_breakdown
    from .presets import model_config, row, unified_model_config

    if args.preset:
        name, _, horizon = args.preset.partition("/")
        if not horizon.isdigit():
            raise ConfigError(f"preset must look like ETTh1/96, got {args.preset!r}")
        mcfg = (unified_model_config(name, int(horizon)) if args.unified
                else model_config(row(name, int(horizon))))
    else:
        cfg = _resolve(args)
        channels = None
        if cfg.model.channels == 0 and cfg.data.path:
            channels = load_csv(cfg.data.path).n_channels
        mcfg = cfg.model_config(channels)
    parts = flop_breakdown(mcfg, args.batch)
    total = sum(parts.values())
    for k, v in parts.items():
        _say(f"{k:16s} {v / 1e9:.6f}")
    _say(f"{'total':16s} {total / 1e9:.6f} GFLOPs (batch {args.batch})")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .gradcheck import run_toy_check
    from .normalization import RevIN
    from .wavelet import SUPPORTED, decompose, filter_bank, reconstruct
    from .wavelet.filters import check_filter_bank

    failures = 0
    t0 = time.perf_counter()

    def report(name, ok, detail):
        nonlocal failures
        failures += not ok
        _say(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")

    for w in SUPPORTED:
        try:
            check_filter_bank(filter_bank(w))
            report(f"filters {w}", True, "orthonormality / perfect reconstruction identities hold")
        except FilterBankError as exc:
            report(f"filters {w}", False, str(exc))
    rng = np.random.default_rng(0)
    worst = 0.0
    for w in SUPPORTED:
        for L in (96, 336, 512, 1200):
            x = rng.standard_normal((2, 3, L))
            for m in range(1, 6):
                r = reconstruct(decompose(x, w, m), L).data
                worst = max(worst, float(np.abs(r - x).max()))
    report("wavelet round trip", worst < 1e-8, f"max error {worst:.2e} over 11 wavelets x m 1..5 x 4 lengths")
    rev = RevIN(3)
    rev.weight.data = rng.uniform(0.5, 1.5, 3)
    rev.bias.data = rng.uniform(-1, 1, 3)
    x = rng.standard_normal((4, 3, 50)) * 5 + 2
    y, st = rev.normalize(x)
    err = float(np.abs(rev.denormalize(y, st).data - x).max())
    report("revin round trip", err < 1e-10, f"max error {err:.2e}")
    g = max(r.rel_error for r in run_toy_check())
    report("toy gradient check", g < 1e-4, f"max relative error {g:.2e}")
    _say(f"selftest: {failures} failure(s) in {time.perf_counter() - t0:.1f}s")
    return EXIT_NUMERIC if failures else EXIT_OK


# -- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wpmixer", description="Wavelet patch-mixer forecaster")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=False):
        sp.add_argument("--config", required=config_required, help="INI run configuration")
        sp.add_argument("--seed", type=int, help="overrides run.seed")
        sp.add_argument("--out", help="output directory (overrides run.out_dir)")
        sp.add_argument("--device", default="cpu", help="reserved; only 'cpu'")
        sp.add_argument("--strict-splits", dest="strict_splits", metavar="BOOL",
                        help="true: val/test inputs never reach into the previous split")

    sp = sub.add_parser("train", help="train a model and write checkpoint + report")
    common(sp, config_required=True)
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a checkpoint and write metrics.csv")
    common(sp)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--split", nargs="+", default=["test"], choices=("train", "val", "test"))
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("predict", help="forecast the horizon after the last rows of a CSV")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("gradcheck", help="finite-difference check on the toy configuration")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--tol", type=float, default=1e-4)
    sp.add_argument("--verbose", action="store_true")
    sp.set_defaults(func=cmd_gradcheck)

    sp = sub.add_parser("flops", help="analytic forward-pass FLOP count")
    common(sp)
    sp.add_argument("--preset", help="published row, e.g. ETTh1/96")
    sp.add_argument("--unified", action="store_true", help="with --preset: look-back 96, d = 16")
    sp.add_argument("--batch", type=int, default=1)
    sp.set_defaults(func=cmd_flops)

    sp = sub.add_parser("selftest", help="filter, round-trip, RevIN and gradient checks")
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "strict_splits", None) is not None:
        try:
            args.strict_splits = "true" if _bool(args.strict_splits) else "false"
        except ValueError as exc:
            print(f"error: config: --strict-splits: {exc}", file=sys.stderr)
            return EXIT_IO
    try:
        return args.func(args)
    except (WPMixerError, OSError, FloatingPointError) as exc:
        kind = {NumericalError: "numerical", ConfigError: "config", DataError: "data",
                CheckpointError: "checkpoint", DimensionError: "shape",
                ContractError: "contract"}.get(type(exc), type(exc).__name__)
        msg = " ".join(str(exc).split())
        print(f"error: {kind}: {msg}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
