"""Command-line orchestration of the pipeline stages.

Each subcommand reads its inputs, writes its artifacts into ``--out`` and
prints one summary line. Existing outputs are never replaced unless
``--overwrite`` is given. Exit status: 0 on success, 1 on a pipeline error,
2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import sys
from dataclasses import replace
from pathlib import Path

from . import io
from .baseline import fit_threshold_model
from .errors import SlipcalError
from .evaluation import (
    SweepAxis,
    evaluate,
    exclusion_sweep,
    sweep_sampling_rates,
    sweep_window_sizes,
    transfer_matrix,
)
from .lstm import train
from .pipeline import balanced_split, list_csv, recording_filename, spectral_report, synth_corpus
from .spectral import most_significant_band

__all__ = ["cli_main", "build_parser"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser, out_help: str) -> None:
    p.add_argument("--config", help="run configuration file (key = value lines)")
    p.add_argument("--seed", type=int, help="root seed; overrides the config value")
    p.add_argument("--out", required=True, help=out_help)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for independent jobs (default 1)")
    p.add_argument("--overwrite", action="store_true", help="replace existing output files")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slipcal", description="Slip detection pipeline on tactile recordings.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic recording corpus")
    _common(p, "directory for recording CSVs")

    p = sub.add_parser("preprocess", help="collapse recordings to univariate gradient signals")
    p.add_argument("--recordings", required=True, help="directory of recording CSVs")
    _common(p, "directory for signal CSVs")

    p = sub.add_parser("balance", help="build the balanced windowed dataset and split it in halves")
    p.add_argument("--recordings", required=True)
    p.add_argument("--window", type=int, help="window size in samples (default: config window_size)")
    _common(p, "directory for train.csv and test.csv")

    p = sub.add_parser("spectrum", help="bootstrap KS significance of slip vs non-slip spectra")
    p.add_argument("--recordings", required=True)
    p.add_argument("--plot", action="store_true", help="also write spectrum.svg")
    _common(p, "directory for spectrum.csv")

    p = sub.add_parser("train", help="train the LSTM classifier")
    p.add_argument("--train", required=True, help="training dataset CSV")
    _common(p, "directory for model.json and history.csv")

    p = sub.add_parser("eval", help="score a model (LSTM or threshold) on a dataset")
    p.add_argument("--model", required=True, help="model.json or threshold.csv")
    p.add_argument("--test", required=True, help="test dataset CSV")
    _common(p, "directory for eval.csv")

    p = sub.add_parser("baseline", help="calibrate the band-energy threshold classifier")
    p.add_argument("--train", required=True)
    p.add_argument("--spectrum", required=True, help="spectrum.csv from the spectrum stage")
    _common(p, "directory for threshold.csv")

    p = sub.add_parser("sweep", help="accuracy sweep over one factor")
    p.add_argument("--axis", required=True, choices=["window", "rate", "material", "speed", "transfer"])
    p.add_argument("--recordings", help="directory of recording CSVs (default: synthesize from config)")
    _common(p, "directory for sweep_<axis>.csv")
    return parser


def _config(args) -> io.RunConfig:
    if args.config:
        cfg = io.load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        return cfg
    if args.seed is None:
        raise UsageError("either --config or --seed is required (seeds are never implicit)")
    return io.RunConfig(seed=args.seed, train=replace(io.RunConfig(seed=0).train, seed=args.seed))


def _meta(cfg: io.RunConfig, **more) -> dict:
    return {"run_seed": cfg.seed, "config": cfg.fingerprint(), **more}


def _load_recordings(directory):
    paths = list_csv(directory)
    if not paths:
        raise SlipcalError(f"no recording CSVs in {directory}")
    return [io.read_recording(p) for p in paths]


def _recordings(args, cfg):
    src = getattr(args, "recordings", None) or cfg.recordings_dir
    return _load_recordings(src) if src else synth_corpus(cfg.synth, cfg.seed)


def _write(path: Path, text: str, overwrite: bool) -> None:
    io._write_text(path, text, overwrite)


def _cmd_synth(args, cfg, out: Path) -> str:
    recs = synth_corpus(cfg.synth, cfg.seed)
    for k, r in enumerate(recs):
        io.write_recording(r, out / recording_filename(r, k), overwrite=args.overwrite)
    return f"synth: wrote {len(recs)} recordings to {out}"


def _cmd_preprocess(args, cfg, out: Path) -> str:
    paths = list_csv(args.recordings)
    if not paths:
        raise SlipcalError(f"no recording CSVs in {args.recordings}")
    for p in paths:
        r = io.read_recording(p)
        io.write_signal(r.collapse(), out / p.name, r.provenance, overwrite=args.overwrite)
    return f"preprocess: wrote {len(paths)} signals to {out}"


def _cmd_balance(args, cfg, out: Path) -> str:
    w = args.window or cfg.window_size
    tr, te = balanced_split(_load_recordings(args.recordings), w, cfg.seed)
    meta = _meta(cfg)
    io.write_dataset(tr, out / "train.csv", meta, overwrite=args.overwrite)
    io.write_dataset(te, out / "test.csv", meta, overwrite=args.overwrite)
    return f"balance: W={w} train={len(tr)} test={len(te)} windows"


def _cmd_spectrum(args, cfg, out: Path) -> str:
    recs = _load_recordings(args.recordings)
    rep = spectral_report(recs, cfg.seed, cfg.spectral.n_bootstrap, cfg.spectral.n_repetitions)
    io.write_spectral_report(rep, out / "spectrum.csv", _meta(cfg), overwrite=args.overwrite)
    if args.plot:
        io.plot_spectral_report(rep, out / "spectrum.svg", overwrite=args.overwrite)
    try:
        band = most_significant_band(rep, cfg.spectral.threshold)
        summary = f"most significant band {band.low_hz:g}-{band.high_hz:g} Hz"
    except SlipcalError:
        summary = "no significant band"
    return f"spectrum: {len(rep.frequencies)} bins, {summary}"


def _cmd_train(args, cfg, out: Path) -> str:
    ds = io.read_dataset(args.train)
    model, history = train(ds, cfg.train)
    io.save_model(model, out / "model.json", overwrite=args.overwrite)
    buf = _io.StringIO()
    buf.write(f"# run_seed={cfg.seed} config={cfg.fingerprint()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["stage", "learning_rate", "epoch", "loss", "accuracy"])
    for h in history:
        w.writerow([h.stage, io._g(h.learning_rate), h.epoch, io._g(h.loss), io._g(h.accuracy)])
    _write(out / "history.csv", buf.getvalue(), args.overwrite)
    final = history[-1] if history else None
    tail = f", final loss {final.loss:.4f}, train accuracy {100 * final.accuracy:.1f}%" if final else ""
    return f"train: {len(history)} epochs on {len(ds)} windows{tail}"


def _load_any_model(path):
    if str(path).endswith(".json"):
        return io.load_model(path)
    return io.load_threshold_model(path)


def _cmd_eval(args, cfg, out: Path) -> str:
    model = _load_any_model(args.model)
    rep = evaluate(model, io.read_dataset(args.test))
    io.write_eval_report(rep, out / "eval.csv", _meta(cfg), overwrite=args.overwrite)
    return f"eval: accuracy {100 * rep.accuracy:.1f}% (TP {100 * rep.tp_rate:.1f}%, TN {100 * rep.tn_rate:.1f}%)"


def _cmd_baseline(args, cfg, out: Path) -> str:
    band = most_significant_band(io.read_spectral_report(args.spectrum), cfg.spectral.threshold)
    model = fit_threshold_model(io.read_dataset(args.train), band)
    io.save_threshold_model(model, out / "threshold.csv", overwrite=args.overwrite)
    return f"baseline: band {band.low_hz:g}-{band.high_hz:g} Hz, threshold {model.threshold:.6g}"


def _cmd_sweep(args, cfg, out: Path) -> str:
    recs = _recordings(args, cfg)
    jobs = args.jobs
    if args.axis == "window":
        rep = sweep_window_sizes(recs, cfg.sweep.window_sizes, cfg.train, cfg.seed, jobs)
    elif args.axis == "rate":
        rep = sweep_sampling_rates(recs, cfg.sweep.rate_factors, cfg.sweep.base_window, cfg.train, cfg.seed, jobs)
    elif args.axis == "transfer":
        rep = transfer_matrix(recs, cfg.train, cfg.seed, cfg.window_size, jobs)
    else:
        axis = SweepAxis.MATERIAL if args.axis == "material" else SweepAxis.SPEED
        rep = exclusion_sweep(recs, axis, cfg.train, cfg.seed, cfg.window_size, jobs)
    text = rep.to_csv().replace("\n", f" run_config={cfg.fingerprint()}\n", 1)
    _write(out / f"sweep_{args.axis}.csv", text, args.overwrite)
    return f"sweep: {len(rep.rows)} rows along {rep.axis.value}\n{rep.to_table().rstrip()}"


_COMMANDS = {
    "synth": _cmd_synth,
    "preprocess": _cmd_preprocess,
    "balance": _cmd_balance,
    "spectrum": _cmd_spectrum,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "baseline": _cmd_baseline,
    "sweep": _cmd_sweep,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        cfg = _config(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (SlipcalError, OSError) as exc:
        print(f"slipcal {args.command}: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    try:
        print(_COMMANDS[args.command](args, cfg, out))
    except (SlipcalError, OSError, ValueError, FloatingPointError) as exc:
        print(f"slipcal {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
