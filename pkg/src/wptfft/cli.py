"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 invariant violation.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bench import (
    STANDARD_GRID,
    delay_sweep,
    measure_processing_time,
    system_delay,
)
from .features import extract_feature_matrix, extract_features
from .io import (
    DataFormatError,
    fmt,
    load_model,
    load_signals,
    read_config,
    read_feature_csv,
    read_synthesis_specs,
    save_model,
    write_feature_csv,
    write_signal_csv,
)
from .ml.data import LabeledDataset, split_dataset
from .ml.forest import ForestParams, MetadataMismatchError, predict, train_forest
from .ml.metrics import evaluate
from .ml.tuning import forest_space, tune_bayesian
from .selection import select_over_segments, select_wavelet_and_level
from .signal import SignalSegment, segment_signal, synthesize_bearing_signal
from .wavelets import SUPPORTED_WAVELETS, wavelet_filters

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 0, 1, 2, 3

log = logging.getLogger("wptfft")


class UsageError(Exception):
    pass


class InvariantError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass(frozen=True)
class RunConfig:
    fs: float
    window: int
    hop: Optional[int]
    k: int
    m: int
    wavelet: str
    pad: bool = False

    def validate(self) -> None:
        if not self.fs > 0:
            raise InvariantError("--fs must be positive")
        if self.window < 1:
            raise InvariantError("--window must be >= 1")
        if self.hop is not None and self.hop < 1:
            raise InvariantError("--hop must be >= 1")
        if self.k < 1 or self.m < 1:
            raise InvariantError("--k and --m must be >= 1")
        if self.window % (1 << self.k) and not self.pad:
            raise InvariantError(
                f"window {self.window} is not divisible by 2**k = {1 << self.k} (use --pad to extend)"
            )
        try:
            wavelet_filters(self.wavelet)
        except ValueError as exc:
            raise InvariantError(str(exc)) from None


def _int_list(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v.strip()]


def _label_map(s: str) -> dict[str, str]:
    out = {}
    for item in s.split(","):
        if not item.strip():
            continue
        key, sep, val = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"label map entries must be raw=label, got {item!r}")
        out[key.strip()] = val.strip()
    return out


def _add_segmenting(p, window_required=True):
    p.add_argument("--signals", required=True, help="signal CSV file or directory of CSV files")
    p.add_argument("--fs", type=float, required=True, help="sampling rate, samples/s")
    p.add_argument("--window", type=int, required=window_required, help="segment length N_o")
    p.add_argument("--hop", type=int, default=None, help="segment hop (default: window)")
    p.add_argument("--label-map", type=_label_map, default=None, help="raw=label,... mapping")


def build_parser() -> _Parser:
    parser = _Parser(prog="wptfft", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a labelled synthetic dataset")
    p.add_argument("--spec", required=True, help="INI file of fault synthesis specs")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("extract", help="signals -> WPT-FFT feature CSV")
    _add_segmenting(p)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--wavelet", default="db4")
    p.add_argument("--pad", action="store_true", help="mirror-extend windows not divisible by 2**k")
    p.add_argument("--out", required=True)

    p = sub.add_parser("select-wavelet", help="energy-to-entropy score table")
    _add_segmenting(p)
    p.add_argument("--candidates", default=",".join(SUPPORTED_WAVELETS))
    p.add_argument("--kmax", type=int, default=3)
    p.add_argument("--segment-index", type=int, default=0)
    p.add_argument("--aggregate", choices=("none", "mean"), default="none")
    p.add_argument("--out", default=None, help="CSV path (default stdout)")

    p = sub.add_parser("train", help="feature CSV -> model file")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tune-budget", type=int, default=0, help="0: default hyperparameters")
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=32)
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.add_argument("--features-per-split", type=int, default=None)
    p.add_argument("--train-fraction", type=float, default=None, help="hold out the rest")
    p.add_argument("--test-out", default=None, help="feature CSV for held-out rows")
    p.add_argument("--trial-log", default=None)

    p = sub.add_parser("evaluate", help="model + feature CSV -> metrics report")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("predict", help="classify one segment and report tau_d")
    p.add_argument("--model", required=True)
    p.add_argument("--signal", required=True, help="signal CSV; its first window is used")
    p.add_argument("--fs", type=float, default=None, help="default: from model metadata")
    p.add_argument("--offset", type=int, default=0)
    p.add_argument("--reps", type=int, default=20)

    p = sub.add_parser("bench", help="system-delay sweep")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--signals")
    src.add_argument("--spec")
    p.add_argument("--fs", type=float, default=None)
    p.add_argument("--label-map", type=_label_map, default=None)
    p.add_argument("--n-o", type=_int_list, default=[300, 600, 1200, 2400])
    p.add_argument("--k", type=_int_list, default=[2, 3, 5])
    p.add_argument("--m", type=_int_list, default=[1, 2, 3])
    p.add_argument("--wavelet", default="db4")
    p.add_argument("--pad", action="store_true")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--segments-per-class", type=int, default=40)
    p.add_argument("--n-trees", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--environment", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--averaged-out", default=None)

    for name, sp in sub.choices.items():
        sp.add_argument("--config", default=None, help="key=value file of defaults")
    return parser


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _segments(args) -> list[SignalSegment]:
    sigs = load_signals(args.signals, args.fs, args.label_map)
    segs = []
    for s in sigs:
        if s.samples.shape[0] < args.window:
            raise DataFormatError(f"{s.source}: input shorter than one window ({args.window})")
        segs += segment_signal(s.samples, s.sample_rate, args.window, args.hop, s.label)
    return segs


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    counters: dict = {}
    for spec in read_synthesis_specs(args.spec):
        sig = synthesize_bearing_signal(spec)
        i = counters.get(spec.label, 0)
        counters[spec.label] = i + 1
        write_signal_csv(out / f"{spec.label}_{i}.csv", sig.samples, spec.label)
        print(f"{spec.label}_{i}.csv: {sig.n_samples} samples @ {fmt(spec.sample_rate)} Hz")
    return EXIT_OK


def cmd_extract(args) -> int:
    cfg = RunConfig(args.fs, args.window, args.hop, args.k, args.m, args.wavelet, args.pad)
    cfg.validate()
    segs = _segments(args)
    if not segs:
        raise DataFormatError("no segments extracted")
    X = extract_feature_matrix(segs, cfg.k, cfg.m, cfg.wavelet, pad=cfg.pad)
    meta = {
        "k": cfg.k,
        "m": cfg.m,
        "wavelet": wavelet_filters(cfg.wavelet).name,
        "fs": float(cfg.fs),
        "window": cfg.window,
    }
    write_feature_csv(args.out, LabeledDataset(X, [s.source_label for s in segs], meta))
    print(f"{X.shape[0]} segments x {X.shape[1]} features -> {args.out}")
    return EXIT_OK


def cmd_select(args) -> int:
    segs = _segments(args)
    if not segs:
        raise DataFormatError("no segments")
    cands = [c for c in args.candidates.split(",") if c]
    if args.kmax < 1 or args.window % (1 << args.kmax):
        raise InvariantError(f"window {args.window} must be divisible by 2**kmax = {1 << args.kmax}")
    if args.aggregate == "mean":
        best, rows = select_over_segments(segs, cands, args.kmax)
    else:
        if not 0 <= args.segment_index < len(segs):
            raise InvariantError(f"--segment-index out of range (0..{len(segs) - 1})")
        best, rows = select_wavelet_and_level(segs[args.segment_index], cands, args.kmax)
    lines = ["wavelet,level,energy,entropy,ratio"]
    for r in rows:
        lines.append(f"{r.wavelet},{r.level},{fmt(r.energy)},{fmt(r.entropy)},{fmt(r.ratio)}")
    _write("\n".join(lines) + "\n", args.out)
    print(f"best: wavelet={best[0]} level={best[1]}", file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_train(args) -> int:
    data = read_feature_csv(args.features)
    if len(data.classes) < 2:
        raise DataFormatError(f"{args.features}: need at least 2 classes to train")
    train = data
    if args.train_fraction is not None:
        if not 0 < args.train_fraction < 1:
            raise InvariantError("--train-fraction must lie strictly between 0 and 1")
        train, test = split_dataset(data, args.train_fraction, args.seed)
        if args.test_out:
            write_feature_csv(args.test_out, test)
    if args.tune_budget > 0:
        space = forest_space(train.n_features, budget=args.tune_budget)
        result = tune_bayesian(train, space, seed=args.seed)
        params = ForestParams(**result.best_params)
        if args.trial_log:
            Path(args.trial_log).write_text("\n".join(result.log_lines()) + "\n")
        print(f"tuned: {result.best_params} cv_accuracy={result.best_value:.6f}")
    else:
        params = ForestParams(args.n_trees, args.max_depth, args.min_samples_leaf, args.features_per_split)
    model = train_forest(train, params, args.seed)
    save_model(model, args.out)
    print(f"model with {params.n_trees} trees -> {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    data = read_feature_csv(args.features)
    _check_feature_meta(model, data.metadata)
    report = evaluate(model, data)
    _write(report.to_text(), args.out)
    return EXIT_OK


def _check_feature_meta(model, meta) -> None:
    for key in ("k", "m", "wavelet", "window"):
        if key in model.metadata and key in meta and str(model.metadata[key]) != str(meta[key]):
            raise MetadataMismatchError(
                f"feature file {key}={meta[key]} but model was trained with {key}={model.metadata[key]}"
            )


def cmd_predict(args) -> int:
    model = load_model(args.model)
    meta = model.metadata
    for key in ("k", "m", "wavelet", "window"):
        if key not in meta:
            raise DataFormatError(f"{args.model}: model metadata lacks {key!r}")
    fs = args.fs if args.fs is not None else meta.get("fs")
    if fs is None:
        raise UsageError("--fs is required when the model does not record a sampling rate")
    k, m, wavelet, window = int(meta["k"]), int(meta["m"]), str(meta["wavelet"]), int(meta["window"])
    sig = load_signals(args.signal, fs)[0]
    if sig.samples.shape[0] < args.offset + window:
        raise DataFormatError(f"{args.signal}: input shorter than one window ({window})")
    seg = SignalSegment(sig.samples[args.offset : args.offset + window], fs)
    pad = window % (1 << k) != 0
    label, proba = predict(model, extract_features(seg, k, m, wavelet, pad=pad))
    tp = measure_processing_time(model, seg, k, m, wavelet, reps=args.reps, pad=pad)
    print(f"class={label}")
    print("probabilities=" + ",".join(f"{c}:{p:.6f}" for c, p in zip(model.classes, proba)))
    print(
        f"tau_d={system_delay(window, fs, tp.median):.6f}s "
        f"(T_vin={window / fs:.6f}s + T_p={tp.median:.6f}s median of {tp.reps})"
    )
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.spec:
        signals = {}
        fs = None
        for spec in read_synthesis_specs(args.spec):
            sig = synthesize_bearing_signal(spec)
            signals.setdefault(spec.label, [])
            signals[spec.label].append(sig.samples)
            fs = spec.sample_rate if fs is None else fs
            if spec.sample_rate != fs:
                raise DataFormatError("all synthesis specs must share one sample_rate")
        signals = {k: np.concatenate(v) for k, v in signals.items()}
    else:
        if args.fs is None:
            raise UsageError("--fs is required with --signals")
        fs = args.fs
        signals = {}
        for s in load_signals(args.signals, fs, args.label_map):
            signals.setdefault(s.label, []).append(s.samples)
        signals = {k: np.concatenate(v) for k, v in signals.items()}
    grid = [(n, k, m) for n in args.n_o for k in args.k for m in args.m]
    report = delay_sweep(
        grid,
        signals,
        fs,
        wavelet=args.wavelet,
        forest_params=ForestParams(n_trees=args.n_trees),
        segments_per_class=args.segments_per_class,
        warmup=args.warmup,
        reps=args.reps,
        seed=args.seed,
        pad=args.pad,
        environment=args.environment,
    )
    Path(args.out).write_text(report.to_csv())
    if args.averaged_out:
        Path(args.averaged_out).write_text(report.averaged_csv())
    print(f"{len(report.rows)} rows ({len(report.skipped)} cells skipped) -> {args.out}")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "select-wavelet": cmd_select,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "bench": cmd_bench,
}


def _apply_config(parser: _Parser, argv: list[str]) -> None:
    """Use a ``--config`` file's keys as defaults of the chosen subcommand."""
    if "--config" not in argv:
        return
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise UsageError("--config needs a file argument")
    cmd = next((a for a in argv if a in COMMANDS), None)
    if cmd is None:
        return
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices[cmd]
    known = {a.dest for a in sub._actions}
    try:
        cfg = read_config(argv[i + 1])
    except OSError as exc:
        raise DataFormatError(f"cannot read config: {exc}") from None
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise UsageError(f"unknown config key(s) for {cmd}: {', '.join(unknown)}")
    for action in sub._actions:
        if action.dest in cfg:
            action.required = False
            if action.const is True:  # store_true flags
                action.default = cfg[action.dest].lower() in ("1", "true", "yes")
            else:
                action.default = cfg[action.dest]


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required; see --help")
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, FileNotFoundError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InvariantError, MetadataMismatchError, ValueError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
