"""Command-line interface: ``gesthmm <verb> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import formats
from .classifier import ClassRegistry, classify, register_class
from .errors import GestureError, InvalidInputError, InvalidSpecError
from .experiment import CSV_COLUMNS, POLICIES, ExperimentSpec, run_experiment
from .formats import Recording
from .geometry import Quat
from .quantizer import default_grid, quantize_stream
from .streaming import DEFAULT_WINDOW_S, KeyGestureDetector, run_stream
from .synth import SyntheticSpec, generate, manifest
from .vb import VbConfig, learn_shared_prior

log = logging.getLogger("gesthmm")

EXIT_USAGE = 1

RECORDINGS_FILE = "recordings.jsonl"
MANIFEST_FILE = "manifest.json"

EVALUATE_HELP = f"""\
CSV written to --out (or stdout) has one row per repetition and arm:
  {",".join(CSV_COLUMNS)}
arm is hmm (uninformative prior), hmm-prior (learned prior) or dtw; rate is
n_correct / n_test. --summary writes one row per arm with columns
  arm,mean,std,sem,n
where std is the sample standard deviation over repetitions and sem = std/sqrt(n).
"""

CLASSIFY_HELP = """\
CSV on stdout: index,user,true_label,predicted,<one log-evidence column per class>
"""

STREAM_HELP = """\
One line per key-gesture trigger: time_s,label,n_samples,<label>=<log-evidence>...
"""

CONFIG_HELP = """\
--config takes a JSON object with optional sections "vb", "synth", "experiment"
and "detector" whose keys match the corresponding option names (underscored).
Command-line flags override the file; --seed overrides every seed.
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out(path, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        formats.atomic_write_text(path, text)


def _section(args, name: str) -> dict:
    return dict(args.config.get(name, {}))


def _build(cls, values: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise UsageError(f"unknown {where} keys: {unknown}")
    try:
        return cls(**values)
    except (TypeError, InvalidInputError) as exc:
        raise UsageError(f"bad {where} settings: {exc}") from None


def _vb(args) -> VbConfig:
    vals = _section(args, "vb")
    for name in ("max_iters", "tol", "alpha0", "jitter"):
        v = getattr(args, name, None)
        if v is not None:
            vals[name] = v
    vals["seed"] = args.seed
    return _build(VbConfig, vals, "vb")


def _grid(args):
    return formats.load_grid(args.grid) if args.grid else default_grid()


def _symbol_recordings(path) -> list:
    recs = formats.load_recordings(path)
    bad = [i for i, r in enumerate(recs) if r.payload != "symbols"]
    if bad:
        raise UsageError(f"{path}: recordings {bad} carry quaternions; run 'quantize' first")
    return recs


def _by_class(recs) -> dict:
    out = {}
    for r in recs:
        if r.class_label is None:
            continue
        out.setdefault(r.class_label, []).append(r.symbols)
    return out


def _parse_vector(text: str, n: int, name: str):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"{name} expects {n} comma-separated numbers") from None
    if len(vals) != n:
        raise UsageError(f"{name} expects {n} comma-separated numbers")
    return vals


# -- verbs -------------------------------------------------------------------


def cmd_generate(args):
    vals = _section(args, "synth")
    for name in ("n_classes", "n_states", "n_symbols", "min_len", "max_len", "per_class"):
        v = getattr(args, name)
        if v is not None:
            vals[name] = v
    vals["seed"] = args.seed
    spec = _build(SyntheticSpec, vals, "synth")
    ds = generate(spec)
    grid_id = default_grid().grid_id if spec.n_symbols == default_grid().size else f"circle{spec.n_symbols}"
    recs = [
        Recording("synthetic", label, 6.7, grid_id, symbols=y) for label, y in ds.sequences
    ]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    formats.save_recordings(out / RECORDINGS_FILE, recs)
    formats.save_json(out / MANIFEST_FILE, manifest(ds))
    log.info("wrote %d recordings to %s", len(recs), out)


def cmd_quantize(args):
    grid = _grid(args)
    q_ref = Quat.from_any(_parse_vector(args.ref, 4, "--ref")) if args.ref else Quat.identity()
    out = []
    for r in formats.load_recordings(args.input):
        if r.payload == "symbols":
            if r.symbols.alphabet_size != grid.size:
                raise UsageError(f"recording of user {r.user!r} uses another alphabet")
            out.append(r)
            continue
        y = quantize_stream(r.quaternions, q_ref, grid)
        out.append(Recording(r.user, r.class_label, r.sample_rate_hz, grid.grid_id, symbols=y))
    formats.save_recordings(args.out, out)


def cmd_train_prior(args):
    by_class = _by_class(_symbol_recordings(args.data))
    if not by_class:
        raise UsageError(f"{args.data}: no labelled recordings")
    rng = np.random.default_rng(args.seed)
    if args.all:
        data = [y for ys in by_class.values() for y in ys]
    else:
        data = [ys[int(rng.integers(len(ys)))] for ys in by_class.values()]
    prior = learn_shared_prior(data, args.states, _vb(args))
    formats.save_model(args.out, prior)


def cmd_train_class(args):
    model = formats.load_model(args.prior)
    if isinstance(model, ClassRegistry):
        reg = model
        if args.grid:
            raise UsageError("--grid cannot replace the grid of an existing registry")
    else:
        reg = ClassRegistry(model, _grid(args))
    by_class = _by_class(_symbol_recordings(args.data))
    labels = args.label or list(by_class)
    cfg = _vb(args)
    for label in labels:
        if label not in by_class:
            raise UsageError(f"{args.data}: no recordings for class {label!r}")
        reg = register_class(reg, label, by_class[label], cfg)
    formats.save_model(args.out, reg)


def cmd_classify(args):
    reg = formats.load_model(args.model)
    if not isinstance(reg, ClassRegistry):
        raise UsageError(f"{args.model}: expected a registry, found a single model")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "user", "true_label", "predicted", *reg.labels])
    for i, r in enumerate(_symbol_recordings(args.data)):
        label, s = classify(reg, r.symbols)
        w.writerow([i, r.user, r.class_label or "", label, *(repr(s[k]) for k in reg.labels)])
    _out(args.out, buf.getvalue())


def cmd_evaluate(args):
    vals = _section(args, "experiment")
    for name in ("train_per_class", "test_per_class", "repetitions", "n_states"):
        v = getattr(args, name)
        if v is not None:
            vals[name] = v
    if args.classes:
        vals["classes"] = tuple(args.classes)
    elif "classes" in vals and vals["classes"] is not None:
        vals["classes"] = tuple(vals["classes"])
    if args.policy:
        vals["prior_policies"] = tuple(dict.fromkeys(args.policy))
    elif "prior_policies" in vals:
        vals["prior_policies"] = tuple(vals["prior_policies"])
    if args.no_dtw:
        vals["run_dtw"] = False
    if args.exclude_prior_recordings:
        vals["exclude_prior_recordings"] = True
    vals["seed"] = args.seed
    vals["vb"] = _vb(args)
    spec = _build(ExperimentSpec, vals, "experiment")
    by_class = _by_class(_symbol_recordings(args.data))
    res = run_experiment(by_class, spec, _grid(args))
    _out(args.out, res.to_csv())
    if args.summary:
        _out(args.summary, res.summary_csv())


def _detector(args, rate) -> KeyGestureDetector:
    vals = _section(args, "detector")
    for name in ("min_duration_s", "sample_rate_hz"):
        v = getattr(args, name)
        if v is not None:
            vals[name] = v
    if "sample_rate_hz" not in vals and rate is not None:
        vals["sample_rate_hz"] = rate
    if args.cos_threshold is not None:
        vals["cos_threshold"] = args.cos_threshold
    if args.palm_axis:
        vals["e_palm"] = _parse_vector(args.palm_axis, 3, "--palm-axis")
    if args.up_axis:
        vals["up"] = _parse_vector(args.up_axis, 3, "--up-axis")
    for name in ("e_palm", "up"):
        if name in vals:
            vals[name] = tuple(vals[name])
    return _build(KeyGestureDetector, vals, "detector")


def cmd_stream(args):
    reg = formats.load_model(args.model)
    if not isinstance(reg, ClassRegistry):
        raise UsageError(f"{args.model}: expected a registry, found a single model")
    samples, rate = formats.load_stream(args.stream)
    det = _detector(args, rate)
    q_ref = Quat.from_any(_parse_vector(args.ref, 4, "--ref")) if args.ref else None
    lines = []
    for r in run_stream(samples, det, reg, args.window, q_ref):
        scores = " ".join(f"{k}={r.scores[k]!r}" for k in reg.labels)
        lines.append(f"{r.time_s!r},{r.label},{r.n_samples},{scores}\n")
    _out(args.out, "".join(lines))


# -- parser ------------------------------------------------------------------


def _add_vb_flags(p):
    g = p.add_argument_group("variational learning")
    g.add_argument("--max-iters", type=int, help="iteration cap (default 100)")
    g.add_argument("--tol", type=float, help="stop when max |delta h| falls below this")
    g.add_argument("--alpha0", type=float, help="uninformative Dirichlet concentration")
    g.add_argument("--jitter", type=float, help="relative perturbation applied before the first E-step")


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # accepted before or after the verb; the verb-level copy must not reset values given earlier
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = _Parser(add_help=False)
    g.add_argument("--seed", type=int, default=d(0), help="master seed (default 0)")
    g.add_argument("--config", type=Path, default=d(None), help="JSON configuration file")
    g.add_argument("--grid", type=Path, default=d(None), help="quantizer grid JSON (default: six axis directions)")
    g.add_argument("-v", "--verbose", action="count", default=d(0))
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)

    p = _Parser(
        prog="gesthmm",
        description="Orientation gesture recognition with Bayesian HMMs.",
        epilog=CONFIG_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        parents=[_global_flags(suppress=False)],
    )
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def verb(name, fn, help_, epilog=None):
        s = sub.add_parser(
            name, help=help_, description=help_, epilog=epilog, parents=[common],
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        s.set_defaults(fn=fn)
        return s

    s = verb("generate", cmd_generate, "write a synthetic dataset and its generating parameters")
    s.add_argument("--out", required=True, help=f"output directory ({RECORDINGS_FILE}, {MANIFEST_FILE})")
    s.add_argument("--classes", dest="n_classes", type=int, help="number of classes (default 8)")
    s.add_argument("--states", dest="n_states", type=int, help="hidden states per class HMM (default 6)")
    s.add_argument("--symbols", dest="n_symbols", type=int, help="alphabet size (default 6)")
    s.add_argument("--min-len", type=int, help="shortest sequence (default 15)")
    s.add_argument("--max-len", type=int, help="longest sequence (default 30)")
    s.add_argument("--per-class", type=int, help="sequences per class (default 20)")

    s = verb("quantize", cmd_quantize, "turn quaternion recordings into symbol recordings")
    s.add_argument("--input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--ref", help="reference orientation w,x,y,z (default identity)")

    s = verb("train-prior", cmd_train_prior, "learn the shared prior from one recording per class")
    s.add_argument("--data", required=True, help="symbol recordings")
    s.add_argument("--out", required=True)
    s.add_argument("--states", type=int, default=6, help="hidden states (default 6)")
    s.add_argument("--all", action="store_true", help="use every recording instead of one per class")
    _add_vb_flags(s)

    s = verb("train-class", cmd_train_class, "add classes to a registry")
    s.add_argument("--prior", required=True, help="shared prior or existing registry")
    s.add_argument("--data", required=True, help="symbol recordings")
    s.add_argument("--label", action="append", help="class to train (repeatable; default all)")
    s.add_argument("--out", required=True)
    _add_vb_flags(s)

    s = verb("classify", cmd_classify, "label symbol recordings with a registry", CLASSIFY_HELP)
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", help="CSV path (default stdout)")

    s = verb("evaluate", cmd_evaluate, "repeated random-split recognition experiment", EVALUATE_HELP)
    s.add_argument("--data", required=True, help="labelled symbol recordings")
    s.add_argument("--classes", nargs="+", help="restrict to these labels")
    s.add_argument("--train-per-class", type=int, help="default 5")
    s.add_argument("--test-per-class", type=int, help="default 15")
    s.add_argument("--repetitions", type=int, help="default 6")
    s.add_argument("--states", dest="n_states", type=int, help="hidden states (default 6)")
    s.add_argument("--policy", action="append", choices=POLICIES, help="prior policy (repeatable; default both)")
    s.add_argument("--no-dtw", action="store_true", help="skip the DTW arm")
    s.add_argument(
        "--exclude-prior-recordings", action="store_true",
        help="do not reuse the prior-building recording for class training",
    )
    s.add_argument("--out", help="per-repetition CSV (default stdout)")
    s.add_argument("--summary", help="per-arm summary CSV")
    _add_vb_flags(s)

    s = verb("stream", cmd_stream, "key-gesture gated recognition over an orientation stream", STREAM_HELP)
    s.add_argument("--stream", required=True)
    s.add_argument("--model", required=True, help="registry")
    s.add_argument("--window", type=float, default=DEFAULT_WINDOW_S, help="seconds classified after a trigger")
    s.add_argument("--ref", help="reference orientation w,x,y,z (default identity)")
    s.add_argument("--min-duration", dest="min_duration_s", type=float, help="palm-up seconds needed (default 1.0)")
    s.add_argument("--sample-rate", dest="sample_rate_hz", type=float, help="Hz (default from file, else 6.7)")
    s.add_argument("--cos-threshold", type=float, help="palm-up cosine threshold (default cos 30 deg)")
    s.add_argument("--palm-axis", help="sensor-frame palm normal x,y,z (default 0,1,0)")
    s.add_argument("--up-axis", help="world up x,y,z (default 0,0,1)")
    s.add_argument("--out", help="event log path (default stdout)")
    return p


def _load_config(path):
    if path is None:
        return {}
    cfg = formats.load_json(path)
    if not isinstance(cfg, dict):
        raise UsageError(f"{path}: configuration must be a JSON object")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        args.config = _load_config(args.config)
        args.fn(args)
    except UsageError as exc:
        print(f"gesthmm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidSpecError as exc:
        print(f"gesthmm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GestureError as exc:
        print(f"gesthmm: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"gesthmm: error: {exc}", file=sys.stderr)
        return 2
    except FloatingPointError as exc:
        print(f"gesthmm: error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
