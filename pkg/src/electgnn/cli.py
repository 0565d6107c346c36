"""Command-line interface: ``electgnn {gen,train,eval,audit,rerun}``.

Exit codes: 0 success, 1 usage error, 2 runtime error. Every command writes a
JSON manifest (argv, resolved config, seed, version, timestamps, outputs)
before doing any work; ``electgnn rerun MANIFEST`` replays it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import evaluate as ev
from .core import WelfareKind
from .data import SOURCES, DatasetError, DatasetSpec, compute_label, label_dataset, parse_label, read_jsonl, write_jsonl
from .models import CheckpointError, Gesn, Gevn, GevnConfig, Normalization, load_checkpoint, save_checkpoint
from .train import AdversarialConfig, OptimConfig, TrainingDiverged, train_adversarial, train_mimic, train_welfare
from .train.adversarial import UTILITY_RANGE

OUTDIR_ENV = "ELECTGNN_OUTDIR"
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("electgnn")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------- manifest


class Manifest:
    def __init__(self, path: Path, command: str, argv: list[str], args: argparse.Namespace):
        self.path = Path(path)
        config = {k: v for k, v in vars(args).items() if k != "func"}
        self.data = {
            "command": command,
            "argv": list(argv),
            "config": config,
            "seed": config.get("seed"),
            "version": __version__,
            "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "finished": None,
            "status": "running",
            "outputs": [],
        }
        self.write()

    def write(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self.data, indent=2, default=str) + "\n")

    def finish(self, outputs, status: str = "ok") -> None:
        self.data["outputs"] = [str(p) for p in outputs]
        self.data["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        self.data["status"] = status
        self.write()


def _out_dir(args) -> Path:
    value = args.out_dir or os.environ.get(OUTDIR_ENV)
    if not value:
        raise UsageError(f"--out-dir is required (or set {OUTDIR_ENV})")
    return Path(value)


# --------------------------------------------------------------------- gen


def _label_arg(text: str) -> str:
    try:
        parse_label(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


def cmd_gen(args, argv) -> int:
    if args.source == "file" and not args.path:
        raise UsageError("--source file needs --path")
    if args.source != "file" and args.path:
        raise UsageError("--path only applies to --source file")
    try:
        spec = DatasetSpec(
            args.source, (args.n_min, args.n_max), (args.m_min, args.m_max), args.count, args.seed,
            None if args.label == "none" else args.label, args.path,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    manifest = Manifest(out.with_name(out.name + ".manifest.json"), "gen", argv, args)
    write_jsonl(label_dataset(spec), out)
    manifest.finish([out])
    print(out)
    return EXIT_OK


# ------------------------------------------------------------------- train


def _optim(args) -> OptimConfig:
    return OptimConfig(
        lr=args.lr, batch_size=args.batch_size, epochs=args.epochs, patience=args.patience, seed=args.seed,
        warmup_epochs=args.warmup_epochs, restart_period=args.restart_period,
    )


def cmd_train(args, argv) -> int:
    mode = args.mode
    if mode == "mimic" and not args.rule:
        raise UsageError("--mode mimic needs --rule")
    if mode == "adversarial" and args.scenario in ("standard-freeze", "robust-freeze") and not args.pretrained:
        raise UsageError(f"--scenario {args.scenario} needs --pretrained")
    if mode != "adversarial" and args.pretrained:
        raise UsageError("--pretrained only applies to --mode adversarial")
    if args.mono_weight < 0:
        raise UsageError("--mono-weight must be non-negative")
    out_dir = _out_dir(args)
    if args.out_dir is None:
        # pin the directory taken from the environment so a rerun lands in the same place
        args.out_dir = str(out_dir)
        argv = argv + ["--out-dir", str(out_dir)]
    manifest = Manifest(out_dir / "manifest.json", "train", argv, args)
    optim = _optim(args)
    train_set, val_set = read_jsonl(args.train), read_jsonl(args.val)
    model_ckpt, metrics = out_dir / "model.ckpt", out_dir / "metrics.csv"
    outputs = [model_ckpt, metrics]
    if args.input == "utility":
        args.input = "cardinal"
    input_kind = "cardinal" if mode == "adversarial" else ("ranking" if mode == "mimic" else args.input)
    config = GevnConfig(args.node_width, args.edge_width, args.layers, input_kind=input_kind, seed=args.seed)

    if mode == "mimic":
        result = train_mimic(train_set, val_set, args.rule, config, optim, checkpoint=model_ckpt)
        history = result.history
    elif mode == "welfare":
        result = train_welfare(
            train_set, val_set, args.welfare_kind, args.loss, args.input, args.mono_weight, config, optim,
            checkpoint=model_ckpt,
        )
        history = result.history
    else:
        pretrained = None
        if args.pretrained:
            pretrained, _ = load_checkpoint(args.pretrained)
            if not isinstance(pretrained, Gevn):
                raise CheckpointError(f"{args.pretrained}: expected a voting network, found {pretrained.kind}")
        adv = AdversarialConfig(
            args.scenario, args.info, args.strategic_frac, args.welfare_kind,
            normalization=Normalization.parse(args.normalization) if args.normalization else UTILITY_RANGE,
            gesn_seed=args.seed, val_seed=args.seed,
        )
        if pretrained is None:
            pretrained = Gevn(config)
        result = train_adversarial(train_set, val_set, adv, pretrained, optim)
        history = result.history
        save_checkpoint(model_ckpt, result.gevn, {"mode": "adversarial", **adv.to_dict()})
        gesn_ckpt = out_dir / "gesn.ckpt"
        save_checkpoint(gesn_ckpt, result.gesn, {"mode": "adversarial", **adv.to_dict()})
        outputs.append(gesn_ckpt)
    history.write_csv(metrics)
    manifest.finish(outputs)
    print(metrics)
    return EXIT_OK


# -------------------------------------------------------------- eval/audit


class RuleMechanism:
    """One-hot outcome of a classical rule or welfare argmax, for baselines."""

    def __init__(self, label: str):
        self.label = label

    def predict(self, utilities):
        out = []
        for u in utilities:
            p = np.zeros(u.shape[1])
            p[compute_label(u, self.label)] = 1.0
            out.append(p)
        return out


def _load_model(path):
    model, _ = load_checkpoint(path)
    if isinstance(model, Gesn):
        raise CheckpointError(f"{path}: strategy network given where a voting network is expected")
    return model


def _check_compatible(model, dataset, path) -> None:
    ms = {e.m for e in dataset}
    expected = getattr(model.config, "candidates", None)
    if expected is not None and ms != {expected}:
        raise DatasetError(f"{path}: model is built for {expected} candidates, dataset has {sorted(ms)}")


def _emit(report: dict, args) -> None:
    if args.format == "json":
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", "value"])
        for key, value in _flatten(report):
            writer.writerow([key, value])
        text = buf.getvalue()
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    sys.stdout.write(text)


def _flatten(d: dict, prefix: str = ""):
    for key in sorted(d):
        value = d[key]
        if isinstance(value, dict):
            yield from _flatten(value, f"{prefix}{key}.")
        elif value is not None:
            yield f"{prefix}{key}", value


def cmd_eval(args, argv) -> int:
    if bool(args.checkpoint) == bool(args.baseline):
        raise UsageError("give exactly one of --checkpoint or --baseline")
    if args.gesn and not args.checkpoint:
        raise UsageError("--gesn needs a voting-network --checkpoint")
    dataset = read_jsonl(args.data)
    model = _load_model(args.checkpoint) if args.checkpoint else RuleMechanism(args.baseline)
    if args.checkpoint:
        _check_compatible(model, dataset, args.checkpoint)
    report = ev.EvalReport()
    if all(e.label is not None for e in dataset):
        report.accuracy = ev.accuracy(model, dataset)
    preds = ev.predict_utilities(model, [e.utilities for e in dataset])
    positive = all((e.utilities > 0).all() for e in dataset)
    for kind in WelfareKind:
        if kind is WelfareKind.NASH and not positive:
            continue
        report.welfare[kind.value] = ev.expected_welfare(model, dataset, kind, preds=preds)
    if args.gesn:
        gesn, _ = load_checkpoint(args.gesn)
        if not isinstance(gesn, Gesn):
            raise CheckpointError(f"{args.gesn}: expected a strategy network, found {gesn.kind}")
        report.manipulation_gain = ev.manipulation_gain(model, gesn, dataset, args.strategic_frac, args.seed)
        welfare, _ = ev.strategic_welfare(model, gesn, dataset, args.welfare_kind, args.strategic_frac, args.seed)
        report.welfare[f"strategic_{WelfareKind(args.welfare_kind).value}"] = welfare
    _emit(report.to_dict(), args)
    return EXIT_OK


def cmd_audit(args, argv) -> int:
    if args.trials < 1 or args.elections < 1:
        raise UsageError("--trials and --elections must be at least 1")
    dataset = read_jsonl(args.data)
    model = _load_model(args.checkpoint)
    _check_compatible(model, dataset, args.checkpoint)
    profiles = [model.ballots(e.utilities) for e in dataset[: args.elections]]
    report = ev.audit_axioms(model, profiles, trials=args.trials, seed=args.seed)
    _emit(report.to_dict(), args)
    return EXIT_OK


def cmd_rerun(args, argv) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text())
        replay = manifest["argv"]
    except (OSError, ValueError, KeyError) as exc:
        raise DatasetError(f"{args.manifest}: unreadable manifest ({exc})") from None
    return main(replay)


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="electgnn", description="Learned voting rules on election graphs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("gen", help="generate a labelled election dataset (JSONL)")
    g.add_argument("--source", choices=SOURCES, default="dirichlet")
    g.add_argument("--path", help="utility CSV for --source file")
    g.add_argument("--n-min", type=int, default=3)
    g.add_argument("--n-max", type=int, default=10)
    g.add_argument("--m-min", type=int, default=2)
    g.add_argument("--m-max", type=int, default=5)
    g.add_argument("--count", type=int, default=1000)
    g.add_argument("--label", type=_label_arg, default="none", help="rule:NAME, welfare:KIND or none")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train a voting network")
    t.add_argument("--mode", choices=("mimic", "welfare", "adversarial"), required=True)
    t.add_argument("--train", required=True, help="training JSONL")
    t.add_argument("--val", required=True, help="validation JSONL")
    t.add_argument("--out-dir", help=f"output directory (default ${OUTDIR_ENV})")
    t.add_argument("--rule", choices=("plurality", "borda", "copeland", "maximin", "stv"))
    t.add_argument("--welfare-kind", choices=[k.value for k in WelfareKind], default="utilitarian")
    t.add_argument("--loss", choices=("welfare", "rule"), default="welfare")
    t.add_argument("--input", choices=("ranking", "utility", "cardinal"), default="ranking",
                   help="ballots the network sees; utility and cardinal are synonyms")
    t.add_argument("--mono-weight", type=float, default=0.0)
    t.add_argument("--scenario", choices=("standard-freeze", "robust-train", "robust-freeze"), default="standard-freeze")
    t.add_argument("--info", choices=("private", "public", "results"), default="private")
    t.add_argument("--strategic-frac", type=float, default=0.2)
    t.add_argument("--normalization", help="budget:A or range:A:B for strategic ballots")
    t.add_argument("--pretrained", help="voting-network checkpoint for adversarial runs")
    t.add_argument("--epochs", type=int, default=100)
    t.add_argument("--patience", type=int, default=30)
    t.add_argument("--lr", type=float, default=3e-4)
    t.add_argument("--batch-size", type=int, default=128)
    t.add_argument("--warmup-epochs", type=int, default=20)
    t.add_argument("--restart-period", type=int, default=20)
    t.add_argument("--node-width", type=int, default=58)
    t.add_argument("--edge-width", type=int, default=19)
    t.add_argument("--layers", type=int, default=4)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="accuracy, welfare and manipulation metrics")
    e.add_argument("--checkpoint")
    e.add_argument("--baseline", type=_label_arg, help="rule:NAME or welfare:KIND one-hot baseline")
    e.add_argument("--data", required=True)
    e.add_argument("--gesn", help="strategy-network checkpoint for manipulation metrics")
    e.add_argument("--strategic-frac", type=float, default=0.2)
    e.add_argument("--welfare-kind", choices=[k.value for k in WelfareKind], default="utilitarian")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--format", choices=("json", "csv"), default="json")
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("audit", help="anonymity, neutrality and monotonicity audit")
    a.add_argument("--checkpoint", required=True)
    a.add_argument("--data", required=True)
    a.add_argument("--trials", type=int, default=ev.AUDIT_TRIALS)
    a.add_argument("--elections", type=int, default=100)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--format", choices=("json", "csv"), default="json")
    a.add_argument("--out")
    a.set_defaults(func=cmd_audit)

    r = sub.add_parser("rerun", help="replay a command from its manifest")
    r.add_argument("manifest")
    r.set_defaults(func=cmd_rerun)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    try:
        return args.func(args, argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, CheckpointError, TrainingDiverged, ValueError, KeyError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
