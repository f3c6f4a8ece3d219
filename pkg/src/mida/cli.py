"""Command line entry point: ``mida synth | fit-transform | experiment``.

Exit status is 0 on success, 1 on a runtime failure (including missing
datasets) and 2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dataio, experiments, synth
from ._backend import NAME as BACKEND
from .dataio import ConfigError, DatasetMissing, ParseError, fmt_float

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _sweep(text: str) -> list:
    parts = text.split(":")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--sweep-h expects a:b[:step] integers, got {text!r}") from None
    if len(nums) == 2:
        nums.append(1)
    if len(nums) != 3 or nums[2] < 1 or nums[0] < 1 or nums[1] < nums[0]:
        raise argparse.ArgumentTypeError(f"--sweep-h expects 1 <= a <= b and step >= 1, got {text!r}")
    return list(range(nums[0], nums[1] + 1, nums[2]))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mida", description="Domain-invariant kernel subspace learning.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("synth", help="write a synthetic scenario as canonical CSV")
    s.add_argument("scenario", choices=sorted(synth.KINDS))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n", type=int, default=100, help="samples per class per domain")
    s.add_argument("--conditional", action="store_true", help="fig1 only: shift across the class boundary")
    s.add_argument("--out", default="-", help="output path, '-' for stdout")

    for name, helptext in (("fit-transform", "fit a subspace and write the embedded samples"),
                           ("experiment", "run an evaluation protocol")):
        e = sub.add_parser(name, help=helptext)
        e.add_argument("--config", required=True)
        e.add_argument("--seed", type=int)
        e.add_argument("--out", default="mida-out", help="output directory")
        e.add_argument("--method", choices=["mida", "smida", "kpca", "none"])
        if name == "experiment":
            e.add_argument("--sweep-h", type=_sweep, metavar="A:B[:STEP]")
    return p


def _load_cfg(args) -> dataio.ExperimentConfig:
    cfg = dataio.load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.method is not None:
        cfg = replace(cfg, model=replace(cfg.model, method=args.method))
    if getattr(args, "sweep_h", None):
        cfg = replace(cfg, protocol=replace(cfg.protocol, sweep_h=args.sweep_h))
    return dataio.validate_config(cfg)


def write_report(report: dict, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "metrics.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["task", "metric", "value"])
        for row in report["tasks"]:
            w.writerow([row["task"], row["metric"], fmt_float(row["value"])])


def read_metrics(path) -> list:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{"task": r["task"], "metric": r["metric"], "value": float(r["value"])} for r in rows]


def cmd_synth(args) -> int:
    table = synth.generate_table(synth.SynthScenario(args.scenario, args.n, args.seed, args.conditional))
    if args.out == "-":
        dataio.write_csv(table, sys.stdout)
    else:
        dataio.save_csv(table, args.out)
    return EXIT_OK


def cmd_fit_transform(args) -> int:
    cfg = _load_cfg(args)
    if cfg.data.source not in ("synth", "csv"):
        raise ConfigError("data.source: fit-transform works on 'synth' or 'csv' tables")
    table = experiments.load_table(cfg)
    if cfg.model.method == "smida" and not np.any(table.labeled_mask() & table.mask("source-labeled")):
        raise ConfigError("model.gamma: gamma > 0 but the table has no labeled source-labeled rows")
    from .domains import encode
    from .subspace import LabelMatrix

    D = encode(experiments.encoding_of(cfg), table.records())
    Y = None
    if cfg.model.method == "smida":
        lab = table.labeled_mask() & table.mask("source-labeled")
        Y = (LabelMatrix.regression(table.numeric_labels(), lab, cfg.protocol.normalize_targets)
             if cfg.predictor.kind == "ridge" else LabelMatrix.classification(table.label, lab))
    m = cfg.model
    model = experiments.fit_subspace(m.method, table.X, D, experiments.kernel_of(cfg), m.h, m.mu, m.gamma, m.augment, Y)
    Z = experiments.embed(model, table.X, D)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.save_csv(table.with_features(Z, [f"z{j + 1}" for j in range(Z.shape[1])]), out / "embedded.csv")
    report = {
        "config": cfg.as_dict(),
        "tasks": [],
        "models": [] if model is None else [model.summary()],
        "artifacts": {"embedded": str(out / "embedded.csv"), "report": str(out / "report.json")},
        "backend": BACKEND,
    }
    write_report(report, out)
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _load_cfg(args)
    report = experiments.run_experiment(cfg)
    out = Path(args.out)
    report["backend"] = BACKEND
    report["artifacts"] = {"report": str(out / "report.json"), "metrics": str(out / "metrics.csv")}
    write_report(report, out)
    for row in report["tasks"]:
        print(f"{row['task']}\t{row['metric']}\t{row['value']:.4f}")
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "fit-transform": cmd_fit_transform, "experiment": cmd_experiment}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"mida: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"mida: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        if isinstance(exc, DatasetMissing):
            print(f"mida: {exc}", file=sys.stderr)
        else:
            print(f"mida: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ParseError, ValueError, np.linalg.LinAlgError, OSError) as exc:
        print(f"mida: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
