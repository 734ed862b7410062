"""Command line front end.

Exit codes: 0 success, 1 validation error (bad config or data), 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings

from .errors import GrateIdError, NumericalError, ValidationError

log = logging.getLogger("grateid")


def _cmd_ingest_check(args) -> int:
    from .pipeline import RunConfig, load_record, make_split

    cfg = RunConfig.from_file(args.config)
    record = load_record(cfg)
    needed = [cfg.output, cfg.setpoint, *cfg.mandatory, *cfg.candidates]
    missing = [n for n in needed if n not in record]
    print(f"{len(record)} samples at {record.sample_period:g} s, channels: {', '.join(record.names)}")
    if missing:
        raise ValidationError(f"missing channels: {missing}")
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        eset = make_split(record, cfg)
    print(f"{len(eset)} experiments: {len(eset.train)} train in {eset.n_folds} folds, "
          f"{len(eset.test)} test")
    return 0


def _cmd_synth(args) -> int:
    from .synth import SynthSpec, generate_synthetic, write_synthetic

    spec = {}
    if args.spec:
        with open(args.spec) as fh:
            spec = json.load(fh)
    for key in ("model", "duration", "seed", "n_steps", "sample_period"):
        value = getattr(args, key)
        if value is not None:
            spec[key] = value
    if args.target_r2 is not None:
        out = {"comprehensive": "Q_steam"}.get(spec.get("model", "basic"))
        if out is None:
            from .zoo import zoo_model
            out = zoo_model(spec.get("model", "basic")).output
        spec.setdefault("target_r2", {})[out] = args.target_r2
    try:
        result = generate_synthetic(SynthSpec.from_dict(spec))
    except (TypeError, KeyError) as exc:
        raise ValidationError(f"invalid synthetic spec: {exc}") from None
    paths = write_synthetic(result, args.out, args.name)
    print(f"wrote {paths['csv']} ({len(result.record)} rows) and {paths['truth']}")
    return 0


def _cmd_run(args, which) -> int:
    from .pipeline import RunConfig, format_report, run_basic, run_comprehensive

    cfg = RunConfig.from_file(args.config)
    if args.budget is not None:
        cfg.budget = args.budget
    if args.out is not None:
        cfg.output_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    result = (run_basic if which == "basic" else run_comprehensive)(cfg)
    print(format_report(result["report"]))
    print(f"artifacts in {cfg.output_dir}")
    return 0


def _cmd_step(args) -> int:
    from .pipeline import emit_step_responses

    amps = args.amplitude if args.amplitude else 1.0
    if isinstance(amps, list) and len(amps) == 1:
        amps = amps[0]
    paths = emit_step_responses(args.model, args.out, args.input, amps, args.horizon, args.dt)
    for p in paths:
        print(p)
    return 0


def _cmd_report(args) -> int:
    from .pipeline import format_report, recompute_metrics

    with open(os.path.join(args.run_dir, "report.json")) as fh:
        report = json.load(fh)
    print(format_report(report))
    if args.verify:
        bad = []
        for root, dirs, _ in sorted(os.walk(args.run_dir)):
            if "predictions" not in dirs:
                continue
            with open(os.path.join(root, "metrics.json")) as fh:
                metrics = json.load(fh)
            again = recompute_metrics(os.path.join(root, "predictions"))
            for group, key in (("train", "train"), ("test", "test")):
                if key in metrics and group in again:
                    for m in ("mse", "r2"):
                        if abs(metrics[key][m] - again[group][m]) > 1e-9:
                            bad.append(f"{root}:{key}.{m}")
        if bad:
            raise NumericalError(f"metrics disagree with prediction files: {bad}")
        print("metrics match the prediction files")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grateid", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log tuning progress")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest-check", help="validate a data file against a run config")
    s.add_argument("config")
    s.set_defaults(func=_cmd_ingest_check)

    s = sub.add_parser("synth", help="generate a synthetic record from a zoo model")
    s.add_argument("--spec", help="JSON synthetic spec")
    s.add_argument("--model", help="zoo model name or 'comprehensive'")
    s.add_argument("--duration", type=float, help="seconds")
    s.add_argument("--sample-period", dest="sample_period", type=float)
    s.add_argument("--n-steps", dest="n_steps", type=int)
    s.add_argument("--target-r2", dest="target_r2", type=float,
                   help="output noise chosen so the generator scores this R^2")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", default=".")
    s.add_argument("--name", default="synthetic")
    s.set_defaults(func=_cmd_synth)

    for verb, which in (("run-basic", "basic"), ("run-comprehensive", "comprehensive")):
        s = sub.add_parser(verb, help=f"{which} identification run")
        s.add_argument("config")
        s.add_argument("--budget", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--out")
        s.set_defaults(func=lambda a, w=which: _cmd_run(a, w))

    s = sub.add_parser("step-response", help="step responses of a saved model")
    s.add_argument("model")
    s.add_argument("--input", action="append", help="input name (repeatable; default all)")
    s.add_argument("--amplitude", type=float, action="append")
    s.add_argument("--horizon", type=float, default=36000.0)
    s.add_argument("--dt", type=float, default=5.0)
    s.add_argument("--out", default=".")
    s.set_defaults(func=_cmd_step)

    s = sub.add_parser("report", help="print the metrics table of a run directory")
    s.add_argument("run_dir")
    s.add_argument("--verify", action="store_true",
                   help="recompute metrics from the prediction files")
    s.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except GrateIdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
