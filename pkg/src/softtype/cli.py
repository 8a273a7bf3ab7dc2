"""Command-line interface: ``softtype {infer,constrain,train,eval,gen-corpus}``.

Exit codes: 0 on success, 1 for usage or configuration errors, 2 when the
pipeline itself fails (bad input files, parse errors, training divergence).
Reports are JSON with sorted keys and no timestamps, so identical invocations
produce identical bytes.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import SoftTypeError
from .optim import LINEAR_PENALTY, LOG_PENALTY, OptimiserConfig
from .pipeline import PIPELINE_OPTIMISER

EXIT_OK, EXIT_USAGE, EXIT_PIPELINE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _optimiser_args(p):
    p.add_argument("--seed", type=int, default=0, help="optimiser initialisation seed")
    p.add_argument("--lambda", dest="lam", type=float, default=PIPELINE_OPTIMISER.initial_lambda,
                   help="constraint multiplier")
    p.add_argument("--lambda-mode", choices=("fixed", "dual"), default="fixed")
    p.add_argument("--penalty", choices=(LINEAR_PENALTY, LOG_PENALTY), default=PIPELINE_OPTIMISER.penalty)
    p.add_argument("--max-iterations", type=int, default=PIPELINE_OPTIMISER.max_iterations)
    p.add_argument("--learning-rate", type=float, default=PIPELINE_OPTIMISER.learning_rate)


def _optimiser(args) -> OptimiserConfig:
    try:
        return PIPELINE_OPTIMISER.with_(
            seed=args.seed,
            initial_lambda=args.lam,
            lambda_mode=args.lambda_mode,
            penalty=args.penalty,
            max_iterations=args.max_iterations,
            learning_rate=args.learning_rate,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="softtype", description="Type inference from logical and naming constraints.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("infer", help="annotate one toy program")
    p.add_argument("--mode", choices=("logical", "natural", "combined"), required=True)
    p.add_argument("--program", type=Path, required=True)
    p.add_argument("--constraints", type=Path, help="constraint DSL file overriding the generated constraints")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--matrix", type=Path, help="natural-constraint matrix (JSON)")
    src.add_argument("--model", type=Path, help="naming-model checkpoint")
    p.add_argument("--out", type=Path, help="write the annotated program here")
    p.add_argument("--report", type=Path, help="write a JSON report here")
    _optimiser_args(p)

    p = sub.add_parser("constrain", help="write the logical constraints of a toy program")
    p.add_argument("--program", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="constraint DSL output; a .json sidecar is written next to it")

    p = sub.add_parser("train", help="train the naming model on a name<TAB>type corpus")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--hidden-dim", type=int, default=32)
    p.add_argument("--report", type=Path, help="write training curves as JSON")

    p = sub.add_parser("eval", help="evaluate a directory of annotated toy programs")
    p.add_argument("--dir", type=Path, required=True)
    p.add_argument("--mode", choices=("logical", "natural", "combined"), required=True)
    p.add_argument("--model", type=Path)
    p.add_argument("--report", type=Path)
    p.add_argument("--jobs", type=int, default=1)
    _optimiser_args(p)

    p = sub.add_parser("gen-corpus", help="write the synthetic program and naming corpora")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--programs", type=int, default=50)
    p.add_argument("--names", type=int, default=1000)
    return parser


def _cmd_infer(args) -> int:
    from .pipeline import PipelineConfig, run_pipeline

    try:
        cfg = PipelineConfig(
            mode=args.mode,
            program=args.program,
            constraints=args.constraints,
            matrix=args.matrix,
            model=args.model,
            optimiser=_optimiser(args),
            out=args.out,
            report=args.report,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    annotations, report = run_pipeline(cfg)
    for name in annotations:
        print(f"{name}: {annotations[name]}")
    status = "converged" if report.converged else "not converged"
    print(f"# {status} after {report.iterations} iterations, constraint value {report.constraint_value:.6f}")
    return EXIT_OK


def _cmd_constrain(args) -> int:
    from .frontend import generate_constraints, parse_program, strip_annotations

    source = args.program.read_text(encoding="utf-8")
    bundle = generate_constraints(strip_annotations(parse_program(source, path=str(args.program))))
    bundle.save(args.out)
    print(f"{len(bundle.emissions)} constraints over {len(bundle.ids)} slots")
    return EXIT_OK


def _cmd_train(args) -> int:
    from .logic import TypeUniverse
    from .natural import TrainConfig, fit, read_corpus
    from .pipeline import dump_json
    from .synth import DEFAULT_TYPES

    if args.epochs < 1:
        raise UsageError("--epochs must be positive")
    corpus = read_corpus(args.corpus, TypeUniverse(DEFAULT_TYPES))
    run = fit(corpus, TrainConfig(epochs=args.epochs, seed=args.seed,
                                  embed_dim=args.embed_dim, hidden_dim=args.hidden_dim))
    run.model.save(args.out)
    if args.report:
        args.report.write_text(dump_json({
            "schema": "softtype-train",
            "version": 1,
            "train_nll": run.train_nll,
            "val_nll": run.val_nll,
            "best_epoch": run.best_epoch,
            "steps": run.steps,
        }), encoding="utf-8")
    print(f"best validation nll {run.val_nll[run.best_epoch]:.4f} at epoch {run.best_epoch}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    from .natural import LstmModel
    from .pipeline import batch_run, dump_json

    if args.mode != "logical" and args.model is None:
        raise UsageError(f"{args.mode} mode needs --model")
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    model = LstmModel.load(args.model) if args.model is not None else None
    report = batch_run(args.dir, args.mode, _optimiser(args), model, jobs=args.jobs)
    if args.report:
        args.report.write_text(dump_json(report.to_json(args.mode)), encoding="utf-8")
    print("\n".join(report.summary_lines()))
    return EXIT_OK


def _cmd_gen_corpus(args) -> int:
    from .synth import write_fixtures

    if args.programs < 0 or args.names < 1:
        raise UsageError("--programs must be non-negative and --names positive")
    info = write_fixtures(args.out, seed=args.seed, programs=args.programs, names=args.names)
    print(f"wrote {info['programs']} programs and {info['names']} names to {args.out}")
    return EXIT_OK


COMMANDS = {
    "infer": _cmd_infer,
    "constrain": _cmd_constrain,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "gen-corpus": _cmd_gen_corpus,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"softtype: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SoftTypeError, OSError, ValueError) as exc:
        print(f"softtype: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
