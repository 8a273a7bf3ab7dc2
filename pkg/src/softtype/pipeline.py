"""End-to-end inference and evaluation.

Steps for one program: parse, strip annotations, generate logical
constraints, predict natural constraints from slot names, solve, discretise,
and write the annotations back into the source.  Three modes select which
evidence is used: ``logical``, ``natural`` or ``combined``.
"""
from __future__ import annotations

import json
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .dsl import parse_constraints
from .errors import PipelineError, SoftTypeError
from .frontend import (
    DEFAULT_UNIVERSE,
    ConstraintBundle,
    annotate_source,
    generate_constraints,
    gold_annotations,
    parse_program,
    strip_annotations,
)
from .frontend.checker import ANY
from .logic import Constraint, TypeUniverse, atoms, conjoin
from .natural import LstmModel, load_matrix, predict_matrix
from .optim import LOG_PENALTY, OptimiserConfig, SolveReport, discretise, solve, solve_logical_only
from .relax import eval_prob

log = logging.getLogger(__name__)

LOGICAL, NATURAL, COMBINED = "logical", "natural", "combined"
MODES = (LOGICAL, NATURAL, COMBINED)
SLOT_KINDS = ("PAR", "FUN", "VAR", "METH", "PROP")  # METH and PROP are reserved
REPORT_VERSION = 1
# Whole-file conjunctions need the log penalty (see optim).  Its gradient is
# of order lambda / p per atom, so a smaller multiplier than the linear form's
# keeps the prior in charge of choosing among satisfying corners.
PIPELINE_OPTIMISER = OptimiserConfig(penalty=LOG_PENALTY, initial_lambda=10.0)


@dataclass(frozen=True)
class PipelineConfig:
    mode: str
    program: Optional[Path] = None
    constraints: Optional[Path] = None
    matrix: Optional[Path] = None
    model: Optional[Path] = None
    optimiser: OptimiserConfig = PIPELINE_OPTIMISER
    out: Optional[Path] = None
    report: Optional[Path] = None
    verbose: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.program is None:
            raise ValueError("a program is required")
        needs_natural = self.mode in (NATURAL, COMBINED)
        if needs_natural and self.matrix is None and self.model is None:
            raise ValueError(f"{self.mode} mode needs --matrix or --model")
        if self.matrix is not None and self.model is not None:
            raise ValueError("give either a matrix or a model, not both")


@dataclass(frozen=True)
class Inference:
    bundle: ConstraintBundle
    annotations: dict[str, str]
    report: SolveReport
    natural: Optional[np.ndarray]
    annotated_source: str


def _natural_report(m: np.ndarray, e: Optional[Constraint]) -> SolveReport:
    f = float(eval_prob(m, e)) if e is not None else 1.0
    return SolveReport(m, 0.0, f, 0, True, 0.0, 0.0)


def infer(
    source: str,
    mode: str,
    optimiser: OptimiserConfig = PIPELINE_OPTIMISER,
    model: Optional[LstmModel] = None,
    matrix: Optional[np.ndarray] = None,
    universe: TypeUniverse = DEFAULT_UNIVERSE,
    constraint: Optional[Constraint] | str = "generate",
    path=None,
) -> Inference:
    """Annotate one program.

    `constraint` overrides the generated logical constraint when given (None
    means no logical constraint at all).  Natural modes take either a fitted
    `model` or a precomputed `matrix` aligned to the program's slots.
    """
    if mode not in MODES:
        raise PipelineError(f"unknown mode {mode!r}")
    program = parse_program(source, path=path)
    bundle = generate_constraints(strip_annotations(program), universe)
    e = bundle.constraint if isinstance(constraint, str) else constraint
    shape = (len(bundle.ids), len(universe))

    m = None
    if mode != LOGICAL:
        if matrix is not None:
            m = np.asarray(matrix, dtype=float)
            if m.shape != shape:
                raise PipelineError(f"natural matrix has shape {m.shape}, expected {shape}")
        elif model is not None:
            m = predict_matrix(model, list(bundle.short_names), universe)
        else:
            raise PipelineError(f"{mode} mode needs a model or a matrix")

    if mode == LOGICAL:
        if e is None:
            report = SolveReport(np.full(shape, 1.0 / shape[1]), 0.0, 1.0, 0, True, 0.0, 0.0)
        else:
            report = solve_logical_only(e, shape, optimiser)
        env = discretise(report.probabilities)
        constrained = {a.var for a in atoms(e)} if e is not None else set()
        annotations = {
            name: (universe.names[env[v]] if v in constrained else ANY)
            for v, name in enumerate(bundle.ids.names)
        }
    else:
        report = _natural_report(m, e) if mode == NATURAL else solve(m, e, optimiser)
        annotations = discretise(report.probabilities).named(bundle.ids, universe)

    annotated = annotate_source(source, annotations, program)
    return Inference(bundle, annotations, report, m, annotated)


def run_pipeline(cfg: PipelineConfig, universe: TypeUniverse = DEFAULT_UNIVERSE) -> tuple[dict[str, str], SolveReport]:
    """Run inference as configured, writing the annotated program and report if asked."""
    source = Path(cfg.program).read_text(encoding="utf-8")
    program = parse_program(source, path=str(cfg.program))
    bundle = generate_constraints(strip_annotations(program), universe)
    constraint = "generate"
    if cfg.constraints is not None:
        parsed = parse_constraints(
            Path(cfg.constraints).read_text(encoding="utf-8"), bundle.ids, universe, path=str(cfg.constraints)
        )
        constraint = conjoin(parsed.formulas) if parsed.formulas else None
    model = LstmModel.load(cfg.model) if cfg.model is not None else None
    matrix = load_matrix(cfg.matrix, bundle.ids, universe) if cfg.matrix is not None else None
    result = infer(source, cfg.mode, cfg.optimiser, model, matrix, universe, constraint, path=str(cfg.program))
    if cfg.out is not None:
        Path(cfg.out).write_text(result.annotated_source, encoding="utf-8")
    if cfg.report is not None:
        doc = inference_report(result, cfg.mode, str(cfg.program))
        Path(cfg.report).write_text(dump_json(doc), encoding="utf-8")
    return result.annotations, result.report


def inference_report(result: Inference, mode: str, program: str) -> dict:
    b = result.bundle
    r = result.report
    slots = []
    for v, name in enumerate(b.ids.names):
        slots.append({
            "name": name,
            "kind": b.kinds[v],
            "type": result.annotations[name],
            "probabilities": {t: float(r.probabilities[v, j]) for j, t in enumerate(b.universe.names)},
        })
    return {
        "schema": "softtype-infer",
        "version": REPORT_VERSION,
        "mode": mode,
        "program": program,
        "annotations": dict(result.annotations),
        "slots": slots,
        "solver": {
            "iterations": r.iterations,
            "converged": r.converged,
            "objective": r.objective,
            "constraint_value": r.constraint_value,
            "lambda": r.lam,
            "grad_norm": r.grad_norm,
        },
    }


def dump_json(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


# -- evaluation ----------------------------------------------------------------


@dataclass
class EvaluationReport:
    """Top-1 accuracy bookkeeping.

    ``tp[(kind, type)]`` counts slots predicted `type` whose gold type is `type`;
    ``fp[(kind, type)]`` counts slots predicted `type` with another gold type.
    Abstentions (predicted ``any``) are false positives of ``any`` and are also
    counted separately.  Slots whose gold type is outside the universe (or is
    ``any``) are out of vocabulary and excluded.
    """

    tp: Counter = field(default_factory=Counter)
    fp: Counter = field(default_factory=Counter)
    abstained: Counter = field(default_factory=Counter)
    oov: Counter = field(default_factory=Counter)
    files: int = 0
    failures: dict = field(default_factory=dict)

    def merge(self, other: EvaluationReport) -> EvaluationReport:
        clash = set(self.failures) & set(other.failures)
        if clash:
            raise ValueError(f"files reported twice: {sorted(clash)}")
        return EvaluationReport(
            self.tp + other.tp,
            self.fp + other.fp,
            self.abstained + other.abstained,
            self.oov + other.oov,
            self.files + other.files,
            {**self.failures, **other.failures},
        )

    def correct(self, kind: Optional[str] = None) -> int:
        return sum(n for (k, _), n in self.tp.items() if kind is None or k == kind)

    def evaluated(self, kind: Optional[str] = None) -> int:
        return self.correct(kind) + sum(n for (k, _), n in self.fp.items() if kind is None or k == kind)

    def accuracy(self, kind: Optional[str] = None) -> Optional[float]:
        n = self.evaluated(kind)
        return self.correct(kind) / n if n else None

    def _summary(self, kind=None) -> dict:
        def total(c):
            return sum(n for k, n in c.items() if kind is None or k == kind)

        return {
            "accuracy": self.accuracy(kind),
            "correct": self.correct(kind),
            "evaluated": self.evaluated(kind),
            "abstained": total(self.abstained),
            "oov": total(self.oov),
        }

    def to_json(self, mode: Optional[str] = None) -> dict:
        types = sorted({t for _, t in self.tp} | {t for _, t in self.fp})
        return {
            "schema": "softtype-eval",
            "version": REPORT_VERSION,
            "mode": mode,
            "files": self.files,
            "failures": dict(sorted(self.failures.items())),
            "overall": self._summary(),
            "by_kind": {k: self._summary(k) for k in SLOT_KINDS},
            "by_type": {
                t: {
                    "tp": sum(n for (_, ty), n in self.tp.items() if ty == t),
                    "fp": sum(n for (_, ty), n in self.fp.items() if ty == t),
                }
                for t in types
            },
        }

    def summary_lines(self) -> list[str]:
        def fmt(acc):
            return "n/a" if acc is None else f"{acc:.3f}"

        lines = [f"files: {self.files}  failures: {len(self.failures)}"]
        for k in SLOT_KINDS:
            if self.evaluated(k):
                lines.append(f"{k:>4}: {fmt(self.accuracy(k))} ({self.correct(k)}/{self.evaluated(k)})")
        lines.append(f" ALL: {fmt(self.accuracy())} ({self.correct()}/{self.evaluated()})")
        return lines


def evaluate(
    predicted: Mapping[str, str],
    gold: Mapping[str, str],
    kinds: Mapping[str, str],
    universe: TypeUniverse = DEFAULT_UNIVERSE,
) -> EvaluationReport:
    """Compare predicted and gold typings over the same slots."""
    if set(predicted) != set(gold):
        missing = sorted(set(gold) - set(predicted))
        extra = sorted(set(predicted) - set(gold))
        raise PipelineError(f"identifier sets differ: missing {missing}, unexpected {extra}")
    rep = EvaluationReport()
    for name in sorted(gold):
        kind = kinds[name]
        g, p = gold[name], predicted[name]
        if g == ANY or g not in universe.names:
            rep.oov[kind] += 1
            continue
        if p == ANY:
            rep.abstained[kind] += 1
        if p == g:
            rep.tp[(kind, p)] += 1
        else:
            rep.fp[(kind, p)] += 1
    return rep


def evaluate_source(
    source: str,
    mode: str,
    optimiser: OptimiserConfig = PIPELINE_OPTIMISER,
    model: Optional[LstmModel] = None,
    universe: TypeUniverse = DEFAULT_UNIVERSE,
    path=None,
) -> EvaluationReport:
    """Strip a gold program, infer its annotations, and score them."""
    gold = gold_annotations(parse_program(source, path=path))
    result = infer(source, mode, optimiser, model=model, universe=universe, path=path)
    kinds = dict(zip(result.bundle.ids.names, result.bundle.kinds))
    predicted = {k: result.annotations[k] for k in gold}
    rep = evaluate(predicted, gold, {k: kinds[k] for k in gold}, universe)
    rep.files = 1
    return rep


def batch_run(
    directory,
    mode: str,
    optimiser: OptimiserConfig = PIPELINE_OPTIMISER,
    model: Optional[LstmModel] = None,
    universe: TypeUniverse = DEFAULT_UNIVERSE,
    jobs: int = 1,
) -> EvaluationReport:
    """Evaluate every ``.tl`` file under `directory`; failures are recorded, not raised."""
    if mode not in MODES:
        raise PipelineError(f"unknown mode {mode!r}")
    directory = Path(directory)
    if not directory.is_dir():
        raise PipelineError(f"{directory} is not a directory")
    files = sorted(directory.rglob("*.tl"))

    def one(path: Path) -> EvaluationReport:
        rel = path.relative_to(directory).as_posix()
        try:
            source = path.read_text(encoding="utf-8")
            return evaluate_source(source, mode, optimiser, model, universe, path=rel)
        except (SoftTypeError, OSError, UnicodeDecodeError) as exc:
            log.warning("%s: %s", rel, exc)
            return EvaluationReport(files=1, failures={rel: str(exc)})

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(one, files))
    else:
        parts = [one(p) for p in files]
    total = EvaluationReport()
    for part in parts:
        total = total.merge(part)
    return total


def aggregate(reports: Sequence[EvaluationReport]) -> EvaluationReport:
    total = EvaluationReport()
    for r in reports:
        total = total.merge(r)
    return total
