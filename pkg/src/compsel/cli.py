"""Command-line front end.

Subcommands::

    compsel fit     --samples S.csv --catalog C.json [--spec SPEC.json] --out MODEL.json
    compsel score   --catalog C.json --weights W.json [--renormalize-weights]
    compsel select  --catalog C.json --spec SPEC.json --weights W.json [--model MODEL.json]
                    [--algorithm greedy|intelligent|sa|exhaustive] [--seed N] [--out RESULT.json]
    compsel oracle  --catalog C.json --spec SPEC.json --weights W.json [--model MODEL.json] [--out RESULT.json]

Exit codes:
    0  feasible result (or fit/score succeeded)
    1  bad arguments or input files
    2  no feasible combination found; best-effort result still written
"""

from __future__ import annotations

import argparse
import csv
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, TypeVar

from compsel.catalog import load_catalog
from compsel.errors import InputError
from compsel.filtering import SystemSpec, filter_chain, load_spec
from compsel.perfmodel import AGGREGATES, PerformanceModel, fit, load_model, load_samples
from compsel.pliability import QualityWeights, load_weights, normalize, pliability_table, validate_weights
from compsel.selector import (
    ALGORITHMS,
    FEASIBLE,
    SaParams,
    SelectionProblem,
    SelectionResult,
    exhaustive_select,
    run_selection_loop,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2

T = TypeVar("T")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is reserved for infeasibility here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class RunConfig:
    catalog: Optional[Path] = None
    spec: Optional[Path] = None
    weights: Optional[Path] = None
    model: Optional[Path] = None
    samples: Optional[Path] = None
    out: Optional[Path] = None
    algorithm: str = "sa"
    seed: int = 0
    max_rounds: int = 50
    renormalize_weights: bool = False
    pliability_threshold: Optional[float] = None
    probability_threshold: Optional[float] = None
    aggregate: str = "sum"
    sa_t0: Optional[float] = None
    sa_alpha: float = 0.95
    sa_steps: int = 50

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        fields = cls.__dataclass_fields__
        return cls(**{k: v for k, v in vars(args).items() if k in fields and v is not None})

    def sa_params(self) -> SaParams:
        return SaParams(
            initial_temperature=self.sa_t0,
            cooling_factor=self.sa_alpha,
            steps_per_temperature=self.sa_steps,
            seed=self.seed,
        )


def _need(path: Optional[Path], flag: str) -> Path:
    if path is None:
        raise InputError(f"{flag} is required")
    return path


def _read(path: Path, loader: Callable[[bytes], T]) -> T:
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise InputError(f"{path}: cannot read: {exc.strerror or exc}") from None
    try:
        return loader(data)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_weights(cfg: RunConfig) -> QualityWeights:
    weights = _read(_need(cfg.weights, "--weights"), load_weights)
    if cfg.renormalize_weights and abs(weights.total - 1.0) > 0:
        total = weights.total
        weights = weights.renormalized()
        warnings.warn(f"weights summed to {total!r}; scaled by 1/{total!r}")
    try:
        validate_weights(weights)
    except InputError as exc:
        raise InputError(f"{cfg.weights}: {exc}") from None
    return weights


def _write(path: Optional[Path], text: str) -> None:
    if path is None:
        return
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: cannot write: {exc.strerror or exc}") from None


# --- subcommands --------------------------------------------------------------


def cmd_fit(cfg: RunConfig) -> int:
    catalog = _read(_need(cfg.catalog, "--catalog"), load_catalog)
    samples = _read(_need(cfg.samples, "--samples"), load_samples)
    spec = _read(cfg.spec, load_spec) if cfg.spec else None
    out = _need(cfg.out, "--out")
    requirements = spec.perf_requirements if spec else ()
    try:
        model = fit(samples, catalog, requirements, aggregate=cfg.aggregate)
    except InputError as exc:
        raise InputError(f"{cfg.samples}: {exc}") from None
    _write(out, model.dumps())
    print(f"{'metric':<24} {'samples':>8} {'r_squared':>12}")
    for metric, reg in model.regressions.items():
        print(f"{metric:<24} {reg.n_samples:>8d} {reg.r_squared:>12.6f}")
    print(f"model written to {out}")
    return EXIT_OK


def cmd_score(cfg: RunConfig) -> int:
    catalog = _read(_need(cfg.catalog, "--catalog"), load_catalog)
    weights = _load_weights(cfg)
    nq = normalize(catalog)
    scores = pliability_table(nq, weights)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["component_id", *catalog.attribute_names, "pliability"])
    for cid in catalog.ids:
        writer.writerow([cid, *(repr(nq.get(cid, h)) for h in catalog.attribute_names), repr(scores[cid])])
    return EXIT_OK


def _build_problem(cfg: RunConfig):
    catalog = _read(_need(cfg.catalog, "--catalog"), load_catalog)
    spec: SystemSpec = _read(_need(cfg.spec, "--spec"), load_spec)
    weights = _load_weights(cfg)
    model: Optional[PerformanceModel] = _read(cfg.model, load_model) if cfg.model else None
    spec = spec.with_thresholds(cfg.pliability_threshold, cfg.probability_threshold)
    if spec.perf_requirements and model is None:
        raise InputError(f"{cfg.spec}: performance requirements need --model")
    nq = normalize(catalog)
    survivors, stages = filter_chain(catalog, spec, nq, weights, model)
    problem = SelectionProblem(catalog, spec, weights, model, survivors, nq)
    return problem, stages


def _report(cfg: RunConfig, result: SelectionResult, stages) -> int:
    _write(cfg.out, result.dumps())
    best = result.best
    print(f"status: {result.status}")
    print(f"algorithm: {result.algorithm}")
    if result.rng_seed is not None:
        print(f"seed: {result.rng_seed}")
    print(f"rounds: {result.rounds_used}")
    print("survivors: " + ", ".join(f"{name} {count}" for name, count in stages))
    print("selection: " + (", ".join(best.ids) or "(none)"))
    print(f"total cost: {best.total_cost!r}")
    print(f"system pliability: {best.system_pliability!r}")
    for metric, value in best.predicted.items():
        print(f"predicted {metric}: {value!r}")
    if best.uncovered:
        print("uncovered: " + ", ".join(sorted(best.uncovered)))
    if cfg.out is not None:
        print(f"result written to {cfg.out}")
    return EXIT_OK if result.status == FEASIBLE else EXIT_INFEASIBLE


def cmd_select(cfg: RunConfig) -> int:
    problem, stages = _build_problem(cfg)
    problem.check_coverable()
    result = run_selection_loop(problem, cfg.algorithm, cfg.max_rounds, cfg.sa_params())
    return _report(cfg, result, stages)


def cmd_oracle(cfg: RunConfig) -> int:
    problem, stages = _build_problem(cfg)
    return _report(cfg, exhaustive_select(problem), stages)


COMMANDS = {"fit": cmd_fit, "score": cmd_score, "select": cmd_select, "oracle": cmd_oracle}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--catalog", type=Path, metavar="PATH", help="component catalog JSON")
    common.add_argument("--spec", type=Path, metavar="PATH", help="system spec JSON")
    common.add_argument("--weights", type=Path, metavar="PATH", help="quality weights JSON")
    common.add_argument("--model", type=Path, metavar="PATH", help="fitted performance model JSON")
    common.add_argument("--samples", type=Path, metavar="PATH", help="training samples CSV (fit)")
    common.add_argument("--out", type=Path, metavar="PATH", help="output file")
    common.add_argument("--algorithm", choices=ALGORITHMS, default="sa")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-rounds", type=int, default=50)
    common.add_argument("--renormalize-weights", action="store_true",
                        help="scale weights to sum to 1 instead of rejecting them")
    common.add_argument("--pliability-threshold", type=float, help="override the spec's threshold")
    common.add_argument("--probability-threshold", type=float, help="override the spec's threshold")
    common.add_argument("--aggregate", choices=AGGREGATES, default="sum",
                        help="feature aggregation for fit (default: sum)")
    common.add_argument("--sa-t0", type=float, help="initial temperature (default: automatic)")
    common.add_argument("--sa-alpha", type=float, default=0.95, help="cooling factor")
    common.add_argument("--sa-steps", type=int, default=50, help="steps per temperature")

    parser = _Parser(prog="compsel", description="Pliability-aware software component selection.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "fit": "fit the performance model from measured samples",
        "score": "print the normalized quality and pliability table",
        "select": "filter the catalog and search for a feasible combination",
        "oracle": "exhaustively enumerate survivors (at most 20)",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    cfg = RunConfig.from_args(args)
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        warnings.showwarning = _show_warning
        try:
            return COMMANDS[args.command](cfg)
        except InputError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
