"""Candidate generation and search.

Every algorithm works on a :class:`SelectionProblem` (catalog, spec, weights,
optional performance model and the filtered survivor ids) and returns a
:class:`SelectionResult`. ``exhaustive_select`` is the ground-truth oracle for
small instances.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from compsel._io import FORMAT_VERSION, dumps
from compsel.catalog import Catalog
from compsel.errors import GuardError, UncoverableError, ValidationError
from compsel.filtering import SystemSpec, min_probability
from compsel.perfmodel import PerformanceModel, _predict, quality_matrix
from compsel.pliability import NormalizedQuality, QualityWeights, normalize, pliability_table, validate_weights

ALGORITHMS = ("greedy", "intelligent", "sa", "exhaustive")
FEASIBLE = "feasible"
BEST_EFFORT = "infeasible-best-effort"

ZERO_COST = 1e-9
EXHAUSTIVE_LIMIT = 20
_AUTO_T0_MOVES = 100
_CHUNK = 1 << 14
_TIE_TOL = 1e-9


@dataclass
class SelectionProblem:
    """Fixed inputs of one selection run.

    ``survivors`` defaults to every catalog component; pass the filter
    chain's output to search a reduced space.
    """

    catalog: Catalog
    spec: SystemSpec
    weights: QualityWeights
    model: Optional[PerformanceModel] = None
    survivors: Optional[Iterable[str]] = None
    nq: Optional[NormalizedQuality] = None

    pliability: Dict[str, float] = field(init=False, repr=False)
    survivor_cost: float = field(init=False, repr=False)

    def __post_init__(self):
        validate_weights(self.weights)
        if self.nq is None:
            self.nq = normalize(self.catalog)
        ids = self.catalog.ids if self.survivors is None else self.survivors
        self.survivors = tuple(sorted(set(ids)))
        unknown = [i for i in self.survivors if i not in self.catalog]
        if unknown:
            raise ValidationError(f"unknown component id {unknown[0]!r}", unknown[0])
        if self.spec.perf_requirements:
            if self.model is None:
                raise ValidationError("spec has performance requirements but no performance model was given")
            for req in self.spec.perf_requirements:
                if req.metric not in self.model.regressions:
                    raise ValidationError(f"model has no regression for metric {req.metric!r}", req.metric)
        self.pliability = pliability_table(self.nq, self.weights)
        self.survivor_cost = math.fsum(self.catalog[i].cost for i in self.survivors)

    def uncoverable(self) -> FrozenSet[str]:
        provided = set()
        for i in self.survivors:
            provided |= self.catalog[i].provides
        return self.spec.requirements - provided

    def check_coverable(self) -> None:
        missing = self.uncoverable()
        if missing:
            raise UncoverableError(missing)


@dataclass(frozen=True)
class Candidate:
    selection: FrozenSet[str]
    covered: FrozenSet[str]
    uncovered: FrozenSet[str]
    total_cost: float
    system_pliability: float
    predicted: Mapping[str, float]
    violations: Mapping[str, float]
    feasible: bool

    @property
    def ids(self) -> Tuple[str, ...]:
        return tuple(sorted(self.selection))

    def summary(self) -> dict:
        return {
            "selection": list(self.ids),
            "total_cost": self.total_cost,
            "system_pliability": self.system_pliability,
            "uncovered": sorted(self.uncovered),
            "predicted": dict(self.predicted),
            "violations": dict(self.violations),
        }


@dataclass(frozen=True)
class SelectionResult:
    best: Candidate
    status: str
    algorithm: str
    rounds_used: int
    rng_seed: Optional[int] = None
    trace: Tuple[dict, ...] = ()

    def __post_init__(self):
        if self.status == FEASIBLE and not self.best.feasible:
            raise ValueError("feasible status with an infeasible candidate")

    def to_dict(self) -> dict:
        best = self.best
        return {
            "format_version": FORMAT_VERSION,
            "status": self.status,
            "algorithm": self.algorithm,
            "rounds_used": self.rounds_used,
            "rng_seed": self.rng_seed,
            "selection": list(best.ids),
            "feasible": best.feasible,
            "covered": sorted(best.covered),
            "uncovered": sorted(best.uncovered),
            "total_cost": best.total_cost,
            "system_pliability": best.system_pliability,
            "predicted": dict(best.predicted),
            "violations": dict(best.violations),
            "trace": list(self.trace),
        }

    def dumps(self) -> str:
        return dumps(self.to_dict())


@dataclass(frozen=True)
class SaParams:
    initial_temperature: Optional[float] = None  # None: automatic
    cooling_factor: float = 0.95
    steps_per_temperature: int = 50
    min_temperature: float = 1e-3
    seed: int = 0
    # energy term weights
    coverage_weight: float = 10.0
    cost_weight: float = 1.0
    pliability_weight: float = 0.1
    violation_weight: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.cooling_factor < 1.0:
            raise ValidationError(f"cooling_factor must be in (0, 1), got {self.cooling_factor!r}")
        if self.steps_per_temperature < 1:
            raise ValidationError("steps_per_temperature must be positive")
        if not self.min_temperature > 0:
            raise ValidationError("min_temperature must be positive")
        if self.initial_temperature is not None and not self.initial_temperature > 0:
            raise ValidationError("initial_temperature must be positive")
        weights = (self.coverage_weight, self.cost_weight, self.pliability_weight, self.violation_weight)
        if any(not w >= 0 for w in weights):
            raise ValidationError("energy weights must be non-negative")


# --- evaluation ---------------------------------------------------------------


def evaluate(problem: SelectionProblem, selection: Iterable[str]) -> Candidate:
    """Coverage, cost, mean pliability, predicted metrics and feasibility of a selection."""
    ids = tuple(sorted(set(selection)))
    survivors = set(problem.survivors)
    for i in ids:
        if i not in problem.catalog:
            raise ValidationError(f"unknown component id {i!r}", i)
        if i not in survivors:
            raise ValidationError(f"component {i!r} is not among the filtered survivors", i)
    catalog, spec = problem.catalog, problem.spec
    covered = frozenset().union(*(catalog[i].provides for i in ids))
    uncovered = spec.requirements - covered
    cost = math.fsum(catalog[i].cost for i in ids)
    pliability = math.fsum(problem.pliability[i] for i in ids) / len(ids) if ids else 0.0
    predicted = _predict(problem.model, ids, catalog) if problem.model is not None else {}
    violations = {r.metric: r.violation(predicted[r.metric]) for r in spec.perf_requirements}
    feasible = not uncovered and all(r.satisfied(predicted[r.metric]) for r in spec.perf_requirements)
    return Candidate(frozenset(ids), covered, uncovered, cost, pliability, predicted, violations, feasible)


def energy(problem: SelectionProblem, cand: Candidate, params: Optional[SaParams] = None) -> float:
    """Annealing energy: uncovered requirements dominate, then cost relative to
    the whole survivor pool, quality shortfall and scaled performance violations."""
    p = params or SaParams()
    return (
        p.coverage_weight * len(cand.uncovered)
        + p.cost_weight * cand.total_cost / (1.0 + problem.survivor_cost)
        + p.pliability_weight * (10.0 - cand.system_pliability) / 10.0
        + p.violation_weight * math.fsum(cand.violations.values())
    )


def rank_key(cand: Candidate) -> tuple:
    """Total order used by the oracle and for best-so-far: feasible first by
    (cost, -pliability, ids); otherwise least uncovered, least violation."""
    if cand.feasible:
        return (0, 0, 0.0, cand.total_cost, -cand.system_pliability, cand.ids)
    return (
        1,
        len(cand.uncovered),
        math.fsum(cand.violations.values()),
        cand.total_cost,
        -cand.system_pliability,
        cand.ids,
    )


def _trace_entry(round_no: int, cand: Candidate, seed: Optional[int] = None) -> dict:
    entry = {"round": round_no}
    if seed is not None:
        entry["seed"] = seed
    entry.update(cand.summary())
    entry["verdict"] = FEASIBLE if cand.feasible else "infeasible"
    return entry


def _single(cand: Candidate, algorithm: str, seed: Optional[int] = None) -> SelectionResult:
    return SelectionResult(
        cand,
        FEASIBLE if cand.feasible else BEST_EFFORT,
        algorithm,
        1,
        seed,
        (_trace_entry(0, cand, seed),),
    )


# --- greedy variants ----------------------------------------------------------


def _rotated(ids: Sequence[str], rotation: int) -> List[str]:
    if not ids:
        return []
    k = rotation % len(ids)
    return list(ids[k:]) + list(ids[:k])


def _greedy_cover(problem: SelectionProblem, score: Callable[[str, int], tuple], rotation: int = 0) -> List[str]:
    problem.check_coverable()
    order = _rotated(problem.survivors, rotation)
    position = {cid: n for n, cid in enumerate(order)}
    needed = set(problem.spec.requirements)
    remaining = list(order)
    chosen: List[str] = []
    while needed:
        best, best_key = None, None
        for cid in remaining:
            gain = len(problem.catalog[cid].provides & needed)
            if gain == 0:
                continue
            key = score(cid, gain) + (-position[cid],)
            if best_key is None or key > best_key:
                best, best_key = cid, key
        if best is None:
            break
        chosen.append(best)
        remaining.remove(best)
        needed -= problem.catalog[best].provides
    return chosen


def _effective_cost(problem: SelectionProblem, cid: str) -> float:
    return problem.catalog[cid].cost or ZERO_COST


def _plain_score(problem: SelectionProblem):
    return lambda cid, gain: (gain / _effective_cost(problem, cid),)


def _intelligent_score(problem: SelectionProblem):
    reqs = problem.spec.perf_requirements
    probs = {cid: min_probability(problem.model, cid, reqs) for cid in problem.survivors}

    def score(cid, gain):
        pl = problem.pliability[cid]
        value = gain * (1.0 + pl / 10.0) * probs[cid] / _effective_cost(problem, cid)
        return (value, pl)

    return score


def greedy_select(problem: SelectionProblem, rotation: int = 0) -> SelectionResult:
    """Set-cover greedy on newly-covered requirements per unit cost.

    Ties go to the earliest id in sorted order rotated left by ``rotation``.
    """
    chosen = _greedy_cover(problem, _plain_score(problem), rotation)
    return _single(evaluate(problem, chosen), "greedy")


def intelligent_greedy_select(problem: SelectionProblem, rotation: int = 0) -> SelectionResult:
    """Greedy weighted by the component's pliability and its weakest
    satisfaction probability; ties by pliability, then id order."""
    chosen = _greedy_cover(problem, _intelligent_score(problem), rotation)
    return _single(evaluate(problem, chosen), "intelligent")


# --- simulated annealing ------------------------------------------------------


class _Annealer:
    def __init__(self, problem: SelectionProblem, params: SaParams, rng: random.Random):
        self.problem = problem
        self.params = params
        self.ids = problem.survivors
        self.rng = rng
        self._memo: Dict[int, Tuple[float, Candidate]] = {}

    def state(self, mask: int) -> Tuple[float, Candidate]:
        hit = self._memo.get(mask)
        if hit is None:
            cand = evaluate(self.problem, (cid for k, cid in enumerate(self.ids) if mask >> k & 1))
            hit = self._memo[mask] = (energy(self.problem, cand, self.params), cand)
        return hit

    def neighbor(self, mask: int) -> int:
        n = len(self.ids)
        present = [k for k in range(n) if mask >> k & 1]
        absent = [k for k in range(n) if not mask >> k & 1]
        moves = []
        if absent:
            moves.append("add")
        if present:
            moves.append("remove")
        if present and absent:
            moves.append("swap")
        move = self.rng.choice(moves)
        if move == "add":
            return mask | 1 << self.rng.choice(absent)
        if move == "remove":
            return mask & ~(1 << self.rng.choice(present))
        out = self.rng.choice(present)
        return (mask & ~(1 << out)) | 1 << self.rng.choice(absent)


def sa_select(
    problem: SelectionProblem,
    params: SaParams = SaParams(),
    on_accept: Optional[Callable[[float], None]] = None,
) -> SelectionResult:
    """Simulated annealing over survivor subsets, seeded from the greedy cover.

    Geometric cooling runs while the temperature exceeds ``min_temperature``,
    then one zero-temperature block of ``steps_per_temperature`` steps accepts
    only non-worsening moves. Returns the lowest-energy state ever visited.
    ``on_accept`` sees the energy of the initial state and of every accepted move.
    """
    rng = random.Random(params.seed)
    ann = _Annealer(problem, params, rng)
    start = set(_greedy_cover(problem, _plain_score(problem)))
    mask = sum(1 << k for k, cid in enumerate(ann.ids) if cid in start)
    cur_e, cur = ann.state(mask)
    best_e, best = cur_e, cur
    if on_accept is not None:
        on_accept(cur_e)

    if params.initial_temperature is None:
        deltas = [abs(ann.state(ann.neighbor(mask))[0] - cur_e) for _ in range(_AUTO_T0_MOVES)]
        temperature = math.fsum(deltas) / len(deltas) / math.log(2.0)
    else:
        temperature = params.initial_temperature

    def step(t: float) -> None:
        nonlocal mask, cur_e, best_e, best
        nxt = ann.neighbor(mask)
        nxt_e, nxt_cand = ann.state(nxt)
        delta = nxt_e - cur_e
        if delta <= 0 or (t > 0 and rng.random() < math.exp(-delta / t)):
            mask, cur_e = nxt, nxt_e
            if on_accept is not None:
                on_accept(cur_e)
            if cur_e < best_e:
                best_e, best = cur_e, nxt_cand

    while temperature > params.min_temperature:
        for _ in range(params.steps_per_temperature):
            step(temperature)
        temperature *= params.cooling_factor
    for _ in range(params.steps_per_temperature):
        step(0.0)

    return _single(best, "sa", params.seed)


def sa_restarts(
    problem: SelectionProblem,
    seeds: Sequence[int],
    params: SaParams = SaParams(),
    max_workers: Optional[int] = None,
) -> List[SelectionResult]:
    """Independent annealing runs, one per seed, executed on a thread pool.

    Results come back in ``seeds`` order and equal the sequential runs.
    """
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda s: sa_select(problem, replace(params, seed=s)), seeds))


# --- exhaustive oracle --------------------------------------------------------


def _subset_arrays(problem: SelectionProblem) -> Dict[str, np.ndarray]:
    """Per-mask coverage, cost, pliability and performance arrays for every subset."""
    ids = problem.survivors
    n = len(ids)
    catalog, spec, model = problem.catalog, problem.spec, problem.model
    reqs = sorted(spec.requirements)
    provides = np.array([[r in catalog[i].provides for r in reqs] for i in ids], dtype=float).reshape(n, len(reqs))
    costs = np.array([catalog[i].cost for i in ids], dtype=float)
    plis = np.array([problem.pliability[i] for i in ids], dtype=float)
    perf = spec.perf_requirements if model is not None else ()
    if perf:
        feats = quality_matrix(ids, catalog, model.attribute_names)
        coefs = np.array([model.regressions[r.metric].coefficients for r in perf], dtype=float)
        coefs = coefs.reshape(len(perf), len(model.attribute_names))
        intercepts = np.array([model.regressions[r.metric].intercept for r in perf])

    total = 1 << n
    out = {k: np.empty(total) for k in ("uncovered", "violation", "cost", "pliability")}
    out["perf_ok"] = np.ones(total, dtype=bool)
    bits = np.arange(n, dtype=np.int64)
    for lo in range(0, total, _CHUNK):
        masks = np.arange(lo, min(lo + _CHUNK, total), dtype=np.int64)
        M = ((masks[:, None] >> bits) & 1).astype(float)
        count = M.sum(axis=1)
        sl = slice(lo, lo + len(masks))
        out["uncovered"][sl] = len(reqs) - ((M @ provides) > 0).sum(axis=1)
        out["cost"][sl] = M @ costs
        out["pliability"][sl] = np.divide(M @ plis, count, out=np.zeros(len(masks)), where=count > 0)
        if not perf:
            out["violation"][sl] = 0.0
            continue
        if model.aggregate == "sum":
            x = M @ feats
        elif model.aggregate == "mean":
            x = np.divide(M @ feats, count[:, None], out=np.zeros((len(masks), feats.shape[1])), where=count[:, None] > 0)
        else:
            x = (M[:, :, None] * feats[None, :, :]).max(axis=1) if n else np.zeros((len(masks), feats.shape[1]))
        pred = intercepts + x @ coefs.T
        viol = np.zeros(len(masks))
        ok = np.ones(len(masks), dtype=bool)
        for j, r in enumerate(perf):
            gap = pred[:, j] - r.bound if r.comparator == "le" else r.bound - pred[:, j]
            viol += np.maximum(gap, 0.0) / (abs(r.bound) + 1.0)
            # slack so that the exact re-evaluation, not rounding, decides borderline cases
            ok &= gap <= _TIE_TOL * (abs(r.bound) + 1.0)
        out["violation"][sl] = viol
        out["perf_ok"][sl] = ok
    return out


def _shortlist(pool: np.ndarray, keys: Sequence[np.ndarray]) -> np.ndarray:
    """Masks in ``pool`` whose keys are within tolerance of the lexicographic minimum."""
    idx = np.flatnonzero(pool)
    for key in keys:
        if not len(idx):
            break
        vals = key[idx]
        best = vals.min()
        idx = idx[vals <= best + _TIE_TOL * (1.0 + abs(best))]
    return idx


def exhaustive_select(problem: SelectionProblem) -> SelectionResult:
    """Enumerate every survivor subset and return the rank-minimal candidate.

    Feasible subsets are ranked by (cost, -pliability, sorted ids); when none
    is feasible the least-uncovered, least-violating subset is reported.
    """
    n = len(problem.survivors)
    if n > EXHAUSTIVE_LIMIT:
        raise GuardError(f"exhaustive search is limited to {EXHAUSTIVE_LIMIT} survivors, got {n}")
    arrays = _subset_arrays(problem)
    ids = problem.survivors

    def materialize(mask: int) -> Candidate:
        return evaluate(problem, (cid for k, cid in enumerate(ids) if mask >> k & 1))

    pool = (arrays["uncovered"] == 0) & arrays["perf_ok"]
    while pool.any():
        picks = _shortlist(pool, (arrays["cost"], -arrays["pliability"]))
        cands = [materialize(int(m)) for m in picks]
        feasible = [c for c in cands if c.feasible]
        if feasible:
            return _single(min(feasible, key=rank_key), "exhaustive")
        pool[picks] = False

    everything = np.ones(len(arrays["cost"]), dtype=bool)
    picks = _shortlist(
        everything, (arrays["uncovered"], arrays["violation"], arrays["cost"], -arrays["pliability"])
    )
    return _single(min((materialize(int(m)) for m in picks), key=rank_key), "exhaustive")


# --- estimate/compare loop ----------------------------------------------------


def run_selection_loop(
    problem: SelectionProblem,
    algorithm: str = "sa",
    max_rounds: int = 50,
    sa_params: SaParams = SaParams(),
) -> SelectionResult:
    """Generate, evaluate and compare candidates until one is feasible.

    Round ``r`` (0-based) rotates greedy tie-breaking by ``r`` or re-seeds
    annealing with ``sa_params.seed + r``. After ``max_rounds`` infeasible
    rounds the best candidate seen is returned as best effort. The
    exhaustive oracle is conclusive in one round and is not repeated.
    """
    if algorithm not in ALGORITHMS:
        raise ValidationError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    if max_rounds < 1:
        raise ValidationError("max_rounds must be at least 1")
    if algorithm == "exhaustive":
        return exhaustive_select(problem)
    problem.check_coverable()

    seed = sa_params.seed if algorithm == "sa" else None
    trace: List[dict] = []
    best: Optional[Candidate] = None
    for r in range(max_rounds):
        round_seed = None
        if algorithm == "greedy":
            cand = evaluate(problem, _greedy_cover(problem, _plain_score(problem), r))
        elif algorithm == "intelligent":
            cand = evaluate(problem, _greedy_cover(problem, _intelligent_score(problem), r))
        else:
            round_seed = sa_params.seed + r
            cand = sa_select(problem, replace(sa_params, seed=round_seed)).best
        trace.append(_trace_entry(r, cand, round_seed))
        if best is None or rank_key(cand) < rank_key(best):
            best = cand
        if cand.feasible:
            return SelectionResult(cand, FEASIBLE, algorithm, r + 1, seed, tuple(trace))
    return SelectionResult(best, BEST_EFFORT, algorithm, max_rounds, seed, tuple(trace))
