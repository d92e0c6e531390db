"""Surrogate-assisted constrained optimization loop: LHS-initialized
database, feasibility-first parent ranking, differential-evolution child
generation, conservative surrogate prescreening, and exactly one true
(all-corners) evaluation per iteration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .behavior import EvaluationFailure
from .problem import METRIC_NAMES, GE, PerfMetrics, SizingProblem, compare_designs, worst_case
from .space import DesignPoint, repair, sample_initial
from .surrogate import EnsembleModel, MlpConfig, fit, predict_conservative, update

RUN_LOG_HEADER = [
    "eval_index",
    "origin",
    "objective",
    "violation",
    "incumbent_objective",
    "incumbent_violation",
] + [f"worst_{name}" for name in METRIC_NAMES]


@dataclass(frozen=True)
class OptConfig:
    eval_budget: int
    seed: int
    lambda_parents: int = 20
    children_per_iter: int = 50
    de_f: float = 0.8
    de_cr: float = 0.8
    init_samples: int | None = None  # None -> max(80, 4 * dim)
    no_improve_limit: int = 100
    beta: float = 0.7
    surrogate: MlpConfig | None = None  # None -> desk-scale refit settings
    refit_epochs: int = 60  # warm-start training budget per iteration

    def __post_init__(self):
        if self.lambda_parents < 4:
            raise ValueError("differential evolution needs at least 4 parents")
        if self.children_per_iter < 1:
            raise ValueError("children_per_iter must be positive")

    def resolve_init_samples(self, dim: int) -> int:
        if self.init_samples is None:
            # 4x-dimension rule, floored at 80, but leave at least half the
            # budget for the optimization loop
            n = min(max(80, 4 * dim), max(2, self.eval_budget // 2))
        else:
            n = self.init_samples
        if self.eval_budget <= n:
            raise ValueError(
                f"eval_budget {self.eval_budget} must exceed init_samples {n}"
            )
        return n

    def resolve_surrogate(self, dim: int) -> MlpConfig:
        if self.surrogate is not None:
            return self.surrogate
        # per-iteration refits warm-start from the previous model, so the
        # full-length training defaults are only paid once
        return MlpConfig(
            hidden_width=min(max(10, 2 * dim), 32), epochs=300, patience=50
        )


@dataclass(frozen=True)
class TrialRecord:
    point: DesignPoint
    per_corner: tuple[PerfMetrics, ...]
    worst: PerfMetrics | None
    violation: float
    objective: float
    eval_index: int
    origin: str  # "initial" or "de"
    failure: str | None = None


@dataclass
class Database:
    records: list[TrialRecord] = field(default_factory=list)
    incumbent_index: int = 0

    @property
    def incumbent(self) -> TrialRecord:
        return self.records[self.incumbent_index]

    def insert(self, rec: TrialRecord) -> bool:
        """Append and update the incumbent; returns True if it changed."""
        self.records.append(rec)
        if len(self.records) == 1:
            self.incumbent_index = 0
            return True
        inc = self.incumbent
        if compare_designs((rec.objective, rec.violation), (inc.objective, inc.violation)) > 0:
            self.incumbent_index = len(self.records) - 1
            return True
        return False

    def ranked_indices(self) -> list[int]:
        """All record indices, best first, ties broken oldest-first. The key
        encodes the same feasibility-first order as compare_designs."""

        def key(i: int):
            r = self.records[i]
            if r.violation == 0.0:
                return (0, -r.objective, i)
            return (1, r.violation, i)

        return sorted(range(len(self.records)), key=key)

    def top_distinct_points(self, count: int) -> list[DesignPoint]:
        """Best `count` distinct designs (re-evaluations of one point count
        once); DE parent diversity depends on distinctness."""
        out: list[DesignPoint] = []
        taken: set[bytes] = set()
        for i in self.ranked_indices():
            key = np.asarray(self.records[i].point).tobytes()
            if key in taken:
                continue
            taken.add(key)
            out.append(self.records[i].point)
            if len(out) == count:
                break
        return out


def evaluate_record(
    problem: SizingProblem, point: DesignPoint, eval_index: int, origin: str
) -> TrialRecord:
    """One true evaluation over all corners; evaluator failures yield an
    infeasible record with maximal violation instead of aborting the run."""
    try:
        per_corner = tuple(problem.evaluate_all(point))
        worst = worst_case(per_corner)
        return TrialRecord(
            point=point, per_corner=per_corner, worst=worst,
            violation=problem.violation(worst), objective=problem.objective(worst),
            eval_index=eval_index, origin=origin,
        )
    except EvaluationFailure as exc:
        return TrialRecord(
            point=point, per_corner=(), worst=None,
            violation=math.inf, objective=-math.inf,
            eval_index=eval_index, origin=origin, failure=exc.quantity,
        )


def init_db(problem: SizingProblem, cfg: OptConfig) -> Database:
    """Evaluate an LHS sample of the space and seed the database in sample
    order."""
    n = cfg.resolve_init_samples(problem.space.dim)
    db = Database()
    for i, point in enumerate(sample_initial(problem.space, n, cfg.seed)):
        db.insert(evaluate_record(problem, point, i, "initial"))
    return db


def de_generate(
    parents: list[DesignPoint], best: DesignPoint, cfg: OptConfig, rng: np.random.Generator
) -> np.ndarray:
    """current-to-best/1 mutation with binomial crossover; returns the raw
    child vector (pass through repair before evaluating)."""
    if len(parents) < 4:
        raise ValueError("need at least 4 distinct parents")
    i, r1, r2 = rng.choice(len(parents), size=3, replace=False)
    x_i, x_r1, x_r2 = parents[i], parents[r1], parents[r2]
    mutant = x_i + cfg.de_f * (best - x_i) + cfg.de_f * (x_r1 - x_r2)
    cross = rng.uniform(size=len(x_i)) < cfg.de_cr
    cross[rng.integers(len(x_i))] = True  # at least one mutant gene
    return np.where(cross, mutant, x_i)


def _constraint_senses(problem: SizingProblem) -> np.ndarray:
    """Pessimistic orientation per metric: upper quantile for upper-bounded
    metrics, lower for lower-bounded ones and the objective."""
    senses = -np.ones(len(METRIC_NAMES))
    by_name = {c.metric: c for c in problem.constraints}
    for k, name in enumerate(METRIC_NAMES):
        c = by_name.get(name)
        if c is not None and c.direction != GE:
            senses[k] = 1.0
    return senses


def training_row(rec: TrialRecord) -> np.ndarray | None:
    """Surrogate target vector for a record; None for failed evaluations."""
    if rec.worst is None or not rec.worst.is_finite():
        return None
    return np.array([getattr(rec.worst, name) for name in METRIC_NAMES])


def fit_surrogate(
    x_rows: list[np.ndarray], y_rows: list[np.ndarray], cfg: OptConfig, dim: int,
    seed: int, prev: EnsembleModel | None = None,
) -> EnsembleModel | None:
    """Refit on every successfully evaluated record in the database: a full
    training run the first time, warm-started continuation afterwards. None
    while there are not yet enough records to train on."""
    if len(x_rows) < 10:
        return None
    x = np.array(x_rows)
    y = np.array(y_rows)
    if prev is None:
        return fit(x, y, cfg.resolve_surrogate(dim), seed)
    return update(prev, x, y, cfg.refit_epochs, seed)


def select_candidate(
    children: list[DesignPoint],
    model: EnsembleModel | None,
    problem: SizingProblem,
    cfg: OptConfig,
    seen: set[bytes] | None = None,
) -> DesignPoint:
    """Score children with the conservative surrogate and return the one the
    feasibility-first ranking likes best (ties to the lowest index). With no
    model yet, the first child stands in.

    Children identical to an already-evaluated point carry no information, so
    the best not-yet-seen child wins when there is one (`seen` holds the raw
    bytes of evaluated points)."""
    if not children:
        raise ValueError("select_candidate needs at least one child")
    if model is None:
        return children[0]
    preds = predict_conservative(
        model, np.array(children), cfg.beta, senses=_constraint_senses(problem)
    )
    scores = []
    for idx, row in enumerate(preds):
        metrics = dict(zip(METRIC_NAMES, (float(v) for v in row)))
        obj, vio = metrics["fom"], problem.violation(metrics)
        scores.append(((0, -obj, idx) if vio == 0.0 else (1, vio, idx), idx))
    scores.sort()
    if seen:
        for _, idx in scores:
            if children[idx].tobytes() not in seen:
                return children[idx]
    return children[scores[0][1]]


@dataclass
class RunState:
    problem: SizingProblem
    cfg: OptConfig
    db: Database
    rng: np.random.Generator
    model: EnsembleModel | None = None
    stagnant_steps: int = 0
    stop_reason: str | None = None
    train_x: list[np.ndarray] = field(default_factory=list)
    train_y: list[np.ndarray] = field(default_factory=list)
    seen: set[bytes] = field(default_factory=set)

    @property
    def evals_used(self) -> int:
        return len(self.db.records)

    def absorb(self, rec: TrialRecord) -> None:
        self.seen.add(np.asarray(rec.point, dtype=float).tobytes())
        row = training_row(rec)
        if row is not None:
            self.train_x.append(np.asarray(rec.point, dtype=float))
            self.train_y.append(row)


def start(problem: SizingProblem, cfg: OptConfig) -> RunState:
    db = init_db(problem, cfg)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    state = RunState(problem=problem, cfg=cfg, db=db, rng=rng)
    for rec in db.records:
        state.absorb(rec)
    return state


def check_stop(state: RunState) -> bool:
    if state.evals_used >= state.cfg.eval_budget:
        state.stop_reason = "budget"
        return True
    if state.stagnant_steps >= state.cfg.no_improve_limit:
        state.stop_reason = "stagnation"
        return True
    return False


def step(state: RunState) -> bool:
    """One loop iteration: rank parents, breed children, prescreen, perform
    exactly one true evaluation, update the database. Returns the stop flag."""
    cfg, db, problem = state.cfg, state.db, state.problem
    parents = db.top_distinct_points(cfg.lambda_parents)
    best = db.incumbent.point
    while len(parents) < 4:  # tiny databases: pad with the incumbent
        parents.append(best)

    children = [
        repair(problem.space, de_generate(parents, best, cfg, state.rng))
        for _ in range(cfg.children_per_iter)
    ]
    fit_seed = int(np.random.SeedSequence([cfg.seed, 2, state.evals_used]).generate_state(1)[0])
    state.model = fit_surrogate(
        state.train_x, state.train_y, cfg, problem.space.dim, fit_seed, prev=state.model
    )
    chosen = select_candidate(children, state.model, problem, cfg, seen=state.seen)

    before = db.incumbent
    rec = evaluate_record(problem, chosen, state.evals_used, "de")
    db.insert(rec)
    state.absorb(rec)
    after = db.incumbent
    improved = (after.objective > before.objective + 1e-6) or (
        after.violation < before.violation
    )
    state.stagnant_steps = 0 if improved else state.stagnant_steps + 1
    return check_stop(state)


@dataclass
class RunResult:
    db: Database
    log_rows: list[dict]
    stop_reason: str
    evals_used: int

    @property
    def incumbent(self) -> TrialRecord:
        return self.db.incumbent


def _log_row(rec: TrialRecord, incumbent: TrialRecord) -> dict:
    row = {
        "eval_index": rec.eval_index,
        "origin": rec.origin,
        "objective": rec.objective,
        "violation": rec.violation,
        "incumbent_objective": incumbent.objective,
        "incumbent_violation": incumbent.violation,
    }
    for name in METRIC_NAMES:
        row[f"worst_{name}"] = getattr(rec.worst, name) if rec.worst else math.nan
    return row


def _init_log(records: list[TrialRecord]) -> list[dict]:
    """Per-record rows with the incumbent as it stood when each landed."""
    rows = []
    best = records[0]
    for rec in records:
        if compare_designs((rec.objective, rec.violation), (best.objective, best.violation)) > 0:
            best = rec
        rows.append(_log_row(rec, best))
    return rows


def run(problem: SizingProblem, cfg: OptConfig) -> RunResult:
    """Full optimization run; deterministic for a given (problem, cfg)."""
    state = start(problem, cfg)
    log_rows = _init_log(state.db.records)
    if check_stop(state):
        return RunResult(state.db, log_rows, state.stop_reason, state.evals_used)
    while True:
        stop = step(state)
        log_rows.append(_log_row(state.db.records[-1], state.db.incumbent))
        if stop:
            return RunResult(state.db, log_rows, state.stop_reason, state.evals_used)
