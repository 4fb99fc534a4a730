"""Query construction from held-out trajectories, set-based precision/recall/F1,
and epoch selection on the validation split."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TextIO

from .ingest import TrajId, Trajectory, format_traj_id
from .recommender import Itinerary, ItineraryQuery

Predictor = Callable[[ItineraryQuery], Itinerary]


class EmptyTruth(ValueError):
    pass


class EvalError(RuntimeError):
    def __init__(self, traj_id: TrajId, cause: BaseException):
        super().__init__(f"prediction failed for trajectory {format_traj_id(traj_id)}: {cause!r}")
        self.traj_id = traj_id


class TestSplitReused(RuntimeError):
    pass


@dataclass(frozen=True)
class EvalCase:
    traj_id: TrajId
    query: ItineraryQuery
    truth: frozenset[int]


@dataclass(frozen=True)
class CaseResult:
    traj_id: TrajId
    predicted: tuple[int, ...]
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    model: str
    split: str
    cases: tuple[CaseResult, ...]
    avg_precision: float
    avg_recall: float
    avg_f1: float

    @property
    def n_cases(self) -> int:
        return len(self.cases)

    def summary(self) -> dict:
        return {"model": self.model, "split": self.split,
                "avg_precision": self.avg_precision, "avg_recall": self.avg_recall,
                "avg_f1": self.avg_f1, "n_cases": self.n_cases}

    def write_jsonl(self, out: TextIO) -> None:
        for c in self.cases:
            out.write(json.dumps({"traj_id": format_traj_id(c.traj_id),
                                  "predicted": list(c.predicted), "precision": c.precision,
                                  "recall": c.recall, "f1": c.f1}, sort_keys=True) + "\n")
        out.write(json.dumps({"summary": self.summary()}, sort_keys=True) + "\n")


CSV_COLUMNS = ("model", "split", "avg_precision", "avg_recall", "avg_f1", "n_cases")


def write_summary_csv(reports: Iterable[EvalReport], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        s = r.summary()
        w.writerow([s["model"], s["split"], f"{s['avg_precision']:.6f}",
                    f"{s['avg_recall']:.6f}", f"{s['avg_f1']:.6f}", s["n_cases"]])


def make_case(traj: Trajectory, with_user: bool = True) -> EvalCase:
    """Endpoints of the trajectory become the query; its first-to-last photo
    interval becomes the budget; its POI set is the ground truth."""
    if len(traj.visits) < 3:
        raise ValueError(f"trajectory {traj.traj_id} has fewer than 3 POIs; filter first")
    query = ItineraryQuery(traj.visits[0].poi_id, traj.visits[-1].poi_id,
                           float(traj.end_time - traj.start_time),
                           traj.user_id if with_user else None)
    return EvalCase(traj.traj_id, query, frozenset(traj.pois))


def set_metrics(predicted: Iterable[int], truth: Iterable[int]) -> tuple[float, float, float]:
    predicted, truth = set(predicted), set(truth)
    if not truth:
        raise EmptyTruth("ground truth is empty")
    if not predicted:
        raise ValueError("prediction is empty")
    hit = len(predicted & truth)
    p = hit / len(predicted)
    r = hit / len(truth)
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs)


def evaluate(predictor: Predictor, cases: Iterable[EvalCase], model: str = "",
             split: str = "") -> EvalReport:
    """Macro-averaged precision / recall / F1 over the cases (ordered by traj_id)."""
    cases = sorted(cases, key=lambda c: c.traj_id)
    if not cases:
        raise ValueError("no evaluation cases")
    results = []
    for case in cases:
        try:
            itin = predictor(case.query)
        except Exception as exc:
            raise EvalError(case.traj_id, exc) from exc
        p, r, f = set_metrics(itin.pois, case.truth)
        results.append(CaseResult(case.traj_id, tuple(itin.pois), p, r, f))
    return EvalReport(model, split, tuple(results), _mean([c.precision for c in results]),
                      _mean([c.recall for c in results]), _mean([c.f1 for c in results]))


@dataclass
class SplitAudit:
    """Refuses to score the same model on the test split twice."""
    touched: list[str] = field(default_factory=list)

    def evaluate_test(self, predictor: Predictor, cases: Iterable[EvalCase], model: str) -> EvalReport:
        if model in self.touched:
            raise TestSplitReused(f"test split already used for {model!r}")
        self.touched.append(model)
        return evaluate(predictor, cases, model, "test")

    def log_lines(self) -> list[str]:
        return [f"test\t{m}" for m in self.touched]


@dataclass(frozen=True)
class SweepResult:
    best_epochs: int
    best_params: object
    trace: tuple[tuple[int, float], ...]     # (epochs, validation avg F1)
    loss_trace: tuple[float, ...] = ()


def sweep_epochs(trainer, cases_val: Sequence[EvalCase], grid: Sequence[int],
                 make_predictor: Callable[[object], Predictor]) -> SweepResult:
    """Train incrementally up to each grid point and keep the model with the
    best validation F1 (ties go to fewer epochs).

    ``trainer`` is an :class:`btrec.mlm.Trainer`; ``make_predictor`` turns a
    parameter snapshot into a query -> itinerary callable.
    """
    grid = list(grid)
    if not grid or grid != sorted(set(grid)) or grid[0] < trainer.epoch:
        raise ValueError("epoch grid must be non-empty and strictly ascending")
    best = None
    trace = []
    for target in grid:
        trainer.run(target - trainer.epoch)
        snapshot = trainer.params.copy()
        f1 = evaluate(make_predictor(snapshot), cases_val).avg_f1
        trace.append((target, f1))
        if best is None or f1 > best[1]:
            best = (target, f1, snapshot)
    return SweepResult(best[0], best[2], tuple(trace), tuple(trainer.trace))
