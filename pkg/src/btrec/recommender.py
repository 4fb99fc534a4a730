"""Itinerary decoding with a trained MLM: pick a reference user, then keep
inserting the best-scoring POI into the best gap until the time budget is spent."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .corpus import CorpusMode, Vocab, encode_route
from .ingest import Poi, Trajectory, UserProfile
from .mlm import ModelParams, mask_log_probs

DEFAULT_FALLBACK = 1800.0


class NoCandidatePois(ValueError):
    pass


@dataclass(frozen=True)
class DurationTable:
    samples: dict[int, tuple[float, ...]]
    estimates: dict[int, float]
    fallback: float

    def __call__(self, poi_id: int) -> float:
        return self.estimates.get(poi_id, self.fallback)


def dwell_samples(trajs: Iterable[Trajectory]) -> dict[int, list[float]]:
    out: dict[int, list[float]] = {}
    for t in trajs:
        for v in t.visits:
            out.setdefault(v.poi_id, []).append(float(v.dwell))
    return out


def bootstrap_mean_quantile(values: Sequence[float], resamples: int, level: float,
                            rng: np.random.Generator) -> float:
    arr = np.asarray(values, dtype=np.float64)
    idx = rng.integers(0, len(arr), size=(resamples, len(arr)))
    return float(np.quantile(arr[idx].mean(axis=1), level))


def estimate_duration(samples: Mapping[int, Sequence[float]], resamples: int = 1000,
                      level: float = 0.80, seed: int = 0, pois: Iterable[int] = (),
                      min_estimate: float = 60.0) -> DurationTable:
    """Per-POI visit duration: the ``level`` quantile of the bootstrap
    distribution of the mean dwell.

    POIs are processed in ascending id order from one generator seeded with
    ``seed``.  POIs with fewer than two samples get the dataset-wide median
    dwell (1800 s if there are no samples at all).  Estimates are floored at
    ``min_estimate`` seconds so zero-dwell single-photo visits stay positive.
    """
    if resamples < 1 or not 0 < level < 1:
        raise ValueError("need resamples >= 1 and 0 < level < 1")
    rng = np.random.default_rng(seed)
    pooled = [float(x) for vals in samples.values() for x in vals]
    fallback = float(np.median(pooled)) if pooled else DEFAULT_FALLBACK
    fallback = max(fallback, min_estimate)
    estimates = {}
    for poi in sorted(set(samples) | set(pois)):
        vals = samples.get(poi, ())
        if len(vals) >= 2:
            est = bootstrap_mean_quantile(vals, resamples, level, rng)
            estimates[poi] = max(est, min_estimate)
        else:
            estimates[poi] = fallback
    frozen = {p: tuple(float(x) for x in v) for p, v in sorted(samples.items())}
    return DurationTable(frozen, estimates, fallback)


@dataclass(frozen=True)
class ItineraryQuery:
    source_poi: int
    dest_poi: int
    time_budget: float
    known_user: Optional[str] = None

    def __post_init__(self):
        if self.time_budget < 0:
            raise ValueError("time_budget must be >= 0")


@dataclass(frozen=True)
class Itinerary:
    pois: tuple[int, ...]
    durations: tuple[float, ...]
    reference_user: Optional[str] = None
    unmask_call_count: int = 0

    @property
    def total_duration(self) -> float:
        return float(sum(self.durations))

    def to_record(self, query: ItineraryQuery, model: str = "") -> dict:
        return {
            "model": model,
            "source_poi": query.source_poi,
            "dest_poi": query.dest_poi,
            "time_budget_min": round(query.time_budget / 60.0, 3),
            "known_user": query.known_user,
            "reference_user": self.reference_user,
            "pois": [{"poi_id": p, "est_minutes": round(d / 60.0, 3)}
                     for p, d in zip(self.pois, self.durations)],
            "total_est_minutes": round(self.total_duration / 60.0, 3),
            "unmask_call_count": self.unmask_call_count,
        }


@dataclass(frozen=True)
class Insertion:
    gap: int        # insert before seq[gap]
    poi_id: int
    score: float


@dataclass
class _Calls:
    n: int = 0


class Recommender:
    """Read-only bundle of everything decoding needs; safe to share."""

    def __init__(self, model: ModelParams, vocab: Vocab, pois: Mapping[int, Poi],
                 profiles: Mapping[str, UserProfile], durations: DurationTable,
                 users: Optional[Sequence[str]] = None, faithful_loop: bool = False):
        self.model = model
        self.vocab = vocab
        self.mode = vocab.mode
        self.pois = pois
        self.profiles = profiles
        self.durations = durations
        self.users = sorted(users) if users is not None else vocab.users
        self.faithful_loop = faithful_loop
        self._poi_tok = {p: vocab.poi_token_id(p) for p in vocab.pois}

    def _query(self, route: Sequence[Optional[int]], user: Optional[str]) -> list[int]:
        return encode_route(route, user, self.vocab, self.mode, self.pois, self.profiles)

    def _block_len(self) -> int:
        return self.mode.block_size

    # -- reference user ---------------------------------------------------
    def select_reference_user(self, query: ItineraryQuery, calls: Optional[_Calls] = None
                              ) -> Optional[str]:
        calls = calls if calls is not None else _Calls()
        if self.mode is CorpusMode.PLAIN:
            return None
        if not self.users:
            raise ValueError("no training users to choose from")
        if query.known_user is not None and query.known_user in self.users:
            return query.known_user
        cands = [self._poi_tok[p] for p in self._poi_tok
                 if p not in (query.source_poi, query.dest_poi)]
        if not cands:
            raise NoCandidatePois("vocabulary has no POI besides the endpoints")
        queries = [self._query([query.source_poi, None, query.dest_poi], u) for u in self.users]
        logp = mask_log_probs(self.model, queries)
        calls.n += len(queries)
        best = logp[:, cands].max(axis=1)
        # users are sorted, argmax keeps the first maximum
        return self.users[int(np.argmax(best))]

    # -- one insertion ----------------------------------------------------
    def insertion_step(self, seq: Sequence[int], ref_user: Optional[str],
                       candidates: Optional[Iterable[int]] = None,
                       calls: Optional[_Calls] = None) -> Optional[Insertion]:
        """Best (gap, POI) over every gap of ``seq`` and every candidate POI.

        ``candidates`` defaults to all vocabulary POIs not already in ``seq``.
        Ties go to the smaller gap, then the smaller POI id.
        """
        calls = calls if calls is not None else _Calls()
        if len(seq) < 2:
            raise ValueError("sequence needs both endpoints")
        present = set(seq)
        pool = self._poi_tok if candidates is None else candidates
        cand = sorted(p for p in pool if p not in present and p in self._poi_tok)
        if not cand:
            return None
        if 2 + self._block_len() * (len(seq) + 1) > self.model.cfg.max_len:
            return None
        queries = [self._query(list(seq[:g]) + [None] + list(seq[g:]), ref_user)
                   for g in range(1, len(seq))]
        logp = mask_log_probs(self.model, queries)
        calls.n += len(queries)
        scores = logp[:, [self._poi_tok[p] for p in cand]]
        flat = int(np.argmax(scores))
        g, c = divmod(flat, len(cand))
        return Insertion(g + 1, cand[c], float(scores[g, c]))

    # -- full itinerary -----------------------------------------------------
    def recommend(self, query: ItineraryQuery) -> Itinerary:
        calls = _Calls()
        dur = self.durations
        try:
            ref = self.select_reference_user(query, calls)
        except NoCandidatePois:
            ref = None
        seq = [query.source_poi, query.dest_poi]
        budget = query.time_budget
        while True:
            total = sum(dur(p) for p in seq)
            if self.faithful_loop:
                step = self.insertion_step(seq, ref, calls=calls)
                if step is None:
                    break
                seq.insert(step.gap, step.poi_id)
                if budget < total + dur(step.poi_id):
                    break
                continue
            fits = [p for p in self._poi_tok if p not in seq and total + dur(p) <= budget]
            if not fits:
                break
            step = self.insertion_step(seq, ref, fits, calls)
            if step is None:
                break
            seq.insert(step.gap, step.poi_id)
        return Itinerary(tuple(seq), tuple(dur(p) for p in seq), ref, calls.n)

    __call__ = recommend


def select_reference_user(model, vocab, query, users, profiles, pois) -> Optional[str]:
    rec = Recommender(model, vocab, pois, profiles, estimate_duration({}), users)
    return rec.select_reference_user(query)


def insertion_step(model, vocab, seq, ref_user, profiles, pois) -> Optional[Insertion]:
    rec = Recommender(model, vocab, pois, profiles, estimate_duration({}))
    return rec.insertion_step(seq, ref_user)


def recommend_itinerary(model, vocab, query, durations, profiles, users, pois,
                        faithful_loop: bool = False) -> Itinerary:
    return Recommender(model, vocab, pois, profiles, durations, users, faithful_loop)(query)
