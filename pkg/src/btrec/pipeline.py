"""End-to-end glue: dataset -> split -> corpus -> sweep -> test report."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from . import baselines, corpus as corpus_mod, mlm
from .corpus import CorpusMode
from .evaluation import EvalCase, EvalReport, SplitAudit, make_case, sweep_epochs
from .ingest import (ColumnSpec, DatasetSplit, FLICKR_COLUMNS, Poi, Trajectory, UserProfile,
                     build_trajectories, filter_trajectories, parse_checkins, parse_pois,
                     parse_profiles, pois_from_checkins, split_dataset)
from .recommender import DurationTable, Recommender, dwell_samples, estimate_duration

log = logging.getLogger(__name__)

MLM_MODELS = {"btrec": CorpusMode.DEMOGRAPHIC, "ppoibert": CorpusMode.PERSONALIZED,
              "poibert-plain": CorpusMode.PLAIN}
ALL_MODELS = (*MLM_MODELS, *baselines.BASELINES)
DEFAULT_GRID = (1, 2, 5, 10, 20, 35, 50, 75, 100)


@dataclass(frozen=True)
class Dataset:
    pois: dict[int, Poi]
    profiles: dict[str, UserProfile]
    trajectories: list[Trajectory]

    def by_id(self) -> dict:
        return {t.traj_id: t for t in self.trajectories}


@dataclass(frozen=True)
class ExperimentConfig:
    max_len: int = 128
    d_model: int = 64
    n_heads: int = 2
    n_layers: int = 2
    d_ff: int = 128
    dropout_rate: float = 0.1
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 30
    mask_rate: float = 0.15
    optimizer: str = "adam"
    fractions: tuple[float, float, float] = (0.70, 0.20, 0.10)
    epoch_grid: tuple[int, ...] = DEFAULT_GRID
    bootstrap_resamples: int = 1000
    bootstrap_level: float = 0.80
    min_pois: int = 3
    seed: int = 0

    def model_config(self, vocab_size: int, **overrides) -> mlm.ModelConfig:
        kw = dict(vocab_size=vocab_size, max_len=self.max_len, d_model=self.d_model,
                  n_heads=self.n_heads, n_layers=self.n_layers, d_ff=self.d_ff,
                  dropout_rate=self.dropout_rate, learning_rate=self.learning_rate,
                  batch_size=self.batch_size, epochs=self.epochs, seed=self.seed,
                  mask_rate=self.mask_rate, optimizer=self.optimizer)
        kw.update(overrides)
        return mlm.ModelConfig(**kw)


def load_dataset(checkins_path, pois_path=None, profiles_path=None,
                 columns: ColumnSpec = FLICKR_COLUMNS, min_pois: int = 3,
                 max_bad_fraction: float = 0.10) -> Dataset:
    with open(checkins_path, encoding="utf-8", newline="") as fh:
        checkins = parse_checkins(fh, columns, max_bad_fraction)
    if pois_path:
        with open(pois_path, encoding="utf-8", newline="") as fh:
            pois = parse_pois(fh)
    else:
        pois = pois_from_checkins(checkins)
    profiles = {}
    if profiles_path:
        with open(profiles_path, encoding="utf-8", newline="") as fh:
            profiles = parse_profiles(fh)
    trajs = filter_trajectories(build_trajectories(checkins, pois), min_pois)
    return Dataset(pois, profiles, trajs)


def dataset_from_world(world, min_pois: int = 3) -> Dataset:
    trajs = filter_trajectories(build_trajectories(world.checkins, world.pois), min_pois)
    return Dataset(dict(world.pois), dict(world.profiles), trajs)


@dataclass
class Prepared:
    """One dataset split into the pieces every model needs."""
    dataset: Dataset
    split: DatasetSplit
    train: list[Trajectory]
    validation: list[Trajectory]
    test: list[Trajectory]
    durations: DurationTable
    cfg: ExperimentConfig

    def cases(self, part: str) -> list[EvalCase]:
        return [make_case(t) for t in getattr(self, part)]

    @property
    def train_users(self) -> list[str]:
        return sorted({t.user_id for t in self.train})


def prepare(dataset: Dataset, cfg: ExperimentConfig, split: Optional[DatasetSplit] = None) -> Prepared:
    split = split or split_dataset(dataset.trajectories, cfg.fractions)
    parts = {name: split.select(dataset.trajectories, name)
             for name in ("train", "validation", "test")}
    durations = estimate_duration(dwell_samples(parts["train"]), cfg.bootstrap_resamples,
                                  cfg.bootstrap_level, cfg.seed, pois=dataset.pois)
    return Prepared(dataset, split, parts["train"], parts["validation"], parts["test"],
                    durations, cfg)


def build_training_corpus(prep: Prepared, mode: CorpusMode):
    ds = prep.dataset
    vocab = corpus_mod.build_vocab(prep.train, ds.pois, ds.profiles, mode)
    sentences = corpus_mod.build_corpus(prep.train, ds.profiles, ds.pois, mode, vocab,
                                        prep.cfg.max_len)
    return vocab, sentences


def make_recommender(prep: Prepared, params: mlm.ModelParams, vocab, faithful_loop=False) -> Recommender:
    return Recommender(params, vocab, prep.dataset.pois, prep.dataset.profiles, prep.durations,
                       vocab.users, faithful_loop)


def sweep_mlm(prep: Prepared, mode: CorpusMode, grid: Optional[Sequence[int]] = None):
    vocab, sentences = build_training_corpus(prep, mode)
    params = mlm.init_model(prep.cfg.model_config(len(vocab)))
    trainer = mlm.Trainer(params, sentences, vocab)
    result = sweep_epochs(trainer, prep.cases("validation"), grid or prep.cfg.epoch_grid,
                          lambda p: make_recommender(prep, p, vocab))
    log.info("%s sweep: %s -> %d epochs", mode.value, result.trace, result.best_epochs)
    return vocab, result


def train_mlm(prep: Prepared, mode: CorpusMode, epochs: Optional[int] = None):
    vocab, sentences = build_training_corpus(prep, mode)
    params = mlm.init_model(prep.cfg.model_config(len(vocab)))
    trained, trace = mlm.train(params, sentences, vocab, epochs)
    return vocab, trained, trace


def baseline_predictor(prep: Prepared, name: str) -> baselines.BaselinePredictor:
    model = baselines.BASELINES[name]().train([t.pois for t in prep.train])
    return baselines.BaselinePredictor(model, prep.durations, prep.dataset.pois)


def benchmark(prep: Prepared, models: Sequence[str] = ALL_MODELS,
              audit: Optional[SplitAudit] = None) -> dict[str, EvalReport]:
    """Sweep every MLM variant on validation, then score each model once on test."""
    audit = audit or SplitAudit()
    reports = {}
    test_cases = prep.cases("test")
    for name in models:
        if name in MLM_MODELS:
            vocab, sweep = sweep_mlm(prep, MLM_MODELS[name])
            predictor = make_recommender(prep, sweep.best_params, vocab)
        else:
            predictor = baseline_predictor(prep, name)
        reports[name] = audit.evaluate_test(predictor, test_cases, name)
    return reports
