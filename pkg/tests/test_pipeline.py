from dataclasses import replace

from btrec import mlm
from btrec.corpus import CorpusMode
from btrec.evaluation import evaluate
from btrec.pipeline import (ExperimentConfig, baseline_predictor, benchmark, build_training_corpus,
                            dataset_from_world, make_recommender, prepare, sweep_mlm)
from btrec.synthgen import SynthConfig, generate_world

GRID = (1, 5, 10, 20, 40, 70, 100)


def _prep():
    world = generate_world(SynthConfig(n_pois=12, n_categories=4, n_users=8, trajs_per_user=5,
                                       traj_len_range=(3, 5), disjoint_groups=True, seed=5))
    cfg = ExperimentConfig(d_model=8, d_ff=16, n_layers=1, max_len=64, batch_size=16,
                           bootstrap_resamples=100, epoch_grid=GRID, seed=5)
    return prepare(dataset_from_world(world), cfg)


def test_incremental_sweep_matches_restart_oracle():
    prep = _prep()
    mode = CorpusMode.DEMOGRAPHIC
    vocab, result = sweep_mlm(prep, mode)
    _, sentences = build_training_corpus(prep, mode)
    cases = prep.cases("validation")
    restart = []
    for epochs in GRID:
        params, _ = mlm.train(mlm.init_model(prep.cfg.model_config(len(vocab))), sentences, vocab,
                              epochs)
        restart.append((epochs, evaluate(make_recommender(prep, params, vocab), cases).avg_f1,
                        params.digest()))
    best = max(restart, key=lambda r: (r[1], -r[0]))
    assert result.trace == tuple((e, f) for e, f, _ in restart)
    assert result.best_epochs == best[0]
    assert result.best_params.digest() == best[2]


def test_benchmark_touches_test_once_per_model():
    prep = _prep()
    prep.cfg = replace(prep.cfg, epoch_grid=(1, 2))
    reports = benchmark(prep, ["poibert-plain", "markov"])
    assert set(reports) == {"poibert-plain", "markov"}
    for rep in reports.values():
        assert rep.split == "test" and rep.n_cases == len(prep.test)
    direct = evaluate(baseline_predictor(prep, "markov"), prep.cases("test"), "markov", "test")
    assert direct == reports["markov"]
