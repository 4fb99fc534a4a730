import pytest

from btrec import mlm
from btrec.corpus import CorpusMode, build_corpus, build_vocab
from btrec.ingest import Poi, PoiVisit, Trajectory, UserProfile
from btrec.pipeline import ExperimentConfig, dataset_from_world, prepare
from btrec.synthgen import SynthConfig, generate_world


def make_traj(user, seq, pois, start=0, dwell=100, gap=100):
    visits, t = [], start
    for p in pois:
        visits.append(PoiVisit(p, t, t + dwell))
        t += dwell + gap
    return Trajectory(user, seq, tuple(visits))


@pytest.fixture(scope="session")
def two_group_toy():
    """Group A always tours 1 -> 2 -> 3, group B always 1 -> 4 -> 3."""
    pois = {1: Poi(1, "p1", "Park"), 2: Poi(2, "p2", "Museum"),
            3: Poi(3, "p3", "Park"), 4: Poi(4, "p4", "Beach")}
    profiles = {}
    trajs = []
    for g, (home, mid) in enumerate((("CityA", 2), ("CityB", 4))):
        for i in range(5):
            user = f"{'ab'[g]}{i}"
            profiles[user] = UserProfile(user, home)
            for s in range(8):
                trajs.append(make_traj(user, s, [1, mid, 3], start=s * 10_000))
    mode = CorpusMode.DEMOGRAPHIC
    vocab = build_vocab(trajs, pois, profiles, mode)
    sentences = build_corpus(trajs, profiles, pois, mode, vocab)
    cfg = mlm.ModelConfig(vocab_size=len(vocab), max_len=32, d_model=32, n_heads=2,
                          n_layers=1, d_ff=64, dropout_rate=0.0, epochs=40, seed=5,
                          mask_rate=0.3, batch_size=16)
    params, trace = mlm.train(mlm.init_model(cfg), sentences, vocab)
    return dict(pois=pois, profiles=profiles, trajs=trajs, vocab=vocab, params=params,
                trace=trace, sentences=sentences)


@pytest.fixture(scope="session")
def small_world_model():
    """A demographic model trained briefly on a small synthetic world."""
    world = generate_world(SynthConfig(n_pois=12, n_categories=4, n_users=10, n_user_groups=2,
                                       trajs_per_user=6, traj_len_range=(3, 5),
                                       disjoint_groups=True, seed=3))
    ds = dataset_from_world(world)
    cfg = ExperimentConfig(d_model=16, d_ff=32, n_layers=1, epochs=8, seed=3, max_len=64,
                           bootstrap_resamples=200)
    prep = prepare(ds, cfg)
    mode = CorpusMode.DEMOGRAPHIC
    vocab = build_vocab(prep.train, ds.pois, ds.profiles, mode)
    sentences = build_corpus(prep.train, ds.profiles, ds.pois, mode, vocab, cfg.max_len)
    params, _ = mlm.train(mlm.init_model(cfg.model_config(len(vocab))), sentences, vocab)
    return dict(prep=prep, vocab=vocab, params=params, dataset=ds)


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one acceptance line, echo it immediately, then assert it."""
    lines = request.config.stash.setdefault(_VERDICTS, [])
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        with capman.global_and_fixture_disabled():
            print("\n" + line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
