"""Command-line entry point: ``btrec <command> [flags]``.

Commands: synth, ingest, split, train, sweep, recommend, evaluate, bench.
Every command writes a ``manifest.txt`` next to its outputs.  Failures print
one line ``btrec: error=<Kind> message=<text>`` to stderr and exit with 2
(usage), 3 (data) or 1 (internal).
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

from . import __version__, corpus as corpus_mod, mlm
from .evaluation import SplitAudit, TestSplitReused, evaluate, sweep_epochs, write_summary_csv
from .ingest import (IngestError, format_traj_id, read_split_manifest, split_dataset,
                     write_checkins, write_pois, write_profiles, write_split_manifest)
from .pipeline import (ALL_MODELS, MLM_MODELS, Dataset, ExperimentConfig, baseline_predictor,
                       benchmark, build_training_corpus, load_dataset, make_recommender, prepare)
from .recommender import ItineraryQuery
from .synthgen import InfeasibleConfig, SynthConfig, generate_world

log = logging.getLogger("btrec")


class UsageError(Exception):
    exit_code = 2


class DataError(Exception):
    exit_code = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# configuration

_EXPERIMENT_KEYS = {f.name: f for f in fields(ExperimentConfig)}
_SYNTH_KEYS = {f.name: f for f in fields(SynthConfig)}


def _coerce(value: str, default):
    if isinstance(default, bool):
        return value.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    if isinstance(default, tuple):
        kind = type(default[0]) if default else int
        return tuple(kind(v) for v in value.replace(",", " ").split())
    return value.strip()


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` pairs from an INI-style file; sections only group keys."""
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror}") from exc
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc}") from exc
    out = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            out[key.replace("-", "_")] = value
    return out


def _settings(args) -> dict[str, str]:
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in ("seed", "mode", "epochs", "grid", "checkins", "pois", "profiles", "data",
                "split_file"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = str(flag)
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        values[k.strip().replace("-", "_")] = v
    if "seed" not in values:
        raise UsageError("a seed is required (--seed or seed= in the config file)")
    if "grid" in values:
        values["epoch_grid"] = values.pop("grid")
    return values


def experiment_config(values: dict[str, str]) -> ExperimentConfig:
    kw = {}
    for key, f in _EXPERIMENT_KEYS.items():
        if key in values:
            try:
                kw[key] = _coerce(values[key], f.default)
            except ValueError as exc:
                raise UsageError(f"bad value for {key}: {values[key]!r}") from exc
    try:
        return ExperimentConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def synth_config(values: dict[str, str]) -> SynthConfig:
    kw = {}
    for key, f in _SYNTH_KEYS.items():
        if key in values:
            default = f.default
            try:
                kw[key] = _coerce(values[key], default)
            except ValueError as exc:
                raise UsageError(f"bad value for {key}: {values[key]!r}") from exc
    return SynthConfig(**kw)


# ---------------------------------------------------------------------------
# files and manifests

def _digest_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _input_paths(values: dict[str, str]) -> dict[str, Path]:
    data = Path(values["data"]) if values.get("data") else None
    paths = {}
    for key, default_name in (("checkins", "checkins.csv"), ("pois", "pois.csv"),
                              ("profiles", "profiles.csv")):
        if values.get(key):
            paths[key] = Path(values[key])
        elif data is not None and (data / default_name).exists():
            paths[key] = data / default_name
        elif data is not None and key == "checkins":
            paths[key] = data / default_name
    if "checkins" not in paths:
        raise UsageError("no check-in file given (--data DIR or --checkins FILE)")
    for key, p in paths.items():
        if not p.is_file():
            raise DataError(f"missing input file {p}")
    return paths


def _load(values) -> tuple[Dataset, dict[str, Path]]:
    paths = _input_paths(values)
    cfg = experiment_config(values)
    try:
        ds = load_dataset(paths["checkins"], paths.get("pois"), paths.get("profiles"),
                          min_pois=cfg.min_pois)
    except (IngestError, ValueError) as exc:
        raise DataError(f"{type(exc).__name__}: {exc}") from exc
    if not ds.trajectories:
        raise DataError("no trajectories survive filtering")
    return ds, paths


def write_manifest(out: Path, command: str, values: dict[str, str], inputs: dict[str, Path],
                   outputs: list[str]) -> None:
    cfg_blob = json.dumps(values, sort_keys=True).encode()
    lines = [f"command\t{command}", f"tool_version\t{__version__}",
             f"seed\t{values.get('seed')}",
             f"config_sha256\t{hashlib.sha256(cfg_blob).hexdigest()}"]
    for key in sorted(inputs):
        lines.append(f"input\t{key}\t{inputs[key].name}\t{_digest_file(inputs[key])}")
    for name in sorted(outputs):
        lines.append(f"output\t{name}\t{_digest_file(out / name)}")
    # one block per command, so commands sharing an --out keep each other's records
    path = out / "manifest.txt"
    blocks = {}
    if path.exists():
        for block in path.read_text(encoding="utf-8").split("\n\n"):
            if block.strip():
                blocks[block.splitlines()[0]] = block.strip("\n")
    blocks[lines[0]] = "\n".join(lines)
    path.write_text("\n\n".join(blocks[k] for k in sorted(blocks)) + "\n", encoding="utf-8")


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_split(out: Path, values, ds: Dataset):
    path = Path(values["split_file"]) if values.get("split_file") else out / "split.tsv"
    if not path.is_file():
        raise DataError(f"missing split file {path} (run `btrec split` first)")
    with open(path, encoding="utf-8") as fh:
        split = read_split_manifest(fh)
    known = {t.traj_id for t in ds.trajectories}
    listed = set(split.train) | set(split.validation) | set(split.test)
    if listed != known:
        raise DataError(f"split file {path} does not match the dataset")
    return split, path


def _model_name(values, default="btrec") -> str:
    name = values.get("mode", default)
    if name not in ALL_MODELS:
        raise UsageError(f"unknown model {name!r}; choose from {', '.join(ALL_MODELS)}")
    return name


# ---------------------------------------------------------------------------
# commands

def cmd_synth(args, values):
    out = _outdir(args)
    try:
        world = generate_world(synth_config(values))
    except InfeasibleConfig as exc:
        raise UsageError(f"InfeasibleConfig: {exc}") from exc
    with open(out / "checkins.csv", "w", encoding="utf-8", newline="") as fh:
        write_checkins(world.checkins, fh)
    with open(out / "pois.csv", "w", encoding="utf-8", newline="") as fh:
        write_pois(world.pois, fh)
    with open(out / "profiles.csv", "w", encoding="utf-8", newline="") as fh:
        write_profiles(world.profiles, fh)
    write_manifest(out, "synth", values, {}, ["checkins.csv", "pois.csv", "profiles.csv"])


def cmd_ingest(args, values):
    out = _outdir(args)
    ds, paths = _load(values)
    with open(out / "trajectories.tsv", "w", encoding="utf-8") as fh:
        fh.write("traj_id\tuser_id\tstart\tend\tpois\n")
        for t in ds.trajectories:
            fh.write(f"{format_traj_id(t.traj_id)}\t{t.user_id}\t{t.start_time}\t{t.end_time}\t"
                     + ",".join(map(str, t.pois)) + "\n")
    write_manifest(out, "ingest", values, paths, ["trajectories.tsv"])
    print(f"{len(ds.trajectories)} trajectories, {len(ds.pois)} POIs, "
          f"{len({t.user_id for t in ds.trajectories})} users")


def cmd_split(args, values):
    out = _outdir(args)
    ds, paths = _load(values)
    cfg = experiment_config(values)
    split = split_dataset(ds.trajectories, cfg.fractions)
    with open(out / "split.tsv", "w", encoding="utf-8") as fh:
        write_split_manifest(split, fh)
    write_manifest(out, "split", values, paths, ["split.tsv"])
    print("train/validation/test = %d/%d/%d" % split.sizes())


def _write_corpus_files(out: Path, vocab, sentences):
    with open(out / "corpus.txt", "w", encoding="utf-8") as fh:
        corpus_mod.write_corpus(sentences, vocab, fh)
    with open(out / "vocab.tsv", "w", encoding="utf-8") as fh:
        vocab.write(fh)


def _train_like(args, values, sweep: bool):
    out = _outdir(args)
    ds, paths = _load(values)
    split, split_path = _load_split(out, values, ds)
    paths["split"] = split_path
    cfg = experiment_config(values)
    name = _model_name(values)
    if name not in MLM_MODELS:
        raise UsageError(f"{name} is not a trainable MLM model")
    prep = prepare(ds, cfg, split)
    vocab, sentences = build_training_corpus(prep, MLM_MODELS[name])
    _write_corpus_files(out, vocab, sentences)
    params = mlm.init_model(cfg.model_config(len(vocab)))
    trainer = mlm.Trainer(params, sentences, vocab)
    outputs = ["corpus.txt", "vocab.tsv", "model.bin", "loss.tsv"]
    if sweep:
        result = sweep_epochs(trainer, prep.cases("validation"), cfg.epoch_grid,
                              lambda p: make_recommender(prep, p, vocab))
        best = result.best_params
        final = mlm.ModelParams(replace(best.cfg, epochs=result.best_epochs), best.tensors)
        with open(out / "sweep.tsv", "w", encoding="utf-8") as fh:
            fh.write("epochs\tval_avg_f1\n")
            for e, f1 in result.trace:
                fh.write(f"{e}\t{f1:.6f}\n")
        outputs.append("sweep.tsv")
        print(f"selected {result.best_epochs} epochs")
        trace = list(result.loss_trace)
    else:
        trace = trainer.run(cfg.epochs)
        final = trainer.params
    mlm.save_model(final, vocab, out / "model.bin")
    with open(out / "loss.tsv", "w", encoding="utf-8") as fh:
        fh.write("epoch\tloss\n")
        for i, loss in enumerate(trace, 1):
            fh.write(f"{i}\t{loss:.6f}\n")
    write_manifest(out, "sweep" if sweep else "train", values, paths, outputs)


def cmd_train(args, values):
    _train_like(args, values, sweep=False)


def cmd_sweep(args, values):
    _train_like(args, values, sweep=True)


def _load_model_file(path: Path):
    if not path.is_file():
        raise DataError(f"missing model file {path} (run `btrec train` first)")
    try:
        return mlm.load_model(path)
    except mlm.ModelFileError as exc:
        raise DataError(f"{type(exc).__name__}: {exc}") from exc


def cmd_recommend(args, values):
    out = Path(args.out)
    ds, _ = _load(values)
    split, _ = _load_split(out, values, ds)
    cfg = experiment_config(values)
    prep = prepare(ds, cfg, split)
    model_path = Path(args.model_file) if args.model_file else out / "model.bin"
    params, vocab = _load_model_file(model_path)
    for p in (args.src, args.dst):
        if p not in ds.pois:
            raise DataError(f"unknown POI {p}")
    query = ItineraryQuery(args.src, args.dst, args.budget_min * 60.0, args.user)
    rec = make_recommender(prep, params, vocab, faithful_loop=args.faithful_loop)
    itin = rec(query)
    print(json.dumps(itin.to_record(query, vocab.mode.value), sort_keys=True))


def cmd_evaluate(args, values):
    out = _outdir(args)
    ds, paths = _load(values)
    split, split_path = _load_split(out, values, ds)
    paths["split"] = split_path
    cfg = experiment_config(values)
    name = _model_name(values)
    prep = prepare(ds, cfg, split)
    if name in MLM_MODELS:
        model_path = Path(args.model_file) if args.model_file else out / "model.bin"
        params, vocab = _load_model_file(model_path)
        paths["model"] = model_path
        predictor = make_recommender(prep, params, vocab, faithful_loop=args.faithful_loop)
    else:
        predictor = baseline_predictor(prep, name)
    part = args.split
    cases = prep.cases(part)
    if not cases:
        raise DataError(f"the {part} split is empty")
    audit_path = out / "audit.tsv"
    if part == "test":
        seen = audit_path.read_text(encoding="utf-8").splitlines() if audit_path.exists() else []
        audit = SplitAudit([line.split("\t")[1] for line in seen])
        try:
            report = audit.evaluate_test(predictor, cases, name)
        except TestSplitReused as exc:
            raise DataError(str(exc)) from exc
        audit_path.write_text("\n".join(audit.log_lines()) + "\n", encoding="utf-8")
    else:
        report = evaluate(predictor, cases, name, part)
    with open(out / "report.jsonl", "w", encoding="utf-8") as fh:
        report.write_jsonl(fh)
    with open(out / "report.csv", "w", encoding="utf-8") as fh:
        write_summary_csv([report], fh)
    write_manifest(out, "evaluate", values, paths, ["report.jsonl", "report.csv"])
    s = report.summary()
    print(f"{name} {part}: P={s['avg_precision']:.4f} R={s['avg_recall']:.4f} "
          f"F1={s['avg_f1']:.4f} n={s['n_cases']}")


def cmd_bench(args, values):
    out = _outdir(args)
    ds, paths = _load(values)
    cfg = experiment_config(values)
    models = args.models.split(",") if args.models else list(ALL_MODELS)
    for m in models:
        if m not in ALL_MODELS:
            raise UsageError(f"unknown model {m!r}")
    prep = prepare(ds, cfg)
    with open(out / "split.tsv", "w", encoding="utf-8") as fh:
        write_split_manifest(prep.split, fh)
    audit = SplitAudit()
    reports = benchmark(prep, models, audit)
    with open(out / "report.jsonl", "w", encoding="utf-8") as fh:
        for r in reports.values():
            r.write_jsonl(fh)
    with open(out / "report.csv", "w", encoding="utf-8") as fh:
        write_summary_csv(reports.values(), fh)
    (out / "audit.tsv").write_text("\n".join(audit.log_lines()) + "\n", encoding="utf-8")
    write_manifest(out, "bench", values, paths, ["split.tsv", "report.jsonl", "report.csv",
                                                  "audit.tsv"])
    for name, r in reports.items():
        print(f"{name:14s} P={r.avg_precision:.4f} R={r.avg_recall:.4f} F1={r.avg_f1:.4f}")


COMMANDS = {"synth": cmd_synth, "ingest": cmd_ingest, "split": cmd_split, "train": cmd_train,
            "sweep": cmd_sweep, "recommend": cmd_recommend, "evaluate": cmd_evaluate,
            "bench": cmd_bench}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value config file (INI sections allowed)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", default=".", help="artifact directory")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override any config key, e.g. --set d_model=32")
    common.add_argument("--threads", type=int, default=1,
                        help="accepted for compatibility; computation is single-threaded")
    common.add_argument("-v", "--verbose", action="store_true")

    data = _Parser(add_help=False)
    data.add_argument("--data", help="directory holding checkins.csv [pois.csv profiles.csv]")
    data.add_argument("--checkins")
    data.add_argument("--pois")
    data.add_argument("--profiles")
    data.add_argument("--split-file", dest="split_file")

    model = _Parser(add_help=False)
    model.add_argument("--model", dest="mode", choices=ALL_MODELS)
    model.add_argument("--model-file", dest="model_file")
    model.add_argument("--faithful-loop", action="store_true",
                       help="insert-then-check budget loop (may overshoot by one POI)")

    ap = _Parser(prog="btrec", description="Personalized POI itinerary recommendation with a masked LM")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    sub.add_parser("synth", parents=[common], help="generate a synthetic world")
    sub.add_parser("ingest", parents=[common, data], help="parse and summarise trajectories")
    sub.add_parser("split", parents=[common, data], help="chronological 70/20/10 split")
    p = sub.add_parser("train", parents=[common, data, model], help="train an MLM")
    p.add_argument("--epochs", type=int)
    p = sub.add_parser("sweep", parents=[common, data, model], help="select epochs on validation")
    p.add_argument("--grid", help="comma-separated epoch grid")
    p = sub.add_parser("recommend", parents=[common, data, model], help="one itinerary query")
    p.add_argument("--src", type=int, required=True)
    p.add_argument("--dst", type=int, required=True)
    p.add_argument("--budget-min", type=float, required=True)
    p.add_argument("--user")
    p = sub.add_parser("evaluate", parents=[common, data, model], help="score a model")
    p.add_argument("--split", choices=("validation", "test"), default="test")
    p = sub.add_parser("bench", parents=[common, data], help="sweep + test every model")
    p.add_argument("--models", help=f"comma-separated subset of {','.join(ALL_MODELS)}")
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(message)s")
        values = _settings(args)
        COMMANDS[args.command](args, values)
        return 0
    except (UsageError, DataError) as exc:
        code = exc.exit_code
        kind = type(exc).__name__
        msg = str(exc)
    except SystemExit as exc:
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001
        code, kind, msg = 1, "InternalError", f"{type(exc).__name__}: {exc}"
    msg = " ".join(msg.split())
    print(f"btrec: error={kind} message={msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
