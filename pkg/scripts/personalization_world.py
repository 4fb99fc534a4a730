"""Compare BTREC, the plain-corpus model and the baselines on the two-group synthetic world."""

import argparse
import logging
import time

from btrec.pipeline import ExperimentConfig, benchmark, dataset_from_world, prepare
from btrec.synthgen import SynthConfig, generate_world


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--trajs-per-user", type=int, default=8)
    ap.add_argument("--models", default="btrec,ppoibert,poibert-plain,markov,lz78,cpt")
    ap.add_argument("--grid", default="1,2,5,10,20,35,50,75,100")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    world = generate_world(SynthConfig(n_pois=30, n_categories=6, n_users=50, n_user_groups=2,
                                       trajs_per_user=args.trajs_per_user, disjoint_groups=True,
                                       seed=args.seed))
    cfg = ExperimentConfig(seed=args.seed, epoch_grid=tuple(int(g) for g in args.grid.split(",")))
    prep = prepare(dataset_from_world(world), cfg)
    print("split sizes", prep.split.sizes())
    t0 = time.time()
    for name, rep in benchmark(prep, args.models.split(",")).items():
        print(f"{name:14s} P={rep.avg_precision:.4f} R={rep.avg_recall:.4f} F1={rep.avg_f1:.4f}"
              f"  ({time.time() - t0:.0f}s)")


if __name__ == "__main__":
    main()
