"""Seeded synthetic worlds: POIs, grouped users with latent category tastes, check-ins.

Each user belongs to a group; the group's label doubles as the user's home
city, so demographic tokens carry real signal.  Every trajectory picks its
source and destination uniformly and fills the middle with distinct POIs
drawn in proportion to the group's preference for their category.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import CheckIn, Poi, UserProfile


class InfeasibleConfig(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    n_pois: int = 30
    n_categories: int = 6
    n_users: int = 50
    n_user_groups: int = 2
    trajs_per_user: int = 8
    traj_len_range: tuple[int, int] = (4, 6)
    preference_concentration: float = 0.5
    dwell_mean_per_poi: float = 3600.0
    # group g only likes categories c with c % n_user_groups == g
    disjoint_groups: bool = False
    # > 0: each group draws this many fixed tours up front and every trajectory
    # replays one of them (a learnable corpus for regression runs)
    routes_per_group: int = 0
    travel_mean: float = 600.0
    start_time: int = 1_400_000_000
    seed: int = 0

    def validate(self) -> None:
        if self.n_pois < 2 or self.n_categories < 1 or self.n_categories > self.n_pois:
            raise InfeasibleConfig("need 1 <= n_categories <= n_pois and n_pois >= 2")
        if self.n_users < 1 or not 1 <= self.n_user_groups <= self.n_users:
            raise InfeasibleConfig("need 1 <= n_user_groups <= n_users")
        lo, hi = self.traj_len_range
        if lo < 3 or hi < lo:
            raise InfeasibleConfig("traj_len_range must satisfy 3 <= min <= max")
        if not self.preference_concentration > 0:
            raise InfeasibleConfig("preference_concentration must be positive")
        if self.disjoint_groups and self.n_categories < self.n_user_groups:
            raise InfeasibleConfig("disjoint groups need at least one category per group")
        if self.routes_per_group < 0:
            raise InfeasibleConfig("routes_per_group must be >= 0")
        if self.trajs_per_user < 1 or self.dwell_mean_per_poi <= 0:
            raise InfeasibleConfig("trajs_per_user and dwell_mean_per_poi must be positive")


@dataclass(frozen=True)
class SynthWorld:
    config: SynthConfig
    pois: dict[int, Poi]
    profiles: dict[str, UserProfile]
    checkins: list[CheckIn]
    latent: np.ndarray          # (n_user_groups, n_categories), rows sum to 1
    user_group: dict[str, int]
    poi_dwell_mean: dict[int, float]


def poi_category(poi_id: int, n_categories: int) -> int:
    return (poi_id - 1) % n_categories


def _group_preferences(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    latent = np.zeros((cfg.n_user_groups, cfg.n_categories))
    for g in range(cfg.n_user_groups):
        if cfg.disjoint_groups:
            support = np.arange(g, cfg.n_categories, cfg.n_user_groups)
        else:
            support = np.arange(cfg.n_categories)
        draw = rng.dirichlet(np.full(len(support), cfg.preference_concentration))
        if not np.all(np.isfinite(draw)) or draw.sum() <= 0:
            draw = np.zeros(len(support))
            draw[0] = 1.0
        latent[g, support] = draw / draw.sum()
    return latent


def generate_world(cfg: SynthConfig) -> SynthWorld:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)

    poi_ids = np.arange(1, cfg.n_pois + 1)
    cats = np.array([poi_category(int(p), cfg.n_categories) for p in poi_ids])
    pois = {int(p): Poi(int(p), f"Poi{int(p)}", f"Cat{int(c)}") for p, c in zip(poi_ids, cats)}
    dwell_mean = cfg.dwell_mean_per_poi * rng.lognormal(0.0, 0.3, size=cfg.n_pois)

    latent = _group_preferences(cfg, rng)
    cat_sizes = np.bincount(cats, minlength=cfg.n_categories)
    # per-POI weight: group preference for the category, shared by its POIs
    poi_weight = latent[:, cats] / cat_sizes[cats]

    max_mid = cfg.traj_len_range[1] - 2
    for g in range(cfg.n_user_groups):
        # endpoints are uniform, so the middle may lose at most two supported POIs
        if np.count_nonzero(poi_weight[g]) - 2 < max_mid:
            raise InfeasibleConfig(
                f"group {g} prefers {np.count_nonzero(poi_weight[g])} POIs, "
                f"trajectories need {max_mid} distinct intermediates")

    width = len(str(cfg.n_users - 1))
    users = [f"u{i:0{width}d}" for i in range(cfg.n_users)]
    user_group = {u: i % cfg.n_user_groups for i, u in enumerate(users)}
    profiles = {u: UserProfile(u, f"City{user_group[u]}", None) for u in users}

    def draw_route(g: int) -> list[int]:
        length = int(rng.integers(cfg.traj_len_range[0], cfg.traj_len_range[1] + 1))
        src, dst = rng.choice(poi_ids, size=2, replace=False)
        w = poi_weight[g].copy()
        w[[src - 1, dst - 1]] = 0.0
        mid = rng.choice(poi_ids, size=length - 2, replace=False, p=w / w.sum())
        return [int(src), *map(int, mid), int(dst)]

    templates = [[draw_route(g) for _ in range(cfg.routes_per_group)]
                 for g in range(cfg.n_user_groups)]

    checkins: list[CheckIn] = []
    photo_id = 1
    clock = float(cfg.start_time)
    for seq in range(cfg.trajs_per_user):
        for u in users:
            g = user_group[u]
            if cfg.routes_per_group:
                route = templates[g][int(rng.integers(cfg.routes_per_group))]
            else:
                route = draw_route(g)

            t = clock + rng.uniform(0, 3600)
            last_ts = -1
            for j, p in enumerate(route):
                if j:
                    t += 1 + rng.exponential(cfg.travel_mean)
                dwell = dwell_mean[p - 1] * rng.lognormal(-0.125, 0.5)
                n_photos = 1 + int(rng.integers(1, 4))
                for k in range(n_photos):
                    ts = max(int(t + dwell * k / (n_photos - 1)), last_ts + 1)
                    checkins.append(CheckIn(photo_id, u, ts, p, seq, pois[p].theme))
                    photo_id += 1
                    last_ts = ts
                t = max(t + dwell, float(last_ts))
            clock = t + 1
    return SynthWorld(cfg, pois, profiles, checkins, latent, user_group,
                      {int(p): float(m) for p, m in zip(poi_ids, dwell_mean)})
