"""Check-in logs -> trajectories, plus the chronological train/validation/test split.

The default column layout is the one used by the public Flickr POI datasets
(``photoID;userID;dateTaken;poiID;poiTheme;poiFreq;seqID``).  Columns are
matched by header name, so extra columns and different orderings are fine.
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional, TextIO

UNKNOWN_THEME = "Unknown"

TrajId = tuple[str, int]


class IngestError(Exception):
    pass


class MissingColumn(IngestError):
    def __init__(self, name: str):
        super().__init__(f"missing required column {name!r}")
        self.name = name


@dataclass(frozen=True)
class BadRow:
    line_no: int
    reason: str


class TooManyBadRows(IngestError):
    def __init__(self, bad_rows: list[BadRow], n_rows: int):
        super().__init__(f"{len(bad_rows)} of {n_rows} rows rejected "
                         f"(first: line {bad_rows[0].line_no}, {bad_rows[0].reason})")
        self.bad_rows = bad_rows
        self.n_rows = n_rows


class UnknownPoi(IngestError):
    def __init__(self, poi_id: int):
        super().__init__(f"check-in references unknown poi {poi_id}")
        self.poi_id = poi_id


class EmptyDataset(IngestError):
    pass


@dataclass(frozen=True)
class Poi:
    poi_id: int
    name: str = ""
    theme: str = UNKNOWN_THEME
    lat: Optional[float] = None
    lon: Optional[float] = None


@dataclass(frozen=True)
class CheckIn:
    photo_id: int
    user_id: str
    timestamp: int
    poi_id: int
    seq_id: int
    theme: Optional[str] = None


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    home_city: Optional[str] = None
    home_country: Optional[str] = None

    @property
    def home(self) -> Optional[str]:
        # one token per user; city wins, country is the coarser fallback
        return self.home_city or self.home_country or None


@dataclass(frozen=True)
class PoiVisit:
    poi_id: int
    arrival: int
    departure: int

    @property
    def dwell(self) -> int:
        return self.departure - self.arrival


@dataclass(frozen=True)
class Trajectory:
    user_id: str
    seq_id: int
    visits: tuple[PoiVisit, ...]

    @property
    def traj_id(self) -> TrajId:
        return (self.user_id, self.seq_id)

    @property
    def pois(self) -> list[int]:
        return [v.poi_id for v in self.visits]

    @property
    def start_time(self) -> int:
        return self.visits[0].arrival

    @property
    def end_time(self) -> int:
        return self.visits[-1].departure

    def __len__(self) -> int:
        return len(self.visits)


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[TrajId, ...]
    validation: tuple[TrajId, ...]
    test: tuple[TrajId, ...]

    def sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.validation), len(self.test)

    def select(self, trajs: Iterable[Trajectory], part: str) -> list[Trajectory]:
        wanted = set(getattr(self, part))
        return [t for t in trajs if t.traj_id in wanted]


@dataclass(frozen=True)
class ColumnSpec:
    """Header names of the required check-in columns.

    ``theme`` is optional: when present it lets a POI table be derived from
    the check-ins alone.
    """
    photo_id: str = "photoID"
    user_id: str = "userID"
    timestamp: str = "dateTaken"
    poi_id: str = "poiID"
    seq_id: str = "seqID"
    theme: Optional[str] = "poiTheme"
    delimiter: str = ";"

    def required(self) -> dict[str, str]:
        return {"photo_id": self.photo_id, "user_id": self.user_id,
                "timestamp": self.timestamp, "poi_id": self.poi_id,
                "seq_id": self.seq_id}


FLICKR_COLUMNS = ColumnSpec()


def _as_stream(source) -> TextIO:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def _parse_int(text: str) -> int:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        value = float(text)
        if not math.isfinite(value) or value != int(value):
            raise
        return int(value)


def parse_checkins(source, spec: ColumnSpec = FLICKR_COLUMNS,
                   max_bad_fraction: float = 0.10,
                   bad_rows: Optional[list[BadRow]] = None) -> list[CheckIn]:
    """Parse a delimiter-separated check-in log with a header row.

    Rejected rows are appended to ``bad_rows`` (when given).  The whole parse
    fails with :class:`TooManyBadRows` once more than ``max_bad_fraction`` of
    the data rows are rejected.
    """
    reader = csv.reader(_as_stream(source), delimiter=spec.delimiter)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MissingColumn(spec.photo_id) from None
    index = {}
    for key, name in spec.required().items():
        if name not in header:
            raise MissingColumn(name)
        index[key] = header.index(name)
    theme_col = header.index(spec.theme) if spec.theme and spec.theme in header else None

    rejected = [] if bad_rows is None else bad_rows
    n_before = len(rejected)
    out: list[CheckIn] = []
    n_rows = 0
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        n_rows += 1
        values = {}
        reason = None
        for key, col in index.items():
            cell = row[col].strip() if col < len(row) else ""
            if not cell:
                reason = key
                break
            if key == "user_id":
                values[key] = cell
                continue
            try:
                values[key] = _parse_int(cell)
            except ValueError:
                reason = key
                break
        if reason is None and values["timestamp"] < 0:
            reason = "timestamp"
        if reason is not None:
            rejected.append(BadRow(line_no, reason))
            continue
        theme = None
        if theme_col is not None and theme_col < len(row) and row[theme_col].strip():
            theme = row[theme_col].strip()
        out.append(CheckIn(theme=theme, **values))

    n_bad = len(rejected) - n_before
    if n_rows and n_bad / n_rows > max_bad_fraction:
        raise TooManyBadRows(rejected[n_before:], n_rows)
    return out


def parse_pois(source, delimiter: str = ",") -> dict[int, Poi]:
    """Read ``poi_id,name,theme[,lat,lon]``."""
    reader = csv.DictReader(_as_stream(source), delimiter=delimiter)
    fields = reader.fieldnames or []
    for name in ("poi_id", "name", "theme"):
        if name not in fields:
            raise MissingColumn(name)
    pois = {}
    for row in reader:
        pid = _parse_int(row["poi_id"])
        lat = row.get("lat") or None
        lon = row.get("lon") or None
        pois[pid] = Poi(pid, row["name"] or "", (row["theme"] or "").strip() or UNKNOWN_THEME,
                        float(lat) if lat else None, float(lon) if lon else None)
    return pois


def parse_profiles(source, delimiter: str = ",") -> dict[str, UserProfile]:
    """Read ``user_id,home_city,home_country``; blank home fields stay ``None``."""
    reader = csv.DictReader(_as_stream(source), delimiter=delimiter)
    if "user_id" not in (reader.fieldnames or []):
        raise MissingColumn("user_id")
    profiles = {}
    for row in reader:
        uid = row["user_id"].strip()
        profiles[uid] = UserProfile(uid, (row.get("home_city") or "").strip() or None,
                                    (row.get("home_country") or "").strip() or None)
    return profiles


def pois_from_checkins(checkins: Iterable[CheckIn]) -> dict[int, Poi]:
    """Derive a POI table from the theme column of the check-ins themselves."""
    pois: dict[int, Poi] = {}
    for c in checkins:
        if c.poi_id not in pois or pois[c.poi_id].theme == UNKNOWN_THEME:
            pois[c.poi_id] = Poi(c.poi_id, str(c.poi_id), c.theme or UNKNOWN_THEME)
    return dict(sorted(pois.items()))


def build_trajectories(checkins: Iterable[CheckIn], pois: dict[int, Poi]) -> list[Trajectory]:
    """Group by (user, seq), order by time and collapse runs of the same POI."""
    groups: dict[TrajId, list[CheckIn]] = defaultdict(list)
    for c in checkins:
        if c.poi_id not in pois:
            raise UnknownPoi(c.poi_id)
        groups[(c.user_id, c.seq_id)].append(c)

    trajs = []
    for (user, seq), rows in sorted(groups.items()):
        rows.sort(key=lambda c: (c.timestamp, c.photo_id))
        visits: list[PoiVisit] = []
        for c in rows:
            if visits and visits[-1].poi_id == c.poi_id:
                visits[-1] = PoiVisit(c.poi_id, visits[-1].arrival, c.timestamp)
            else:
                visits.append(PoiVisit(c.poi_id, c.timestamp, c.timestamp))
        trajs.append(Trajectory(user, seq, tuple(visits)))
    return trajs


def filter_trajectories(trajs: Iterable[Trajectory], min_pois: int = 3) -> list[Trajectory]:
    if min_pois < 1:
        raise ValueError("min_pois must be >= 1")
    return [t for t in trajs if len(t.visits) >= min_pois]


def split_dataset(trajs: Iterable[Trajectory],
                  fractions: tuple[float, float, float] = (0.70, 0.20, 0.10)) -> DatasetSplit:
    """Chronological split on each trajectory's last check-in time."""
    if len(fractions) != 3 or any(f <= 0 for f in fractions) or abs(sum(fractions) - 1) > 1e-9:
        raise ValueError(f"bad split fractions {fractions}")
    ordered = sorted(trajs, key=lambda t: (t.end_time, t.traj_id))
    n = len(ordered)
    if n == 0:
        raise EmptyDataset("no trajectories to split")
    # guard against 0.7 * n landing a hair under an integer
    n_train = math.floor(fractions[0] * n + 1e-9)
    n_val = math.floor(fractions[1] * n + 1e-9)
    ids = [t.traj_id for t in ordered]
    return DatasetSplit(tuple(ids[:n_train]), tuple(ids[n_train:n_train + n_val]),
                        tuple(ids[n_train + n_val:]))


def format_traj_id(traj_id: TrajId) -> str:
    return f"{traj_id[0]}:{traj_id[1]}"


def parse_traj_id(text: str) -> TrajId:
    user, _, seq = text.rpartition(":")
    return (user, int(seq))


def write_split_manifest(split: DatasetSplit, out: TextIO) -> None:
    rows = [(format_traj_id(t), name) for name in ("train", "validation", "test")
            for t in getattr(split, name)]
    for tid, name in sorted(rows):
        out.write(f"{tid}\t{name}\n")


def read_split_manifest(source) -> DatasetSplit:
    parts: dict[str, list[TrajId]] = {"train": [], "validation": [], "test": []}
    for line in _as_stream(source):
        line = line.rstrip("\n")
        if not line:
            continue
        tid, name = line.split("\t")
        parts[name].append(parse_traj_id(tid))
    return DatasetSplit(*(tuple(parts[k]) for k in ("train", "validation", "test")))


def write_checkins(checkins: Iterable[CheckIn], out: TextIO, spec: ColumnSpec = FLICKR_COLUMNS) -> None:
    w = csv.writer(out, delimiter=spec.delimiter, lineterminator="\n")
    w.writerow([spec.photo_id, spec.user_id, spec.timestamp, spec.poi_id,
                spec.theme or "poiTheme", "poiFreq", spec.seq_id])
    for c in checkins:
        w.writerow([c.photo_id, c.user_id, c.timestamp, c.poi_id, c.theme or "", "", c.seq_id])


def write_pois(pois: dict[int, Poi], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["poi_id", "name", "theme", "lat", "lon"])
    for p in sorted(pois.values(), key=lambda p: p.poi_id):
        w.writerow([p.poi_id, p.name, p.theme,
                    "" if p.lat is None else repr(p.lat), "" if p.lon is None else repr(p.lon)])


def write_profiles(profiles: dict[str, UserProfile], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["user_id", "home_city", "home_country"])
    for uid in sorted(profiles):
        p = profiles[uid]
        w.writerow([uid, p.home_city or "", p.home_country or ""])
