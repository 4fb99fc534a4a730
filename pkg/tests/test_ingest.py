import io

import pytest
from hypothesis import given, settings, strategies as st

from btrec.ingest import (BadRow, CheckIn, ColumnSpec, EmptyDataset, MissingColumn,
                          Poi, PoiVisit, TooManyBadRows, UnknownPoi, build_trajectories,
                          filter_trajectories, parse_checkins, parse_pois, parse_profiles,
                          pois_from_checkins, read_split_manifest, split_dataset,
                          write_split_manifest)

from conftest import make_traj

HEADER = "photoID;userID;dateTaken;poiID;poiTheme;seqID\n"
POIS = {p: Poi(p, f"p{p}", "Park") for p in range(1, 10)}


def test_parse_row_maps_fields():
    rows = parse_checkins(HEADER + "10007;u123;1366212820;6;Park;2\n")
    assert rows == [CheckIn(10007, "u123", 1366212820, 6, 2, "Park")]


def test_parse_flickr_header_with_poifreq_column():
    text = "photoID;userID;dateTaken;poiID;poiTheme;poiFreq;seqID\n1;u;5;2;Museum;99;7\n"
    assert parse_checkins(text)[0] == CheckIn(1, "u", 5, 2, 7, "Museum")


def test_empty_stream_gives_empty_list():
    assert parse_checkins(HEADER) == []


def test_bad_timestamp_is_reported_with_line_number():
    with pytest.raises(TooManyBadRows) as err:
        parse_checkins(HEADER + "1;u;notatime;6;Park;2\n")
    assert err.value.bad_rows == [BadRow(2, "timestamp")]


def test_bad_rows_collected_below_threshold():
    good = "".join(f"{i};u;{i};1;Park;0\n" for i in range(20))
    bad = []
    rows = parse_checkins(HEADER + good + "99;u;;1;Park;0\n", bad_rows=bad)
    assert len(rows) == 20
    assert bad == [BadRow(22, "timestamp")]


def test_bad_row_threshold_is_configurable():
    text = HEADER + "1;u;1;1;Park;0\n2;u;x;1;Park;0\n"
    with pytest.raises(TooManyBadRows):
        parse_checkins(text)
    assert len(parse_checkins(text, max_bad_fraction=0.5)) == 1


def test_missing_column():
    with pytest.raises(MissingColumn) as err:
        parse_checkins("photoID;userID;dateTaken;poiID\n")
    assert err.value.name == "seqID"


def test_custom_delimiter_and_names():
    spec = ColumnSpec("pid", "uid", "ts", "poi", "trip", None, ",")
    assert parse_checkins("uid,pid,ts,poi,trip\nx,3,10,4,1\n", spec) == [CheckIn(3, "x", 10, 4, 1)]


def test_parse_pois_and_profiles():
    pois = parse_pois("poi_id,name,theme,lat,lon\n1,Tower,Landmark,1.5,2.5\n2,Garden,,,\n")
    assert pois[1] == Poi(1, "Tower", "Landmark", 1.5, 2.5)
    assert pois[2].theme == "Unknown"
    profiles = parse_profiles("user_id,home_city,home_country\na,Tokyo,Japan\nb,,France\nc,,\n")
    assert profiles["a"].home == "Tokyo"
    assert profiles["b"].home == "France"
    assert profiles["c"].home is None


def test_pois_from_checkins_uses_theme_column():
    rows = parse_checkins(HEADER + "1;u;1;5;Beach;0\n")
    assert pois_from_checkins(rows) == {5: Poi(5, "5", "Beach")}


def test_collapse_consecutive_same_poi():
    c = [CheckIn(1, "u", 0, 1, 0), CheckIn(2, "u", 100, 1, 0), CheckIn(3, "u", 500, 2, 0)]
    (traj,) = build_trajectories(c, POIS)
    assert traj.visits == (PoiVisit(1, 0, 100), PoiVisit(2, 500, 500))


def test_single_checkin_has_zero_dwell():
    (traj,) = build_trajectories([CheckIn(1, "u", 42, 3, 0)], POIS)
    assert traj.visits == (PoiVisit(3, 42, 42),)
    assert traj.visits[0].dwell == 0


def test_seq_ids_separate_trajectories():
    c = [CheckIn(1, "u", 0, 1, 0), CheckIn(2, "u", 10, 2, 1)]
    assert [t.traj_id for t in build_trajectories(c, POIS)] == [("u", 0), ("u", 1)]


def test_checkins_are_sorted_by_time():
    c = [CheckIn(2, "u", 50, 2, 0), CheckIn(1, "u", 10, 1, 0), CheckIn(3, "u", 90, 1, 0)]
    (traj,) = build_trajectories(c, POIS)
    assert traj.pois == [1, 2, 1]


def test_unknown_poi():
    with pytest.raises(UnknownPoi):
        build_trajectories([CheckIn(1, "u", 0, 77, 0)], POIS)


def test_filter_trajectories():
    short = make_traj("u", 0, [1, 2])
    ok = make_traj("u", 1, [1, 2, 3])
    assert filter_trajectories([short, ok]) == [ok]
    assert filter_trajectories([short, ok], min_pois=1) == [short, ok]
    with pytest.raises(ValueError):
        filter_trajectories([ok], min_pois=0)


def _trajs_with_end_times(ends):
    return [make_traj(f"u{i:03d}", 0, [1, 2, 3], start=e - 500) for i, e in enumerate(ends)]


def test_split_sizes_ten():
    split = split_dataset(_trajs_with_end_times(range(10)))
    assert split.sizes() == (7, 2, 1)


def test_split_sizes_three():
    # floor(2.1) = 2, floor(0.6) = 0, remainder 1
    assert split_dataset(_trajs_with_end_times([5, 1, 3])).sizes() == (2, 0, 1)


def test_split_orders_by_last_checkin_then_traj_id():
    trajs = [make_traj("b", 0, [1, 2, 3], start=0), make_traj("a", 0, [1, 2, 3], start=0),
             make_traj("c", 0, [1, 2, 3], start=-1000)]
    split = split_dataset(trajs, (0.34, 0.33, 0.33))
    assert split.train + split.validation + split.test == (("c", 0), ("a", 0), ("b", 0))


def test_split_rejects_bad_input():
    with pytest.raises(EmptyDataset):
        split_dataset([])
    with pytest.raises(ValueError):
        split_dataset(_trajs_with_end_times([1]), (0.5, 0.5, 0.1))


def test_split_manifest_roundtrip():
    split = split_dataset(_trajs_with_end_times(range(10)))
    buf = io.StringIO()
    write_split_manifest(split, buf)
    lines = buf.getvalue().splitlines()
    assert lines == sorted(lines)
    back = read_split_manifest(io.StringIO(buf.getvalue()))
    assert set(back.train) == set(split.train) and set(back.test) == set(split.test)


checkin_rows = st.lists(st.tuples(st.sampled_from(["a", "b"]), st.integers(0, 2),
                                  st.integers(0, 10_000), st.integers(1, 5)), max_size=60)


@settings(max_examples=60, deadline=None)
@given(checkin_rows)
def test_pipeline_properties(rows):
    checkins = [CheckIn(i, u, t, p, s) for i, (u, s, t, p) in enumerate(rows)]
    trajs = build_trajectories(checkins, POIS)
    again = build_trajectories(list(reversed(checkins)), POIS)
    assert [t.traj_id for t in trajs] == [t.traj_id for t in again]
    for t in trajs:
        arrivals = [v.arrival for v in t.visits]
        assert arrivals == sorted(arrivals)
        assert all(a.poi_id != b.poi_id for a, b in zip(t.visits, t.visits[1:]))
        assert all(v.departure >= v.arrival for v in t.visits)
        assert sum(v.dwell for v in t.visits) <= t.end_time - t.start_time
    kept = filter_trajectories(trajs, 2)
    if kept:
        split = split_dataset(kept)
        parts = [split.train, split.validation, split.test]
        ids = [i for part in parts for i in part]
        assert sorted(ids) == sorted(t.traj_id for t in kept)
        assert len(set(ids)) == len(ids)
        end = {t.traj_id: t.end_time for t in kept}
        for earlier, later in zip(parts, parts[1:]):
            if earlier and later:
                assert max(end[i] for i in earlier) <= min(end[i] for i in later)
        assert split_dataset(list(reversed(kept))) == split
