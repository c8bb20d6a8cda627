import logging

import numpy as np
import pandas as pd
import pytest

from rivertree.pipeline import (PRESETS, DeclusterConfig, RawSeries, decluster, decluster_events,
                                decluster_raw, read_raw, slot_maxima, slot_ranks)


def long_frame(values, start="2020-07-01", freq="24h", labels=None):
    values = np.asarray(values, dtype=float)
    labels = labels or [f"n{k}" for k in range(values.shape[1])]
    times = pd.date_range(start, periods=values.shape[0], freq=freq, tz="UTC")
    rows = [(labels[k], t, v) for k in range(values.shape[1]) for t, v in zip(times, values[:, k])
            if not np.isnan(v)]
    return pd.DataFrame(rows, columns=["node", "timestamp", "value"])


def random_raw(seed, days=120, d=3, drop=0.05, freq="6h"):
    rng = np.random.default_rng(seed)
    n = int(pd.Timedelta(days=days) / pd.Timedelta(freq))
    common = rng.gamma(2.0, size=(n, 1))
    v = common + rng.gamma(1.0, size=(n, d))
    v[rng.uniform(size=v.shape) < drop] = np.nan
    return RawSeries(long_frame(v, start="2021-01-01", freq=freq))


class TestRawSeries:
    def test_negative_rejected(self):
        with pytest.raises(ValueError, match="negative"):
            RawSeries(long_frame([[1.0], [-2.0]]))

    def test_non_increasing_rejected(self):
        df = long_frame([[1.0], [2.0], [3.0]])
        df.loc[2, "timestamp"] = df.loc[0, "timestamp"]
        with pytest.raises(ValueError, match="strictly increasing"):
            RawSeries(df)

    def test_wide(self):
        wide = pd.DataFrame({"time": pd.date_range("2020-01-01", periods=3, freq="h", tz="UTC"),
                             "a": [1.0, 2, 3], "b": [4.0, np.nan, 6]})
        raw = RawSeries.from_wide(wide)
        assert raw.labels == ("a", "b") and len(raw.frame) == 5


class TestSlotMaxima:
    def test_max_within_slot_and_empty_slot(self):
        t = pd.to_datetime(["2020-07-01T01:00Z", "2020-07-01T05:00Z", "2020-07-01T09:00Z",
                            "2020-07-03T02:00Z"])
        raw = RawSeries(pd.DataFrame({"node": "a", "timestamp": t, "value": [3.0, 7, 5, 1]}))
        s = slot_maxima(raw, "24h")
        assert s.values[0, 0] == 7 and np.isnan(s.values[1, 0]) and s.values[2, 0] == 1
        assert len(s.starts) == 3

    def test_identity_for_one_reading_per_slot(self):
        v = np.random.default_rng(0).gamma(2.0, size=(10, 2))
        s = slot_maxima(RawSeries(long_frame(v)), "24h")
        np.testing.assert_array_equal(s.values, v)

    def test_month_filter(self):
        v = np.ones((90, 1))
        s = slot_maxima(RawSeries(long_frame(v, start="2020-06-15")), "24h", months={7})
        assert set(s.starts[s.in_season].month) == {7}
        assert s.in_season.sum() == 31


class TestDecluster:
    cfg = DeclusterConfig(pd.Timedelta(hours=24), 4, None, False, False)

    def test_single_spike_exact_window(self):
        v = np.ones((9, 3))
        v[4, 1] = 100.0
        data = decluster(slot_maxima(RawSeries(long_frame(v)), "24h"), self.cfg)
        assert data.n == 1 and data.values[0, 1] == 100.0 and data.values[0, 0] == 1.0

    def test_single_spike_long_series(self):
        v = np.ones((60, 3))
        v[30, 2] = 50.0
        data, events = decluster(slot_maxima(RawSeries(long_frame(v)), "24h"), self.cfg,
                                 return_events=True)
        assert (data.values == 50.0).sum() == 1
        spike = [e for e in events if e.start <= 30 < e.stop]
        assert len(spike) == 1 and spike[0].center == 30

    def test_danube_preset_one_event(self):
        v = np.full((9, 2), 2.0)
        v[4] = [20.0, 30.0]
        raw = RawSeries(long_frame(v, start="2020-07-10"))
        data = decluster_raw(raw, PRESETS["danube"])
        assert data.n == 1
        np.testing.assert_allclose(data.values[0], np.log([20.0, 30.0]))

    def test_presets(self):
        dan, col = PRESETS["danube"], PRESETS["colorado"]
        assert (dan.slot, dan.window, dan.months, dan.log_transform, dan.conservative_missing) == \
            (pd.Timedelta(hours=24), 9, frozenset({6, 7, 8}), True, False)
        assert (col.slot, col.window, col.months, col.conservative_missing) == \
            (pd.Timedelta(hours=12), 17, None, True)

    def test_short_series_warns(self, caplog):
        v = np.ones((5, 2))
        with caplog.at_level(logging.WARNING):
            data = decluster(slot_maxima(RawSeries(long_frame(v)), "24h"), self.cfg)
        assert data.n == 0 and data.d == 2
        assert "fewer than the window" in caplog.text

    def test_window_disjointness_and_bounds(self):
        s = slot_maxima(random_raw(1), "12h")
        events = decluster_events(s, PRESETS["colorado"])
        used = np.zeros(len(s.starts), dtype=int)
        for e in events:
            assert e.stop - e.start == 17 and e.start >= 0 and e.stop <= len(s.starts)
            used[e.start:e.stop] += 1
        assert used.max() == 1
        assert len(events) > 3

    def test_rank_max_replay(self):
        s = slot_maxima(random_raw(2), "12h")
        cfg = DeclusterConfig("12h", 3, None, True, False)
        ranks = slot_ranks(s)
        top = np.nanmax(np.where(np.isnan(ranks), -np.inf, ranks), axis=1)
        free = s.in_season.copy()
        h = cfg.half_window
        for e in decluster_events(s, cfg):
            avail = [c for c in range(h, len(free) - h) if free[c - h:c + h + 1].all()]
            assert top[e.center] == max(top[c] for c in avail)
            # earliest slot among equal ranks
            assert e.center == min(c for c in avail if top[c] == top[e.center])
            free[e.start:e.stop] = False
        # no full window is left over
        assert not any(free[c - h:c + h + 1].all() for c in range(h, len(free) - h))

    def test_ranks_are_per_node_ecdf(self):
        s = slot_maxima(random_raw(3, drop=0.2), "24h")
        r = slot_ranks(s)
        for k in range(s.values.shape[1]):
            ok = ~np.isnan(s.values[:, k])
            assert np.array_equal(np.isnan(r[:, k]), ~ok)
            assert np.all((r[ok, k] > 0) & (r[ok, k] < 1))
            order = np.argsort(s.values[ok, k])
            assert np.all(np.diff(r[ok, k][order]) >= 0)

    def test_event_values_are_window_maxima(self):
        s = slot_maxima(random_raw(4, drop=0.1), "12h")
        cfg = DeclusterConfig("12h", 2, None, False, False)
        data, events = decluster(s, cfg, return_events=True)
        for row, e in zip(data.values, events):
            win = s.values[e.start:e.stop]
            with np.errstate(all="ignore"):
                expected = np.where(np.isnan(win).all(axis=0), np.nan,
                                    np.nanmax(np.where(np.isnan(win), -np.inf, win), axis=0))
            np.testing.assert_array_equal(row, expected)
        assert [e.center for e in events] == sorted(e.center for e in events)

    def test_conservative_missing(self):
        s = slot_maxima(random_raw(5, drop=0.05), "12h")
        cfg = DeclusterConfig("12h", 8, None, False, True)
        data, events = decluster(s, cfg, return_events=True)
        for row, e in zip(data.values, events):
            gaps = np.isnan(s.values[e.start:e.stop]).any(axis=0)
            assert np.all(np.isnan(row[gaps]))
            assert not np.any(np.isnan(row[~gaps]))

    def test_deterministic(self):
        raw = random_raw(6)
        a = decluster_raw(raw, PRESETS["colorado"])
        b = decluster_raw(raw, PRESETS["colorado"])
        np.testing.assert_array_equal(a.values, b.values)

    def test_zero_becomes_missing_under_log(self):
        v = np.ones((9, 2))
        v[4] = [5.0, 0.0]
        v[:, 1] = 0.0
        data = decluster(slot_maxima(RawSeries(long_frame(v)), "24h"),
                         DeclusterConfig("24h", 4, None, True, False))
        assert data.values[0, 0] == pytest.approx(np.log(5.0)) and not data.mask[0, 1]

    def test_out_of_season_slots_never_used(self):
        raw = random_raw(7, days=200, freq="24h")
        s = slot_maxima(raw, "24h", months={6, 7, 8})
        for e in decluster_events(s, DeclusterConfig("24h", 4, {6, 7, 8})):
            assert s.in_season[e.start:e.stop].all()

    def test_config_validation(self):
        with pytest.raises(ValueError):
            DeclusterConfig(half_window=0)
        with pytest.raises(ValueError):
            DeclusterConfig(months={13})
        with pytest.raises(ValueError):
            DeclusterConfig(slot="0h")

    def test_read_raw(self, tmp_path):
        p = tmp_path / "raw.csv"
        long_frame(np.ones((3, 2))).to_csv(p, index=False)
        assert read_raw(p).labels == ("n0", "n1")
        with pytest.raises(ValueError):
            read_raw(p, "wide-ish")
        (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="node,timestamp,value"):
            read_raw(tmp_path / "bad.csv")
