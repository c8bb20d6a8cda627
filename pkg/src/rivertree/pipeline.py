"""From raw discharge time series to independent extreme-event rows.

Readings are first reduced to per-slot maxima (e.g. daily or 12-hourly).
Events are then extracted greedily: the slot holding the highest-ranked
observation of any node becomes the centre of a window of
``2 * half_window + 1`` slots, every node contributes its maximum over that
window, and the window's slots are removed before the next search.

Ranks are each node's empirical distribution function evaluated on its own
in-season slot maxima, so nodes with very different discharge scales are
compared on a common ``(0, 1)`` scale. Because removing slots never changes
the relative order of the remaining ones, the greedy search reduces to one
pass over the slots in decreasing rank order, skipping slots whose full
window is no longer available.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from .model import ObservationMatrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeclusterConfig:
    slot: pd.Timedelta = pd.Timedelta(hours=24)
    half_window: int = 4
    months: frozenset[int] | None = None
    log_transform: bool = True
    conservative_missing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "slot", pd.Timedelta(self.slot))
        if self.slot <= pd.Timedelta(0):
            raise ValueError("slot length must be positive")
        if self.half_window < 1:
            raise ValueError("half_window must be at least 1")
        if self.months is not None:
            months = frozenset(int(m) for m in self.months)
            if not months <= set(range(1, 13)):
                raise ValueError("months must lie in 1..12")
            object.__setattr__(self, "months", months)

    @property
    def window(self) -> int:
        return 2 * self.half_window + 1

    def with_overrides(self, **changes) -> "DeclusterConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


PRESETS = {
    # daily slots, 9-day windows, summer months only
    "danube": DeclusterConfig(pd.Timedelta(hours=24), 4, frozenset({6, 7, 8}), True, False),
    # 12-hour slots, +-8 slots (8.5 days), all months, missing if any slot missing
    "colorado": DeclusterConfig(pd.Timedelta(hours=12), 8, None, True, True),
}


@dataclass(frozen=True)
class RawSeries:
    """Long-format readings: columns ``node``, ``timestamp`` (UTC), ``value``."""

    frame: pd.DataFrame

    def __post_init__(self):
        df = self.frame.loc[:, ["node", "timestamp", "value"]].copy()
        df["node"] = df["node"].astype(str)
        df["timestamp"] = pd.to_datetime(df["timestamp"], utc=True)
        df["value"] = pd.to_numeric(df["value"], errors="coerce")
        bad = df.index[df["value"] < 0]
        if len(bad):
            raise ValueError(f"negative discharge at row {bad[0]} (node {df.loc[bad[0], 'node']})")
        for node, grp in df.groupby("node", sort=False):
            step = grp["timestamp"].diff().dropna()
            if (step <= pd.Timedelta(0)).any():
                where = step.index[(step <= pd.Timedelta(0)).to_numpy()][0]
                raise ValueError(f"timestamps of node {node} not strictly increasing at row {where}")
        object.__setattr__(self, "frame", df.reset_index(drop=True))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(pd.unique(self.frame["node"]))

    @classmethod
    def from_wide(cls, frame: pd.DataFrame, time_column: str | None = None) -> "RawSeries":
        time_column = time_column or frame.columns[0]
        long = frame.melt(id_vars=[time_column], var_name="node", value_name="value")
        long = long.rename(columns={time_column: "timestamp"})
        long = long.dropna(subset=["value"])
        return cls(long)


def read_raw(path, fmt: str = "long") -> RawSeries:
    frame = pd.read_csv(Path(path), comment="#")
    if fmt == "long":
        missing = {"node", "timestamp", "value"} - set(frame.columns)
        if missing:
            raise ValueError(f"{path}: long format needs columns node,timestamp,value; missing {sorted(missing)}")
        return RawSeries(frame)
    if fmt == "wide":
        return RawSeries.from_wide(frame)
    raise ValueError(f"unknown raw format {fmt!r}")


@dataclass(frozen=True)
class SlottedSeries:
    """Per-slot maxima on a contiguous slot grid.

    ``values[s, k]`` is NaN when node ``k`` has no reading in slot ``s``;
    ``in_season[s]`` is false for slots outside the month filter.
    """

    starts: pd.DatetimeIndex
    values: np.ndarray
    in_season: np.ndarray
    labels: tuple[str, ...]


def slot_maxima(raw: RawSeries, slot="24h", months=None) -> SlottedSeries:
    slot = pd.Timedelta(slot)
    df = raw.frame.dropna(subset=["value"])
    labels = raw.labels
    if df.empty:
        raise ValueError("raw series has no readings")
    slot_start = df["timestamp"].dt.floor(slot)
    if months is not None:
        keep = slot_start.dt.month.isin(sorted(months)).to_numpy()
        df, slot_start = df[keep], slot_start[keep]
        if df.empty:
            raise ValueError("no readings in the selected months")
    wide = (df.assign(slot=slot_start)
              .groupby(["slot", "node"])["value"].max()
              .unstack("node"))
    grid = pd.date_range(wide.index.min(), wide.index.max(), freq=slot)
    wide = wide.reindex(index=grid, columns=list(labels))
    in_season = (np.ones(len(grid), dtype=bool) if months is None
                 else grid.month.isin(sorted(months)))
    return SlottedSeries(grid, wide.to_numpy(dtype=float), np.asarray(in_season), labels)


def slot_ranks(slotted: SlottedSeries) -> np.ndarray:
    """Per-node empirical CDF of in-season slot maxima; NaN where missing."""
    v = slotted.values
    ranks = np.full(v.shape, np.nan)
    for k in range(v.shape[1]):
        ok = ~np.isnan(v[:, k]) & slotted.in_season
        if ok.any():
            ranks[ok, k] = rankdata(v[ok, k], method="average") / (ok.sum() + 1)
    return ranks


@dataclass(frozen=True)
class Event:
    center: int
    start: int
    stop: int  # exclusive
    rank: float


def decluster_events(slotted: SlottedSeries, cfg: DeclusterConfig) -> list[Event]:
    """Events in selection order (decreasing rank)."""
    h = cfg.half_window
    s_count = slotted.values.shape[0]
    ranks = slot_ranks(slotted)
    has_obs = ~np.all(np.isnan(ranks), axis=1)
    top = np.full(s_count, -np.inf)
    top[has_obs] = np.nanmax(ranks[has_obs], axis=1)
    order = np.lexsort((np.arange(s_count), -top))
    free = slotted.in_season.copy()
    events = []
    for s in order:
        if not np.isfinite(top[s]):
            break
        lo, hi = s - h, s + h + 1
        if lo < 0 or hi > s_count or not free[lo:hi].all():
            continue
        free[lo:hi] = False
        events.append(Event(int(s), int(lo), int(hi), float(top[s])))
    return events


def event_rows(slotted: SlottedSeries, events, conservative_missing: bool) -> np.ndarray:
    d = slotted.values.shape[1]
    rows = np.full((len(events), d), np.nan)
    for r, ev in enumerate(events):
        win = slotted.values[ev.start:ev.stop]
        observed = ~np.isnan(win)
        any_obs = observed.any(axis=0)
        rows[r, any_obs] = np.nanmax(win[:, any_obs], axis=0)
        if conservative_missing:
            rows[r, ~observed.all(axis=0)] = np.nan
    return rows


def decluster(slotted: SlottedSeries, cfg: DeclusterConfig, return_events: bool = False):
    """Extract one observation row per event, in chronological order.

    With ``cfg.log_transform`` values are logged last; zero discharges become
    missing.
    """
    if slotted.values.shape[0] < cfg.window:
        log.warning("series has %d slots, fewer than the window of %d; no events",
                    slotted.values.shape[0], cfg.window)
    events = sorted(decluster_events(slotted, cfg), key=lambda e: e.center)
    rows = event_rows(slotted, events, cfg.conservative_missing)
    if cfg.log_transform:
        with np.errstate(divide="ignore"):
            rows = np.where(rows > 0, np.log(np.where(rows > 0, rows, 1.0)), np.nan)
    data = ObservationMatrix.from_array(rows, slotted.labels)
    if return_events:
        return data, events
    return data


def decluster_raw(raw: RawSeries, cfg: DeclusterConfig, return_events: bool = False):
    slotted = slot_maxima(raw, cfg.slot, cfg.months)
    return decluster(slotted, cfg, return_events)
