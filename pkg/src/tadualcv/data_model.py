"""In-memory model for irregular multivariate time series with missingness.

A dataset is a collection of visits; each visit is a sequence of timestamped
events carrying one value slot per feature. Missing values are stored as NaN
inside each visit's value matrix, so every visit is a dense ``(T_i, D)`` float
array plus an integer time vector. Masking bookkeeping (which cells were
hidden on purpose, and what their true values were) lives in ``MaskSet``.

All containers here are immutable after construction: the value arrays are
flagged read-only, and the mutating-looking operations (``apply_mask``,
``restore_mask``) return fresh datasets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

FEATURE_KINDS = ("lab", "vital", "other")


class DataError(ValueError):
    """Raised when input data violates the dataset contract."""


@dataclass(frozen=True)
class FeatureSpec:
    """One feature column: dense integer id, unique name, clinical kind.

    ``kind`` only matters for carry-forward windows ("lab" vs "vital");
    anything else should use "other".
    """

    id: int
    name: str
    kind: str = "other"

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise DataError(f"unknown feature kind {self.kind!r} for {self.name!r}")


@dataclass(frozen=True)
class Event:
    """A single timestamped row of feature values (NaN = missing)."""

    time: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "time", int(self.time))


class Visit:
    """One visit: strictly time-ordered events over D feature slots.

    Internally stores ``times`` (int64, shape ``(T,)``) and ``values``
    (float64, shape ``(T, D)``, NaN = missing). Both arrays are read-only.
    """

    __slots__ = ("visit_id", "times", "values")

    def __init__(self, visit_id: str, times, values):
        self.visit_id = str(visit_id)
        times = np.asarray(times, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or times.ndim != 1 or values.shape[0] != times.shape[0]:
            raise DataError(f"visit {visit_id!r}: times/values shapes disagree")
        times.flags.writeable = False
        values.flags.writeable = False
        self.times = times
        self.values = values

    @classmethod
    def from_events(cls, visit_id: str, events: Sequence[Event]) -> "Visit":
        times = [e.time for e in events]
        values = np.array([e.values for e in events], dtype=float)
        return cls(visit_id, times, values)

    @property
    def n_events(self) -> int:
        return self.times.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def events(self) -> Iterator[Event]:
        for t, row in zip(self.times, self.values):
            yield Event(int(t), row)

    def observed(self) -> np.ndarray:
        """Boolean (T, D) array, True where a value is present."""
        return ~np.isnan(self.values)


@dataclass(frozen=True)
class Dataset:
    """Features plus visits. ``validate`` reports contract violations."""

    features: tuple[FeatureSpec, ...]
    visits: tuple[Visit, ...]

    def __init__(self, features: Iterable[FeatureSpec], visits: Iterable[Visit]):
        object.__setattr__(self, "features", tuple(features))
        object.__setattr__(self, "visits", tuple(visits))

    @property
    def n_visits(self) -> int:
        return len(self.visits)

    @property
    def n_features(self) -> int:
        return len(self.features)

    def n_observed_cells(self) -> int:
        return int(sum(v.observed().sum() for v in self.visits))


class CellIndex(NamedTuple):
    """Location of one value slot: (visit index, event index, feature index)."""

    visit: int
    event: int
    feature: int


class MaskEntry(NamedTuple):
    cell: CellIndex
    truth: float


@dataclass(frozen=True)
class MaskSet:
    """Cells hidden by the harness, with their ground-truth values.

    ``strategy`` is "random_rate" or "one_per_feature_visit"; ``rate`` is only
    meaningful for the former. Entries must reference cells that were observed
    in the source dataset, with no duplicates.
    """

    entries: tuple[MaskEntry, ...]
    strategy: str = "random_rate"
    rate: float | None = None
    seed: int = 0

    def __init__(self, entries, strategy="random_rate", rate=None, seed=0):
        object.__setattr__(
            self, "entries", tuple(MaskEntry(CellIndex(*c), float(t)) for c, t in entries)
        )
        object.__setattr__(self, "strategy", strategy)
        object.__setattr__(self, "rate", rate)
        object.__setattr__(self, "seed", int(seed))

    def __len__(self) -> int:
        return len(self.entries)

    def cells(self) -> list[CellIndex]:
        return [e.cell for e in self.entries]


def validate(dataset: Dataset) -> list[str]:
    """Check every dataset invariant; return human-readable violations.

    An empty list means the dataset is well-formed. Each violation names the
    offending visit/event/feature so callers can locate the bad row. This is
    diagnostic only: nothing is raised.
    """
    problems: list[str] = []
    d = dataset.n_features

    ids = [f.id for f in dataset.features]
    if ids != list(range(d)):
        problems.append(f"feature ids not dense 0..{d - 1}: {ids}")
    names = [f.name for f in dataset.features]
    if len(set(names)) != len(names):
        problems.append("duplicate feature names")

    if dataset.n_visits < 1:
        problems.append("dataset has no visits")

    for i, visit in enumerate(dataset.visits):
        vid = visit.visit_id
        if visit.n_events < 1:
            problems.append(f"visit {vid!r}: no events")
            continue
        if visit.n_features != d:
            problems.append(
                f"visit {vid!r}: events carry {visit.n_features} value slots, expected {d}"
            )
            continue
        times = visit.times
        if np.any(times < 0):
            problems.append(f"visit {vid!r}: negative event time")
        diffs = np.diff(times)
        if np.any(diffs < 0):
            problems.append(f"visit {vid!r}: events not in ascending time order")
        elif np.any(diffs == 0):
            dup = int(times[np.nonzero(diffs == 0)[0][0]])
            problems.append(f"visit {vid!r}: duplicate event time {dup}")
        empty = np.nonzero(~visit.observed().any(axis=1))[0]
        for e in empty:
            problems.append(f"visit {vid!r}: empty event at index {int(e)} (all values missing)")

    return problems


def median_event_count(dataset: Dataset) -> int:
    """Median number of events per visit; lower middle value for even counts.

    Taking the lower order statistic keeps the result a member of the actual
    event-count multiset, so length comparisons against it stay meaningful.
    """
    if dataset.n_visits == 0:
        raise DataError("no visits")
    counts = sorted(v.n_events for v in dataset.visits)
    return counts[(len(counts) - 1) // 2]


def apply_mask(dataset: Dataset, mask: MaskSet) -> Dataset:
    """Return a copy of ``dataset`` with every masked cell set to missing.

    The source dataset is untouched. Masking a cell that is already missing
    is an error: masks must target observed values.
    """
    per_visit: dict[int, list[MaskEntry]] = {}
    for entry in mask.entries:
        per_visit.setdefault(entry.cell.visit, []).append(entry)

    new_visits = []
    for i, visit in enumerate(dataset.visits):
        entries = per_visit.get(i)
        if not entries:
            new_visits.append(visit)
            continue
        values = visit.values.copy()
        for cell, _truth in entries:
            if np.isnan(values[cell.event, cell.feature]):
                raise DataError(f"mask targets missing cell {tuple(cell)}")
            values[cell.event, cell.feature] = np.nan
        new_visits.append(Visit(visit.visit_id, visit.times, values))
    return Dataset(dataset.features, new_visits)


def restore_mask(dataset: Dataset, mask: MaskSet) -> Dataset:
    """Inverse of ``apply_mask``: write every entry's truth back into place."""
    per_visit: dict[int, list[MaskEntry]] = {}
    for entry in mask.entries:
        per_visit.setdefault(entry.cell.visit, []).append(entry)

    new_visits = []
    for i, visit in enumerate(dataset.visits):
        entries = per_visit.get(i)
        if not entries:
            new_visits.append(visit)
            continue
        values = visit.values.copy()
        for cell, truth in entries:
            values[cell.event, cell.feature] = truth
        new_visits.append(Visit(visit.visit_id, visit.times, values))
    return Dataset(dataset.features, new_visits)
