"""Competing-risks data model, CSV ingestion and canonical ordering.

Every downstream computation assumes subjects are stored in *descending*
order of follow-up time.  Ties are broken deterministically: at a shared
time cause-1 events come first, then cause-2 events, then censored
observations, then input order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CsvFormatError, DataError, NoPrimaryEventsError

CENSORED, CAUSE1, CAUSE2 = 0, 1, 2

# sort priority among equal times (lower sorts first)
_STATUS_PRIORITY = np.array([2, 0, 1], dtype=np.int64)


@dataclass(frozen=True)
class Subject:
    """One observation: follow-up time, status code and covariates."""

    time: float
    status: int
    covariates: tuple[float, ...]

    def __post_init__(self):
        if not (math.isfinite(self.time) and self.time > 0):
            raise DataError(f"non-positive or non-finite time {self.time!r}")
        if self.status not in (CENSORED, CAUSE1, CAUSE2):
            raise DataError(f"status must be 0, 1 or 2, got {self.status!r}")
        if not all(math.isfinite(v) for v in self.covariates):
            raise DataError("non-finite covariate value")


def _readonly(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """A validated sample sorted by time, descending.

    Attributes
    ----------
    time, status : ndarray, shape (n,)
        Follow-up times and status codes (0 censored, 1 primary, 2 competing).
    Z : ndarray, shape (n, p)
        Covariates, stored column-major so ``Z[:, j]`` is contiguous.
    input_index : ndarray, shape (n,)
        Row position of each subject in the data as supplied.
    tie_rank : ndarray, shape (n,)
        Rank of each subject within its block of tied times.
    group_end : ndarray, shape (n,)
        For position i, the last position holding the same time as i.
    names : tuple of str
        Covariate names.
    """

    time: np.ndarray
    status: np.ndarray
    Z: np.ndarray
    input_index: np.ndarray
    tie_rank: np.ndarray
    group_end: np.ndarray
    names: tuple[str, ...] = field(default=())

    @property
    def n(self) -> int:
        return self.time.shape[0]

    @property
    def p(self) -> int:
        return self.Z.shape[1]

    @property
    def n_primary(self) -> int:
        return int(np.count_nonzero(self.status == CAUSE1))

    def status_counts(self) -> dict[int, int]:
        return {s: int(np.count_nonzero(self.status == s)) for s in (0, 1, 2)}

    def subjects(self) -> list[Subject]:
        return [
            Subject(float(t), int(s), tuple(float(v) for v in z))
            for t, s, z in zip(self.time, self.status, self.Z)
        ]

    def input_order(self) -> np.ndarray:
        """Permutation that puts canonical positions back in input order."""
        return np.argsort(self.input_index, kind="stable")


def from_arrays(time, status, Z, names: Sequence[str] | None = None,
                require_primary: bool = True) -> Dataset:
    """Validate raw arrays (in input order) and return a canonical Dataset."""
    time = np.asarray(time, dtype=np.float64).reshape(-1)
    status_raw = np.asarray(status)
    Z = np.asarray(Z, dtype=np.float64)
    n = time.shape[0]
    if n == 0:
        raise DataError("empty input")
    if Z.ndim == 1:
        Z = Z.reshape(n, -1)
    if Z.ndim != 2 or Z.shape[0] != n:
        raise DataError(f"covariate matrix has shape {Z.shape}, expected ({n}, p)")
    if status_raw.shape != (n,):
        raise DataError("status length does not match time length")
    bad = np.flatnonzero(~(np.isfinite(time) & (time > 0)))
    if bad.size:
        raise DataError(f"non-positive time at row {bad[0] + 1}")
    status_f = status_raw.astype(np.float64)
    bad = np.flatnonzero(~np.isin(status_f, (0.0, 1.0, 2.0)))
    if bad.size:
        raise DataError(f"status not in {{0,1,2}} at row {bad[0] + 1}")
    status = status_f.astype(np.int8)
    bad = np.flatnonzero(~np.isfinite(Z).all(axis=1))
    if bad.size:
        raise DataError(f"non-finite covariate at row {bad[0] + 1}")
    p = Z.shape[1]
    if names is None:
        names = tuple(f"z{j + 1}" for j in range(p))
    names = tuple(names)
    if len(names) != p:
        raise DataError(f"{len(names)} covariate names for {p} columns")
    if require_primary and not np.any(status == CAUSE1):
        raise NoPrimaryEventsError()

    idx = np.arange(n)
    # lexsort: last key is primary
    order = np.lexsort((idx, _STATUS_PRIORITY[status], -time))
    t_sorted = time[order]
    new_block = np.ones(n, dtype=bool)
    new_block[1:] = t_sorted[1:] != t_sorted[:-1]
    block_start = np.maximum.accumulate(np.where(new_block, idx, 0))
    tie_rank = idx - block_start
    block_last = np.empty(n, dtype=bool)
    block_last[:-1] = new_block[1:]
    block_last[-1] = True
    group_end = np.minimum.accumulate(np.where(block_last, idx, n)[::-1])[::-1]

    return Dataset(
        time=_readonly(t_sorted),
        status=_readonly(status[order]),
        Z=_readonly(np.asfortranarray(Z[order])),
        input_index=_readonly(order.astype(np.int64)),
        tie_rank=_readonly(tie_rank.astype(np.int64)),
        group_end=_readonly(group_end.astype(np.int64)),
        names=names,
    )


def canonicalize(subjects: Iterable[Subject] | Dataset,
                 names: Sequence[str] | None = None,
                 require_primary: bool = True) -> Dataset:
    """Sort subjects into canonical descending-time order.

    Accepts a sequence of :class:`Subject` or an existing :class:`Dataset`
    (re-canonicalizing a Dataset returns an equal Dataset).
    """
    if isinstance(subjects, Dataset):
        ds = subjects
        order = ds.input_order()
        out = from_arrays(ds.time[order], ds.status[order], ds.Z[order],
                          names=names or ds.names, require_primary=require_primary)
        # keep the original input labels rather than 0..n-1
        object.__setattr__(out, "input_index",
                           _readonly(ds.input_index[order][out.input_index]))
        return out
    subjects = list(subjects)
    if not subjects:
        raise DataError("empty input")
    p = len(subjects[0].covariates)
    if any(len(s.covariates) != p for s in subjects):
        raise DataError("subjects have differing covariate dimension")
    return from_arrays(
        [s.time for s in subjects],
        [s.status for s in subjects],
        np.array([s.covariates for s in subjects], dtype=np.float64).reshape(len(subjects), p),
        names=names,
        require_primary=require_primary,
    )


def _parse_float(cell, row, col):
    try:
        return float(cell)
    except ValueError:
        raise CsvFormatError(f"non-numeric cell {cell!r}", row=row, column=col) from None


def load_csv(path, require_primary: bool = True) -> Dataset:
    """Read ``ftime,fstatus,z1,...,zp`` rows into a canonical Dataset.

    Raises FileNotFoundError for a missing file and CsvFormatError (with a
    row/column location) for anything malformed.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("empty file", row=1) from None
        header = [h.strip() for h in header]
        if len(header) < 3 or header[0] != "ftime" or header[1] != "fstatus":
            raise CsvFormatError(
                "malformed header, expected 'ftime,fstatus,z1,...,zp'", row=1)
        names = header[2:]
        if len(set(names)) != len(names) or any(not h for h in names):
            raise CsvFormatError("duplicate or empty covariate name", row=1)
        width = len(header)
        times, statuses, rows = [], [], []
        for rownum, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != width:
                raise CsvFormatError(
                    f"expected {width} columns, found {len(rec)}", row=rownum)
            t = _parse_float(rec[0], rownum, 1)
            if not (math.isfinite(t) and t > 0):
                raise CsvFormatError(f"non-positive time {rec[0].strip()}", row=rownum, column=1)
            s = _parse_float(rec[1], rownum, 2)
            if s not in (0.0, 1.0, 2.0):
                raise CsvFormatError(f"fstatus {rec[1].strip()} not in {{0,1,2}}",
                                     row=rownum, column=2)
            z = []
            for c in range(2, width):
                v = _parse_float(rec[c], rownum, c + 1)
                if not math.isfinite(v):
                    raise CsvFormatError("non-finite covariate", row=rownum, column=c + 1)
                z.append(v)
            times.append(t)
            statuses.append(int(s))
            rows.append(z)
    if not times:
        raise CsvFormatError("no data rows")
    if require_primary and CAUSE1 not in statuses:
        raise NoPrimaryEventsError()
    return from_arrays(times, statuses, np.array(rows, dtype=np.float64).reshape(len(rows), -1),
                       names=names, require_primary=require_primary)


def write_csv(ds: Dataset, path, order: str = "input") -> None:
    """Write a dataset as CSV; floats use shortest round-trip repr."""
    if order == "input":
        perm = ds.input_order()
    elif order == "canonical":
        perm = np.arange(ds.n)
    else:
        raise ValueError(f"unknown order {order!r}")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ftime", "fstatus", *ds.names])
        for i in perm:
            w.writerow([repr(float(ds.time[i])), int(ds.status[i]),
                        *(repr(float(v)) for v in ds.Z[i])])
