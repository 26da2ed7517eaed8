import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fgscan.dataset import Subject, canonicalize, from_arrays, load_csv, write_csv
from fgscan.errors import CsvFormatError, DataError, NoPrimaryEventsError


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_sorted_descending():
    ds = from_arrays([1.0, 5.0, 3.0], [1, 0, 2], [[0.1], [0.2], [0.3]])
    assert ds.time.tolist() == [5.0, 3.0, 1.0]
    assert ds.status.tolist() == [0, 2, 1]
    assert ds.input_index.tolist() == [1, 2, 0]


def test_tie_rule_event_before_censored():
    ds = from_arrays([2.0, 2.0], [0, 1], [[0.0], [1.0]])
    assert ds.status.tolist() == [1, 0]


def test_tie_rule_full_priority():
    ds = from_arrays([2.0] * 6, [0, 2, 1, 0, 2, 1], np.arange(6.0)[:, None])
    assert ds.status.tolist() == [1, 1, 2, 2, 0, 0]
    # input order breaks remaining ties
    assert ds.input_index.tolist() == [2, 5, 1, 4, 0, 3]
    assert ds.tie_rank.tolist() == [0, 1, 2, 3, 4, 5]
    assert ds.group_end.tolist() == [5] * 6


def test_group_end_mixed():
    ds = from_arrays([3.0, 1.0, 3.0, 2.0], [1, 1, 0, 1], np.zeros((4, 1)))
    assert ds.time.tolist() == [3.0, 3.0, 2.0, 1.0]
    assert ds.group_end.tolist() == [1, 1, 2, 3]
    assert ds.tie_rank.tolist() == [0, 1, 0, 0]


def test_arrays_read_only():
    ds = from_arrays([1.0, 2.0], [1, 0], [[0.0], [1.0]])
    with pytest.raises(ValueError):
        ds.time[0] = 3.0
    with pytest.raises(ValueError):
        ds.Z[0, 0] = 3.0


@pytest.mark.parametrize("time,status,msg", [
    ([1.0, 0.0], [1, 0], "non-positive"),
    ([1.0, -2.0], [1, 0], "non-positive"),
    ([1.0, np.nan], [1, 0], "non-positive"),
    ([1.0, 2.0], [1, 3], "status"),
])
def test_from_arrays_rejects(time, status, msg):
    with pytest.raises(DataError, match=msg):
        from_arrays(time, status, np.zeros((2, 1)))


def test_no_primary_events():
    with pytest.raises(NoPrimaryEventsError, match="no primary events"):
        from_arrays([1.0, 2.0], [0, 2], np.zeros((2, 1)))
    ds = from_arrays([1.0, 2.0], [0, 2], np.zeros((2, 1)), require_primary=False)
    assert ds.n_primary == 0


def test_subject_validation():
    with pytest.raises(DataError):
        Subject(0.0, 1, (1.0,))
    with pytest.raises(DataError):
        Subject(1.0, 5, (1.0,))
    with pytest.raises(DataError):
        Subject(1.0, 1, (float("inf"),))


def test_canonicalize_subjects_matches_arrays():
    subs = [Subject(2.0, 1, (0.5,)), Subject(4.0, 0, (1.5,)), Subject(2.0, 2, (2.5,))]
    a = canonicalize(subs)
    b = from_arrays([2.0, 4.0, 2.0], [1, 0, 2], [[0.5], [1.5], [2.5]])
    assert np.array_equal(a.time, b.time)
    assert np.array_equal(a.Z, b.Z)
    assert a.subjects() == b.subjects()


@given(st.lists(st.tuples(st.integers(1, 6), st.integers(0, 2), st.floats(-5, 5)),
                min_size=1, max_size=40))
def test_canonicalize_idempotent(rows):
    t = [float(r[0]) for r in rows]
    s = [r[1] for r in rows]
    z = [[r[2]] for r in rows]
    ds = from_arrays(t, s, z, require_primary=False)
    again = canonicalize(ds, require_primary=False)
    for name in ("time", "status", "Z", "input_index", "tie_rank", "group_end"):
        assert np.array_equal(getattr(ds, name), getattr(again, name)), name
    # strict total order on (time desc, tie_rank)
    key = list(zip(-ds.time, ds.tie_rank))
    assert key == sorted(key) and len(set(key)) == len(key)
    # input order recovers the rows as supplied
    back = ds.input_order()
    assert ds.time[back].tolist() == t


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    n = 50
    t = rng.exponential(size=n) + 1e-3
    s = rng.integers(0, 3, n)
    s[0] = 1
    Z = rng.standard_normal((n, 3)) * 10.0 ** rng.integers(-8, 8, (n, 3))
    ds = from_arrays(t, s, Z, names=["a", "b", "c"])
    path = tmp_path / "rt.csv"
    write_csv(ds, path)
    back = load_csv(path)
    assert back.names == ("a", "b", "c")
    assert np.array_equal(back.time, ds.time)
    assert np.array_equal(back.Z, ds.Z)
    assert np.array_equal(back.status, ds.status)
    write_csv(ds, tmp_path / "c.csv", order="canonical")
    assert np.array_equal(load_csv(tmp_path / "c.csv").time, ds.time)


def test_csv_scientific_notation(tmp_path):
    p = _write(tmp_path, "ftime,fstatus,z1\n1e-3,1,2.5E+2\n 2 , 0 ,-1\n")
    ds = load_csv(p)
    assert ds.time.tolist() == [2.0, 1e-3]
    assert ds.Z[:, 0].tolist() == [-1.0, 250.0]


@pytest.mark.parametrize("text,row,col", [
    ("time,fstatus,z1\n1,1,0\n", 1, None),
    ("ftime,fstatus\n1,1\n", 1, None),
    ("ftime,fstatus,z1\n1,1,0\n2,abc,0\n", 3, 2),
    ("ftime,fstatus,z1\n1,1,0\n0,1,0\n", 3, 1),
    ("ftime,fstatus,z1\n1,1,0\n2,3,0\n", 3, 2),
    ("ftime,fstatus,z1\n1,1,0\n2,1\n", 3, None),
    ("ftime,fstatus,z1\n1,1,x\n", 2, 3),
    ("", 1, None),
])
def test_csv_errors_located(tmp_path, text, row, col):
    p = _write(tmp_path, text)
    with pytest.raises(CsvFormatError) as info:
        load_csv(p)
    assert info.value.row == row
    assert info.value.column == col
    assert f"row {row}" in str(info.value)


def test_csv_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "absent.csv")


def test_csv_no_primary(tmp_path):
    p = _write(tmp_path, "ftime,fstatus,z1\n1,0,0\n2,2,1\n")
    with pytest.raises(NoPrimaryEventsError):
        load_csv(p)
    assert load_csv(p, require_primary=False).n == 2
