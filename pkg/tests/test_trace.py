import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stair.trace import (
    SensorTrace,
    TraceError,
    generate_synthetic_trace,
    load_trace,
    save_trace,
    windowize,
)


def _write(tmp_path, text):
    p = tmp_path / "trace.csv"
    p.write_text(text)
    return p


def test_load_simple_csv(tmp_path):
    p = _write(tmp_path, "timestamp,3,7\n0,1.5,2.5\n30,1.0,2.0\n60,0.5,-1e3\n")
    tr = load_trace(p)
    assert tr.n_steps == 3 and tr.n_locations == 2
    assert tr.location_ids == [3, 7]
    assert tr.step_period == 30
    assert tr.dropped == 0


def test_load_drops_nan_row(tmp_path):
    p = _write(tmp_path, "# comment\ntimestamp,0,1\n0,1,2\n1,NaN,2\n2,3,4\n")
    tr = load_trace(p)
    assert tr.n_steps == 2
    assert tr.dropped == 1
    np.testing.assert_array_equal(tr.readings, [[1, 2], [3, 4]])


def test_load_drops_short_and_garbage_rows(tmp_path):
    p = _write(tmp_path, "timestamp,0,1\n0,1,2\n1,2\n2,x,4\n3,,5\n4,5,6\n")
    tr = load_trace(p)
    assert tr.dropped == 3
    assert tr.n_steps == 2


def test_load_sorts_by_timestamp(tmp_path):
    p = _write(tmp_path, "timestamp,0,1\n2,3,3\n0,1,1\n1,2,2\n")
    np.testing.assert_array_equal(load_trace(p).readings[:, 0], [1, 2, 3])


@pytest.mark.parametrize(
    "text, msg",
    [
        ("", "zero usable rows"),
        ("# only a comment\n", "zero usable rows"),
        ("timestamp,0,1\n0,nan,1\n", "zero usable rows"),
        ("timestamp,0,0\n0,1,1\n", "duplicate"),
    ],
)
def test_load_errors(tmp_path, text, msg):
    with pytest.raises(TraceError, match=msg):
        load_trace(_write(tmp_path, text))


def test_load_missing_file(tmp_path):
    with pytest.raises(TraceError, match="unreadable"):
        load_trace(tmp_path / "nope.csv")


def test_save_load_round_trip(tmp_path):
    tr = generate_synthetic_trace(3, nl=4, n_steps=50)
    save_trace(tr, tmp_path / "t.csv")
    back = load_trace(tmp_path / "t.csv")
    np.testing.assert_array_equal(back.readings, tr.readings)
    assert back.location_ids == tr.location_ids


def test_generator_is_deterministic():
    a = generate_synthetic_trace(11, nl=5, n_steps=300)
    b = generate_synthetic_trace(11, nl=5, n_steps=300)
    np.testing.assert_array_equal(a.readings, b.readings)
    assert not np.array_equal(a.readings, generate_synthetic_trace(12, nl=5, n_steps=300).readings)


def test_generator_independent_when_uncorrelated():
    tr = generate_synthetic_trace(5, nl=6, n_steps=10000, spatial_corr=0.0, temporal_corr=0.0)
    r = np.corrcoef(tr.readings.T)
    off = r[~np.eye(6, dtype=bool)]
    assert np.max(np.abs(off)) < 0.1


def test_generator_autocorrelation():
    tr = generate_synthetic_trace(5, nl=4, n_steps=10000, temporal_corr=0.99)
    x = tr.readings
    for j in range(4):
        assert np.corrcoef(x[:-1, j], x[1:, j])[0, 1] > 0.9


@pytest.mark.parametrize(
    "kwargs",
    [dict(nl=1), dict(n_steps=0), dict(temporal_corr=1.0), dict(temporal_corr=-0.1), dict(spatial_corr=-1.0)],
)
def test_generator_rejects_bad_params(kwargs):
    with pytest.raises(TraceError):
        generate_synthetic_trace(0, **{"nl": 3, "n_steps": 10, **kwargs})


def test_windowize_counts():
    tr = generate_synthetic_trace(0, nl=3, n_steps=40)
    train, test = windowize(tr, 20, 0.5)
    assert (train.n, test.n) == (1, 1)

    tr = generate_synthetic_trace(0, nl=3, n_steps=45)
    train, test = windowize(tr, 20, 0.5)
    assert train.n + test.n == 2


def test_windowize_indexing():
    tr = generate_synthetic_trace(0, nl=4, n_steps=100)
    train, test = windowize(tr, 10, 0.3)
    assert train.n == 3
    # slot 2, location 3 of window w is step w * t + 1
    for w in range(train.n):
        assert train.data[w, train.column(2, 3)] == tr.readings[w * 10 + 1, 3]
    assert test.data[0, test.column(1, 0)] == tr.readings[30, 0]


def test_windowize_too_short():
    tr = generate_synthetic_trace(0, nl=3, n_steps=39)
    with pytest.raises(TraceError, match="too few"):
        windowize(tr, 20, 0.5)


def test_variables_are_slot_major_bijection():
    tr = generate_synthetic_trace(0, nl=3, n_steps=40)
    train, _ = windowize(tr, 4, 0.5)
    v = train.variables
    assert len(v) == train.data.shape[1] == 12
    assert set(v) == {(s, l) for s in range(1, 5) for l in range(3)}
    assert v[:4] == [(1, 0), (1, 1), (1, 2), (2, 0)]
    assert [train.column(*p) for p in v] == list(range(12))


@settings(max_examples=30, deadline=None)
@given(
    nl=st.integers(2, 5),
    t=st.integers(1, 6),
    n_steps=st.integers(12, 80),
    frac=st.floats(0.05, 0.95),
)
def test_windowize_is_lossless(nl, t, n_steps, frac):
    tr = generate_synthetic_trace(1, nl=nl, n_steps=n_steps)
    n_windows = n_steps // t
    try:
        train, test = windowize(tr, t, frac)
    except TraceError:
        assert n_windows < 2 or np.ceil(frac * n_windows) >= n_windows
        return
    rebuilt = np.vstack([train.location_series(), test.location_series()])
    np.testing.assert_array_equal(rebuilt, tr.readings[: n_windows * t])


def test_trace_rejects_duplicate_ids():
    with pytest.raises(TraceError):
        SensorTrace([1, 1], np.zeros((3, 2)))
