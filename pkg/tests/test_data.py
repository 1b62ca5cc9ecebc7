import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tprocess.data import Dataset, format_float, parse_dataset, read_dataset, write_dataset
from tprocess.exceptions import DataError
from tprocess.geometry import Sites


def test_header_kinds():
    ds = read_dataset("lon,lat,x1,y\n10,20,0.5,1\n")
    assert ds.kind == "spherical" and ds.covariates.shape == (1, 1)
    ds = read_dataset("x,y,t,x1,x2,y\n0,0,1,2,3,4\n")
    assert ds.kind == "spacetime" and ds.covariates.shape == (1, 2)
    assert ds.sites.times[0] == 1.0 and ds.y[0] == 4.0
    ds = read_dataset("x,obs\n0.5,1\n1.5,2\n")
    assert ds.kind == "euclidean" and ds.sites.dim == 1 and ds.covariates.shape == (2, 0)


def test_design_matrix():
    ds = read_dataset("x,y,a,y\n0,0,3,1\n1,1,5,2\n")
    assert ds.names == ("a",)
    assert np.array_equal(ds.X, [[1, 3], [1, 5]])
    assert read_dataset("x,y,a,y\n0,0,3,1\n", intercept=False).X.shape == (1, 1)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(*[st.floats(-1e6, 1e6, allow_subnormal=False)] * 4),
                min_size=1, max_size=8))
def test_round_trip_exact(rows):
    arr = np.array(rows)
    ds = Dataset(Sites(arr[:, :2]), arr[:, 2:3], arr[:, 3])
    back = read_dataset(ds.to_csv())
    assert np.array_equal(back.sites.coords, ds.sites.coords)
    assert np.array_equal(back.covariates, ds.covariates)
    assert np.array_equal(back.y, ds.y)


def test_format_float_round_trips():
    for v in (0.1, 1 / 3, -2.5e-300, 1e308, math.pi):
        assert float(format_float(v)) == v


def test_file_round_trip(tmp_path):
    ds = read_dataset("x,y,t,y\n0,1,2,3\n4,5,6,7\n")
    write_dataset(tmp_path / "d.csv", ds)
    back = parse_dataset(tmp_path / "d.csv")
    assert back.kind == "spacetime"
    assert np.array_equal(back.sites.times, [2, 6])


def test_empty_and_header_only():
    with pytest.raises(DataError, match="empty"):
        read_dataset("")
    with pytest.raises(DataError, match="no data"):
        read_dataset("x,y\n")


def test_malformed_row_reports_line():
    with pytest.raises(DataError, match="line 3"):
        read_dataset("x,y\n0,1\n1,abc\n")
    with pytest.raises(DataError, match="line 2"):
        read_dataset("x,y\n0,1,2\n")


def test_missing_observations():
    with pytest.raises(DataError, match="missing"):
        read_dataset("x,y\n0,\n")
    ds = read_dataset("x,y\n0,NA\n1,2\n", allow_missing=True)
    assert math.isnan(ds.y[0]) and ds.y[1] == 2
    assert ds.to_csv().splitlines()[1] == "0,"


def test_missing_coordinate_rejected():
    with pytest.raises(DataError):
        read_dataset("x,y\n,1\n", allow_missing=True)


def test_mixed_coordinate_columns():
    with pytest.raises(DataError):
        read_dataset("x,lat,y\n0,1,2\n")
    with pytest.raises(DataError):
        read_dataset("a,b,y\n0,1,2\n")


def test_lonlat_range():
    with pytest.raises(DataError, match="line 3"):
        read_dataset("lon,lat,y\n0,0,1\n0,95,1\n")


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        parse_dataset(tmp_path / "absent.csv")


def test_subset():
    ds = read_dataset("x,a,y\n0,1,2\n3,4,5\n6,7,8\n")
    sub = ds.subset([2, 0])
    assert np.array_equal(sub.y, [8, 2]) and np.array_equal(sub.covariates[:, 0], [7, 1])


def test_spherical_station_file():
    rng = np.random.default_rng(446)
    rows = ["lon,lat,x1,y"] + [",".join(f"{v:.6f}" for v in r) for r in
                               np.column_stack([rng.uniform(-180, 180, 446),
                                                rng.uniform(-90, 90, 446),
                                                rng.normal(size=(446, 2))])]
    ds = read_dataset("\n".join(rows) + "\n")
    assert ds.kind == "spherical" and len(ds) == 446 and ds.covariates.shape == (446, 1)
