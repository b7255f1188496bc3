import json

import numpy as np
import pytest

from bcgwr.data import RegressionData, encode_covariates, read_data_csv, write_data_csv
from bcgwr.errors import DataError
from bcgwr.geometry import lattice_frame


def test_one_hot_with_sorted_baseline():
    X, names, groups = encode_covariates({"age": [1.0, 2.0, 3.0], "sex": ["m", "f", "m"]},
                                         {"sex": "categorical"})
    assert names == ["age", "sex[m]"]
    np.testing.assert_array_equal(X[:, 1], [1, 0, 1])
    assert groups == (("sex", [1]),)


def test_three_levels():
    X, names, _ = encode_covariates({"c": ["b", "a", "c", "a"]}, {"c": "categorical"})
    assert names == ["c[b]", "c[c]"]
    np.testing.assert_array_equal(X, [[1, 0], [0, 0], [0, 1], [0, 0]])


def test_bad_continuous():
    with pytest.raises(DataError):
        encode_covariates({"x": ["a", "b"]})


def test_single_level_categorical():
    with pytest.raises(DataError):
        encode_covariates({"c": ["a", "a"]}, {"c": "categorical"})


def test_shape_checks():
    with pytest.raises(DataError):
        RegressionData(np.zeros(3), np.zeros((2, 1)), np.zeros(3, int))
    with pytest.raises(DataError):
        RegressionData(np.array([np.nan]), np.zeros((1, 1)), np.zeros(1, int))


def test_csv_round_trip(tmp_path, rng):
    frame = lattice_frame(2, 2)
    data = RegressionData(rng.normal(size=8), rng.normal(size=(8, 2)), np.repeat(np.arange(4), 2))
    write_data_csv(data, frame, tmp_path / "d.csv")
    back = read_data_csv(tmp_path / "d.csv", frame)
    np.testing.assert_array_equal(back.y, data.y)
    np.testing.assert_array_equal(back.X, data.X)
    np.testing.assert_array_equal(back.obs_region, data.obs_region)


def test_sidecar_schema(tmp_path):
    frame = lattice_frame(1, 2)
    p = tmp_path / "d.csv"
    p.write_text("region_id,y,x,grp\nR001,1.0,0.5,a\nR002,2.0,0.1,b\nR001,0.3,0.2,b\n")
    (tmp_path / "d.schema.json").write_text(json.dumps({"grp": "categorical"}))
    data = read_data_csv(p, frame)
    assert data.names == ("x", "grp[b]")
    assert data.categorical_groups == (("grp", [1]),)
    np.testing.assert_array_equal(data.obs_region, [0, 1, 0])


def test_unknown_region(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("region_id,y,x\nZZZ,1.0,0.5\n")
    with pytest.raises(DataError, match="ZZZ"):
        read_data_csv(p, lattice_frame(1, 2))


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="absent.csv"):
        read_data_csv(tmp_path / "absent.csv", lattice_frame(1, 2))
