import numpy as np
import pandas as pd
import pytest

from qiforest.datasets import (
    BENCHMARK_DATASETS,
    Dataset,
    dataset_info,
    load_csv,
    load_data,
    load_directory,
    make_linear,
    make_piecewise,
    make_standin,
    make_synthetic,
)
from qiforest.errors import InvalidInput, IoError


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_csv_with_target_last(tmp_path):
    path = write(tmp_path / "tiny.csv", "a,b,target\n1,2,3\n4,5,6\n7,8,9\n")
    dataset = load_csv(path, "target")

    assert dataset.name == "tiny"
    assert dataset.x.shape == (3, 2)
    assert np.array_equal(dataset.y, [3.0, 6.0, 9.0])
    assert dataset.feature_names == ("a", "b")
    assert dataset.source_path == str(path)


def test_target_by_index(tmp_path):
    path = write(tmp_path / "tiny.csv", "y,a,b\n1,2,3\n4,5,6\n")
    assert np.array_equal(load_csv(path, 0).y, [1.0, 4.0])
    assert np.array_equal(load_csv(path, "0").y, [1.0, 4.0])
    assert np.array_equal(load_csv(path, "-1").y, [3.0, 6.0])
    with pytest.raises(InvalidInput):
        load_csv(path, 5)
    with pytest.raises(InvalidInput):
        load_csv(path, "price")


def test_headerless_file(tmp_path):
    path = write(tmp_path / "raw.csv", "1,2,3\n4,5,6\n")
    dataset = load_csv(path, -1, header=False)
    assert dataset.x.shape == (2, 2)
    assert np.array_equal(dataset.y, [3.0, 6.0])


def test_blank_cell_names_the_row(tmp_path):
    path = write(tmp_path / "gap.csv", "a,b,target\n1,2,3\n4,,6\n7,8,9\n")
    with pytest.raises(InvalidInput) as excinfo:
        load_csv(path, "target")
    assert excinfo.value.extra["rows"] == [1]
    assert "data row 1, file line 3" in excinfo.value.detail

    headerless = write(tmp_path / "gap_raw.csv", "1,2,3\n4,,6\n")
    with pytest.raises(InvalidInput) as excinfo:
        load_csv(headerless, -1, header=False)
    assert "data row 1, file line 2" in excinfo.value.detail


def test_non_numeric_cell_is_rejected(tmp_path):
    path = write(tmp_path / "bad.csv", "a,target\n1,2\nx,3\n5,6\n")
    with pytest.raises(InvalidInput) as excinfo:
        load_csv(path, "target")
    assert excinfo.value.extra["rows"] == [1]


def test_text_columns_are_dropped(tmp_path):
    path = write(tmp_path / "named.csv", "city,a,target\nParis,1,2\nOslo,3,4\n")
    dataset = load_csv(path, "target")
    assert dataset.feature_names == ("a",)


def test_no_numeric_features(tmp_path):
    path = write(tmp_path / "names.csv", "city,target\nParis,2\nOslo,4\n")
    with pytest.raises(InvalidInput):
        load_csv(path, "target")


def test_missing_and_empty_files(tmp_path):
    with pytest.raises(IoError):
        load_csv(tmp_path / "absent.csv", "target")
    with pytest.raises(InvalidInput):
        load_csv(write(tmp_path / "empty.csv", ""), "target")
    with pytest.raises(InvalidInput):
        load_csv(write(tmp_path / "header_only.csv", "a,target\n"), "target")


def test_housing_shaped_file(tmp_path, rng):
    frame = pd.DataFrame(rng.standard_normal((505, 14)), columns=[f"c{i}" for i in range(13)] + ["medv"])
    frame.to_csv(tmp_path / "housing.csv", index=False)

    dataset = load_csv(tmp_path / "housing.csv", "medv")
    assert (dataset.n_samples, dataset.n_features) == (505, 13)
    assert np.allclose(dataset.y, frame["medv"].to_numpy())


def test_load_directory(tmp_path):
    write(tmp_path / "b.csv", "a,target\n1,2\n3,4\n")
    write(tmp_path / "a.csv", "a,target\n5,6\n7,8\n")
    write(tmp_path / "notes.txt", "ignored")

    datasets = load_directory(tmp_path, "target")
    assert [d.name for d in datasets] == ["a", "b"]
    assert [d.name for d in load_data(tmp_path, "target")] == ["a", "b"]
    assert [d.name for d in load_data(tmp_path / "b.csv", "target")] == ["b"]


def test_load_directory_errors(tmp_path):
    with pytest.raises(InvalidInput):
        load_directory(tmp_path, "target")
    with pytest.raises(IoError):
        load_directory(tmp_path / "missing", "target")


def test_dataset_validation():
    with pytest.raises(InvalidInput):
        Dataset(name="bad", x=[[1.0], [2.0]], y=[1.0])
    with pytest.raises(InvalidInput):
        Dataset(name="bad", x=[[1.0, 2.0]], y=[1.0], feature_names=("only",))
    assert Dataset(name="ok", x=[[1.0, 2.0]], y=[1.0]).feature_names == ("x0", "x1")


def test_registry():
    assert len(BENCHMARK_DATASETS) == 10
    assert dataset_info("Housing") == dataset_info("housing")
    assert (dataset_info("slump").instances, dataset_info("slump").dimension) == (103, 9)
    with pytest.raises(InvalidInput):
        dataset_info("iris")


def test_standin_has_registered_shape(rng):
    dataset = make_standin("Facebook Metrics", rng)
    assert dataset.name == "facebook-metrics"
    assert (dataset.n_samples, dataset.n_features) == (500, 11)
    assert make_standin("abalone", rng, max_samples=50).n_samples == 50


def test_generators_are_seeded():
    first = make_linear(40, 5, np.random.default_rng(1))
    second = make_linear(40, 5, np.random.default_rng(1))
    assert np.array_equal(first.x, second.x)
    assert np.array_equal(first.y, second.y)

    piecewise = make_piecewise(60, 4, np.random.default_rng(2))
    assert piecewise.x.shape == (60, 4)
    same = make_synthetic(" Piecewise", 60, 4, np.random.default_rng(2))
    assert same.name == "piecewise"
    assert np.array_equal(same.y, piecewise.y)
    with pytest.raises(InvalidInput):
        make_synthetic("cubic", 60, 4, np.random.default_rng(2))
    with pytest.raises(InvalidInput):
        make_linear(1, 3, np.random.default_rng(0))
