import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from liprate.data import (
    Dataset,
    Task,
    center_scale_features,
    estimate_k_bound,
    load_csv,
    scale_features,
    write_csv,
)
from liprate.errors import DegenerateFeatureError, DimensionError, ParseError


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_load_regression(tmp_path):
    p = _write(tmp_path, "a,b,target\n1,2,3\n4,5,6\n7,8,9\n")
    ds = load_csv(p, Task.REGRESSION, "target")
    assert ds.m == 3 and ds.n == 2 and ds.task is Task.REGRESSION
    assert np.array_equal(ds.y, [3.0, 6.0, 9.0])
    assert ds.feature_names == ("a", "b")


def test_load_multiclass_one_hot_first_seen(tmp_path):
    p = _write(tmp_path, "x,y\n1,a\n2,b\n3,c\n4,a\n")
    ds = load_csv(p, Task.MULTICLASS, "y")
    assert ds.k == 3
    assert ds.label_names == ("a", "b", "c")
    assert np.array_equal(ds.Y.sum(axis=1), np.ones(4))
    assert np.array_equal(ds.Y.argmax(axis=1), [0, 1, 2, 0])


def test_load_binary_textual_labels(tmp_path):
    p = _write(tmp_path, "x,y\n1,neg\n2,pos\n3,neg\n")
    ds = load_csv(p, Task.BINARY, "y")
    assert np.array_equal(ds.y, [0.0, 1.0, 0.0])
    assert ds.label_names == ("neg", "pos")


def test_load_binary_numeric_labels_keep_meaning(tmp_path):
    p = _write(tmp_path, "x,y\n1,1\n2,0\n")
    ds = load_csv(p, Task.BINARY, "y")
    assert np.array_equal(ds.y, [1.0, 0.0])


def test_ragged_row_names_row(tmp_path):
    p = _write(tmp_path, "a,b,target\n1,2,3\n4,5\n")
    with pytest.raises(ParseError) as exc:
        load_csv(p, Task.REGRESSION, "target")
    assert exc.value.row == 3


def test_unparseable_cell_names_row(tmp_path):
    p = _write(tmp_path, "a,b,target\n1,2,3\n4,oops,6\n")
    with pytest.raises(ParseError) as exc:
        load_csv(p, Task.REGRESSION, "target")
    assert exc.value.row == 3


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(OSError):
        load_csv(tmp_path / "nope.csv", Task.REGRESSION, 0)


def test_target_by_index_no_header(tmp_path):
    p = _write(tmp_path, "1,2,3\n4,5,6\n")
    ds = load_csv(p, Task.REGRESSION, 2, header=False)
    assert np.array_equal(ds.y, [3.0, 6.0])
    assert ds.n == 2


def test_scale_features_examples():
    ds = Dataset(X=np.array([[1.0], [3.0]]), task=Task.REGRESSION, y=np.array([1.0, 2.0]))
    scaled, rec = scale_features(ds)
    assert np.allclose(scaled.X[:, 0], [0.25, 0.75])
    assert np.array_equal(rec.divisors, [4.0])
    assert np.array_equal(scaled.y, ds.y)

    uniform = Dataset(X=np.full((4, 1), 2.0), task=Task.REGRESSION, y=np.zeros(4))
    assert np.allclose(scale_features(uniform)[0].X[:, 0], 0.25)


def test_scale_features_zero_column_rejected():
    ds = Dataset(X=np.array([[0.0], [0.0]]), task=Task.REGRESSION, y=np.zeros(2))
    with pytest.raises(DegenerateFeatureError) as exc:
        scale_features(ds)
    assert exc.value.columns == (0,)


def test_scale_features_columns_sum_to_one(breast_cancer):
    scaled, _ = scale_features(breast_cancer)
    assert np.abs(scaled.X.sum(axis=0) - 1.0).max() <= 1e-12


def test_scale_features_idempotent(iris):
    scaled, _ = scale_features(iris)
    again, rec = scale_features(scaled)
    assert np.abs(rec.divisors - 1.0).max() <= 1e-12
    assert np.abs(again.X - scaled.X).max() <= 1e-12


def test_center_scale_features(iris):
    scaled, rec = center_scale_features(iris)
    assert np.abs(scaled.X.mean(axis=0)).max() <= 1e-12
    assert rec.divisor == np.abs(iris.X).max()


def test_estimate_k_bound_hand_example():
    ds = Dataset(X=np.array([[1.0, 2.0], [3.0, 4.0]]), task=Task.REGRESSION, y=np.zeros(2))
    assert estimate_k_bound(ds) == pytest.approx(4.25, abs=1e-15)


@given(st.integers(2, 8), st.integers(1, 6))
def test_estimate_k_bound_all_ones(m, n):
    ds = Dataset(X=np.ones((m, n)), task=Task.REGRESSION, y=np.zeros(m))
    assert estimate_k_bound(ds) == pytest.approx((n + 1) / 2, rel=1e-12)


def test_estimate_k_bound_after_scaling(iris):
    scaled, _ = scale_features(iris)
    a = scaled.X.mean(axis=0).sum()
    assert a == pytest.approx(scaled.n / scaled.m, rel=1e-12)


@given(
    arrays(np.float64, (6, 3), elements=st.floats(0.1, 50, allow_nan=False)),
    st.permutations(list(range(6))),
)
@settings(max_examples=50)
def test_estimate_k_bound_row_permutation_invariant(X, perm):
    ds = Dataset(X=X, task=Task.REGRESSION, y=np.zeros(6))
    shuffled = Dataset(X=X[perm], task=Task.REGRESSION, y=np.zeros(6))
    assert estimate_k_bound(ds) == pytest.approx(estimate_k_bound(shuffled), rel=1e-12)


@pytest.mark.parametrize("name,task,target", [
    ("iris.csv", Task.MULTICLASS, "species"),
    ("breast_cancer.csv", Task.BINARY, "diagnosis"),
    ("synth_linreg.csv", Task.REGRESSION, "target"),
])
def test_csv_round_trip_bit_identical(data_dir, tmp_path, name, task, target):
    ds = load_csv(data_dir / name, task, target)
    out = tmp_path / name
    write_csv(ds, out)
    again = load_csv(out, task, "target")
    assert np.array_equal(ds.X, again.X)
    if task is Task.MULTICLASS:
        assert np.array_equal(ds.Y, again.Y)
    else:
        assert np.array_equal(ds.y, again.y)


def test_degenerate_columns_flagged(digits):
    bad = digits.degenerate_columns()
    assert bad, "the image set has always-off pixels"
    cleaned = digits.drop_columns(bad)
    assert cleaned.n == digits.n - len(bad)
    scale_features(cleaned)  # no error after dropping


def test_dataset_invariants():
    with pytest.raises(DimensionError):
        Dataset(X=np.ones((2, 2)), task=Task.BINARY, y=np.array([0.0, 2.0]))
    with pytest.raises(DimensionError):
        Dataset(X=np.ones((2, 2)), task=Task.REGRESSION, y=np.array([1.0]))
    with pytest.raises(DimensionError):
        Dataset(X=np.ones((2, 2)), task=Task.MULTICLASS, Y=np.array([[0.5, 0.5], [1.0, 0.0]]))
