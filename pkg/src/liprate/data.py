"""CSV ingestion, feature scaling, and the weight-bound heuristic.

Scaling modes:

* ``sum_to_one`` — divide every feature column by its (signed) sum, the
  protocol used for the classical-model experiments.  Columns whose sum is
  within 1e-12 of zero are degenerate and rejected.
* ``center_max`` — subtract the per-column mean, then divide everything by
  the largest absolute raw value (the image recipe: remove means, divide
  by the peak value).
* ``none`` — leave features untouched.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFeatureError, DimensionError, ParseError
from .numeric import as_matrix

DEGENERATE_TOL = 1e-12


class Task(str, enum.Enum):
    REGRESSION = "regression"
    BINARY = "binary"
    MULTICLASS = "multiclass"


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus targets for one task.

    ``y`` holds regression targets or 0/1 binary labels; ``Y`` holds the
    one-hot matrix for multiclass (built in first-seen label order, which
    ``label_names`` records).
    """

    X: np.ndarray
    task: Task
    y: np.ndarray | None = None
    Y: np.ndarray | None = None
    label_names: tuple[str, ...] | None = None
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = as_matrix(self.X)
        object.__setattr__(self, "X", X)
        if self.task is Task.MULTICLASS:
            if self.Y is None:
                raise DimensionError("multiclass dataset needs one-hot targets")
            Y = as_matrix(self.Y)
            object.__setattr__(self, "Y", Y)
            if Y.shape[0] != X.shape[0]:
                raise DimensionError("target rows do not match feature rows")
            if Y.shape[1] < 2:
                raise DimensionError("multiclass needs at least 2 classes")
            if not np.array_equal(Y.sum(axis=1), np.ones(len(Y))):
                raise DimensionError("one-hot rows must sum to exactly 1")
        else:
            if self.y is None:
                raise DimensionError("dataset needs a target vector")
            y = np.asarray(self.y, dtype=np.float64)
            object.__setattr__(self, "y", y)
            if y.shape != (X.shape[0],):
                raise DimensionError("target length does not match feature rows")
            if self.task is Task.BINARY and not np.all(np.isin(y, (0.0, 1.0))):
                raise DimensionError("binary labels must be 0 or 1")

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def k(self) -> int:
        """Class count: 2 for binary, one-hot width for multiclass."""
        if self.task is Task.MULTICLASS:
            return self.Y.shape[1]
        if self.task is Task.BINARY:
            return 2
        raise DimensionError("regression task has no class count")

    def targets(self) -> np.ndarray:
        return self.Y if self.task is Task.MULTICLASS else self.y

    def class_indices(self) -> np.ndarray:
        """Integer class labels (argmax of one-hot for multiclass)."""
        if self.task is Task.MULTICLASS:
            return self.Y.argmax(axis=1)
        if self.task is Task.BINARY:
            return self.y.astype(int)
        raise DimensionError("regression task has no class labels")

    def degenerate_columns(self) -> tuple[int, ...]:
        """Indices of columns whose sum is within tolerance of zero."""
        sums = self.X.sum(axis=0)
        return tuple(int(j) for j in np.flatnonzero(np.abs(sums) < DEGENERATE_TOL))

    def select_rows(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            X=self.X[idx],
            task=self.task,
            y=None if self.y is None else self.y[idx],
            Y=None if self.Y is None else self.Y[idx],
            label_names=self.label_names,
            feature_names=self.feature_names,
        )

    def drop_columns(self, cols) -> "Dataset":
        keep = [j for j in range(self.n) if j not in set(cols)]
        names = None
        if self.feature_names is not None:
            names = tuple(self.feature_names[j] for j in keep)
        return Dataset(
            X=self.X[:, keep],
            task=self.task,
            y=self.y,
            Y=self.Y,
            label_names=self.label_names,
            feature_names=names,
        )


@dataclass(frozen=True)
class ScalingRecord:
    """Per-feature divisors of the sum-to-one scaling."""

    divisors: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.divisors, dtype=np.float64)
        if np.any(d == 0):
            raise DegenerateFeatureError("scaling divisors must be nonzero")
        object.__setattr__(self, "divisors", d)


@dataclass(frozen=True)
class CenterScaleRecord:
    """Per-feature offsets and the single divisor of the center_max scaling."""

    offsets: np.ndarray
    divisor: float


def _parse_cell(text: str, row: int, col: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(
            f"row {row}: cannot parse cell {col!r} value {text!r} as a number",
            row=row,
        ) from None


def load_csv(path, task: Task | str, target, header: bool = True) -> Dataset:
    """Read a comma-separated file into a Dataset.

    ``target`` selects the target column by name (requires a header) or
    0-based index.  Multiclass labels are one-hot encoded in first-seen
    order; binary labels may be literal 0/1 or any two symbols (first seen
    becomes 0).
    """
    task = Task(task)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty file", row=0)

    names = None
    if header:
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise ParseError("no data rows after header", row=1)

    width = len(rows[0])
    if isinstance(target, str):
        if names is None:
            raise ParseError(f"target column {target!r} needs a header row")
        try:
            tcol = names.index(target)
        except ValueError:
            raise ParseError(f"no column named {target!r} in header") from None
    else:
        tcol = int(target)
        if tcol < 0:
            tcol += width
    if not 0 <= tcol < width:
        raise ParseError(f"target column {target} out of range for width {width}")

    feats: list[list[float]] = []
    raw_targets: list[str] = []
    for i, row in enumerate(rows):
        rownum = i + (2 if header else 1)
        if len(row) != width:
            raise ParseError(
                f"row {rownum}: expected {width} cells, got {len(row)}", row=rownum
            )
        raw_targets.append(row[tcol].strip())
        feats.append(
            [_parse_cell(c, rownum, j) for j, c in enumerate(row) if j != tcol]
        )

    X = np.asarray(feats, dtype=np.float64)
    feature_names = None
    if names is not None:
        feature_names = tuple(n for j, n in enumerate(names) if j != tcol)

    if task is Task.REGRESSION:
        y = np.asarray(
            [_parse_cell(t, i + (2 if header else 1), tcol) for i, t in enumerate(raw_targets)]
        )
        return Dataset(X=X, task=task, y=y, feature_names=feature_names)

    # classification: map labels in first-seen order
    order: list[str] = []
    for t in raw_targets:
        if t not in order:
            order.append(t)
    if task is Task.BINARY:
        if len(order) != 2:
            raise ParseError(
                f"binary task needs exactly 2 distinct labels, found {len(order)}"
            )
        if set(order) == {"0", "1"}:
            mapping = {"0": 0.0, "1": 1.0}
        else:
            mapping = {order[0]: 0.0, order[1]: 1.0}
        y = np.asarray([mapping[t] for t in raw_targets])
        lab = tuple(sorted(mapping, key=mapping.get))
        return Dataset(X=X, task=task, y=y, label_names=lab, feature_names=feature_names)

    if len(order) < 2:
        raise ParseError("multiclass task needs at least 2 distinct labels")
    Y = np.zeros((len(raw_targets), len(order)))
    for i, t in enumerate(raw_targets):
        Y[i, order.index(t)] = 1.0
    return Dataset(X=X, task=task, Y=Y, label_names=tuple(order), feature_names=feature_names)


def write_csv(dataset: Dataset, path, float_format=repr) -> None:
    """Write a Dataset back out; inverse of load_csv for round-trips."""
    names = dataset.feature_names or tuple(
        f"x{j}" for j in range(dataset.n)
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(names) + ["target"])
        if dataset.task is Task.MULTICLASS:
            labels = dataset.label_names or tuple(
                str(i) for i in range(dataset.k)
            )
            tcol = [labels[i] for i in dataset.Y.argmax(axis=1)]
        elif dataset.task is Task.BINARY and dataset.label_names:
            tcol = [dataset.label_names[int(v)] for v in dataset.y]
        else:
            tcol = [float_format(float(v)) for v in dataset.y]
        for i in range(dataset.m):
            w.writerow([float_format(float(v)) for v in dataset.X[i]] + [tcol[i]])


def scale_features(dataset: Dataset) -> tuple[Dataset, ScalingRecord]:
    """Divide each feature column by its sum so every column sums to 1."""
    sums = dataset.X.sum(axis=0)
    bad = np.flatnonzero(np.abs(sums) < DEGENERATE_TOL)
    if bad.size:
        raise DegenerateFeatureError(
            f"column sums within {DEGENERATE_TOL} of zero at indices {bad.tolist()}; "
            "drop these columns before scaling",
            columns=bad.tolist(),
        )
    scaled = Dataset(
        X=dataset.X / sums,
        task=dataset.task,
        y=dataset.y,
        Y=dataset.Y,
        label_names=dataset.label_names,
        feature_names=dataset.feature_names,
    )
    return scaled, ScalingRecord(divisors=sums)


def center_scale_features(dataset: Dataset) -> tuple[Dataset, CenterScaleRecord]:
    """Remove per-column means, then divide by the largest absolute raw value."""
    offsets = dataset.X.mean(axis=0)
    peak = float(np.abs(dataset.X).max()) if dataset.X.size else 0.0
    if peak < DEGENERATE_TOL:
        raise DegenerateFeatureError("all-zero feature matrix cannot be scaled")
    scaled = Dataset(
        X=(dataset.X - offsets) / peak,
        task=dataset.task,
        y=dataset.y,
        Y=dataset.Y,
        label_names=dataset.label_names,
        feature_names=dataset.feature_names,
    )
    return scaled, CenterScaleRecord(offsets=offsets, divisor=peak)


def apply_scaling(dataset: Dataset, mode: str) -> Dataset:
    """Dispatch on scaling-mode name; 'none' is a no-op."""
    if mode == "none":
        return dataset
    if mode == "sum_to_one":
        return scale_features(dataset)[0]
    if mode == "center_max":
        return center_scale_features(dataset)[0]
    raise ValueError(f"unknown scaling mode {mode!r}")


def estimate_k_bound(dataset: Dataset) -> float:
    """Weight-bound heuristic K = (a + b) / 2.

    ``a`` sums the per-column means, ``b`` averages the per-column maxima.
    """
    X = dataset.X
    if X.size == 0:
        raise DimensionError("empty feature matrix")
    a = float(X.mean(axis=0).sum())
    b = float(X.max(axis=0).mean())
    return (a + b) / 2.0
