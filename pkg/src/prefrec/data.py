"""Feature schemas, tabular datasets, CSV ingestion and a synthetic generator.

A :class:`DatasetSchema` describes every feature of a binary-classification
table: whether it is continuous or categorical, whether the individual can act
on it, directional constraints, the value domain, and the step granularity
used by the recourse search. Datasets always store labels in ``{-1, +1}``
with ``+1`` the favorable outcome.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .validation import DataError, SchemaError, check_instance, check_matrix

KINDS = ("continuous", "categorical")
MONOTONICITIES = ("free", "non_decreasing", "non_increasing")

# Fraction of the domain width used as the step size when none is configured.
DEFAULT_STEP_FRACTION = 0.01


@dataclass(frozen=True)
class FeatureSpec:
    """Per-feature metadata.

    Continuous features need ``domain_min``/``domain_max`` (and optionally
    ``default_step``, which falls back to 1% of the domain width).
    Categorical features need ``allowed_values``, a strictly increasing tuple
    of reals; binary and small ordinal domains are expressed this way.
    """

    name: str
    kind: str = "continuous"
    actionable: bool = True
    monotonicity: str = "free"
    domain_min: float | None = None
    domain_max: float | None = None
    allowed_values: tuple[float, ...] | None = None
    default_step: float | None = None

    def __post_init__(self):
        if not self.name:
            raise SchemaError("feature name must be non-empty")
        if self.kind not in KINDS:
            raise SchemaError(f"{self.name}: unknown kind {self.kind!r}")
        if self.monotonicity not in MONOTONICITIES:
            raise SchemaError(
                f"{self.name}: unknown monotonicity {self.monotonicity!r}"
            )
        if self.kind == "continuous":
            if self.domain_min is None or self.domain_max is None:
                raise SchemaError(f"{self.name}: continuous feature needs min/max")
            if not self.domain_min < self.domain_max:
                raise SchemaError(f"{self.name}: domain_min must be < domain_max")
            if self.default_step is None:
                object.__setattr__(
                    self,
                    "default_step",
                    (self.domain_max - self.domain_min) * DEFAULT_STEP_FRACTION,
                )
            if not 0 < self.default_step <= self.domain_max - self.domain_min:
                raise SchemaError(
                    f"{self.name}: default_step must be in (0, domain width]"
                )
            if self.allowed_values is not None:
                raise SchemaError(f"{self.name}: continuous feature with allowed_values")
        else:
            if not self.allowed_values:
                raise SchemaError(f"{self.name}: categorical feature needs allowed_values")
            values = tuple(float(v) for v in self.allowed_values)
            if len(set(values)) != len(values):
                raise SchemaError(f"{self.name}: allowed_values contains duplicates")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise SchemaError(f"{self.name}: allowed_values must be increasing")
            object.__setattr__(self, "allowed_values", values)
            if self.domain_min is not None or self.domain_max is not None:
                raise SchemaError(f"{self.name}: categorical feature with min/max")
            if self.default_step is not None:
                raise SchemaError(f"{self.name}: categorical feature with default_step")

    @property
    def is_continuous(self) -> bool:
        return self.kind == "continuous"

    @property
    def is_categorical(self) -> bool:
        return self.kind == "categorical"

    @property
    def lower(self) -> float:
        return self.domain_min if self.is_continuous else self.allowed_values[0]

    @property
    def upper(self) -> float:
        return self.domain_max if self.is_continuous else self.allowed_values[-1]

    @property
    def width(self) -> float:
        """Domain width used for min-max scaling; 0 for single-valued domains."""
        if self.is_continuous:
            return self.domain_max - self.domain_min
        return float(len(self.allowed_values) - 1)

    def position(self, value: float) -> int:
        """Index of ``value`` in ``allowed_values`` (categorical only)."""
        arr = np.asarray(self.allowed_values)
        idx = int(np.argmin(np.abs(arr - value)))
        if not np.isclose(arr[idx], value, rtol=0.0, atol=1e-9):
            raise DataError(f"{self.name}: {value!r} is not an allowed value")
        return idx

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "kind": self.kind,
            "actionable": self.actionable,
            "monotonicity": self.monotonicity,
        }
        if self.is_continuous:
            d["min"] = self.domain_min
            d["max"] = self.domain_max
            d["step"] = self.default_step
        else:
            d["values"] = list(self.allowed_values)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpec":
        known = {"name", "kind", "actionable", "monotonicity", "min", "max", "step", "values"}
        unknown = set(d) - known
        if unknown:
            raise SchemaError(f"unknown feature keys: {sorted(unknown)}")
        return cls(
            name=d.get("name", ""),
            kind=d.get("kind", "continuous"),
            actionable=bool(d.get("actionable", True)),
            monotonicity=d.get("monotonicity", "free"),
            domain_min=d.get("min"),
            domain_max=d.get("max"),
            allowed_values=tuple(d["values"]) if "values" in d else None,
            default_step=d.get("step"),
        )


@dataclass(frozen=True)
class DatasetSchema:
    """Ordered feature specs plus the target column description."""

    features: tuple[FeatureSpec, ...]
    target_name: str = "label"
    positive_label: str = "1"
    negative_label: str = "-1"

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")
        if self.target_name in names:
            raise SchemaError("target_name collides with a feature name")
        if not any(f.actionable for f in self.features):
            raise SchemaError("schema needs at least one actionable feature")

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def index(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise SchemaError(f"unknown feature {name!r}")

    def feature(self, name: str) -> FeatureSpec:
        return self.features[self.index(name)]

    @property
    def actionable_indices(self) -> list[int]:
        return [i for i, f in enumerate(self.features) if f.actionable]

    @property
    def continuous_actionable(self) -> list[str]:
        return [f.name for f in self.features if f.actionable and f.is_continuous]

    @property
    def categorical_actionable(self) -> list[str]:
        return [f.name for f in self.features if f.actionable and f.is_categorical]

    def with_actionable(self, names) -> "DatasetSchema":
        """Copy of the schema where exactly ``names`` are actionable."""
        names = set(names)
        unknown = names - set(self.names)
        if unknown:
            raise SchemaError(f"unknown feature(s): {sorted(unknown)}")
        feats = tuple(replace(f, actionable=f.name in names) for f in self.features)
        return replace(self, features=feats)

    def to_dict(self) -> dict:
        return {
            "features": [f.to_dict() for f in self.features],
            "target_name": self.target_name,
            "positive_label": self.positive_label,
            "negative_label": self.negative_label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSchema":
        try:
            feats = tuple(FeatureSpec.from_dict(fd) for fd in d["features"])
        except KeyError as exc:
            raise SchemaError(f"schema config missing key: {exc}") from exc
        return cls(
            features=feats,
            target_name=d.get("target_name", "label"),
            positive_label=str(d.get("positive_label", "1")),
            negative_label=str(d.get("negative_label", "-1")),
        )


def load_schema(path) -> DatasetSchema:
    with open(path, "r", encoding="utf-8") as fh:
        return DatasetSchema.from_dict(json.load(fh))


def save_schema(schema: DatasetSchema, path) -> None:
    Path(path).write_text(
        json.dumps(schema.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


@dataclass(frozen=True)
class Dataset:
    """An (N, D) feature matrix with labels in {-1, +1}.

    Construction clips continuous cells into their domain and rejects
    categorical cells outside ``allowed_values``. Arrays are marked read-only
    so datasets can be shared across concurrent recourse computations.
    """

    schema: DatasetSchema
    X: np.ndarray
    y: np.ndarray
    rejected_rows: int = 0

    def __post_init__(self):
        X = check_matrix(self.X, self.schema.n_features).copy()
        y = np.asarray(self.y, dtype=int).copy()
        if y.shape != (X.shape[0],):
            raise DataError("labels must be one per row")
        if not np.all(np.isin(y, (-1, 1))):
            raise DataError("labels must be -1 or +1")
        for j, spec in enumerate(self.schema.features):
            if spec.is_continuous:
                X[:, j] = np.clip(X[:, j], spec.domain_min, spec.domain_max)
            else:
                allowed = np.asarray(spec.allowed_values)
                ok = np.isclose(X[:, j][:, None], allowed[None, :], atol=1e-9).any(axis=1)
                if not ok.all():
                    bad = X[~ok, j][0]
                    raise DataError(f"{spec.name}: value {bad!r} not in allowed_values")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]


def _parse_cell(text: str, spec: FeatureSpec) -> float:
    value = float(text)
    if spec.is_categorical:
        spec.position(value)  # raises DataError when not allowed
    return value


def load_csv(path, schema: DatasetSchema) -> Dataset:
    """Load a header-ed CSV into a :class:`Dataset`.

    Rows with unparseable cells or categorical values outside the allowed set
    are rejected and counted in ``rejected_rows``; a missing column is a hard
    error. The target column is mapped to +1 when it equals
    ``schema.positive_label`` (string or numeric comparison), to -1 otherwise.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [n for n in schema.names + [schema.target_name] if n not in header]
        if missing:
            raise DataError(f"missing column(s): {missing}")
        rows, labels, rejected = [], [], 0
        for record in reader:
            try:
                row = [_parse_cell(record[f.name], f) for f in schema.features]
            except (DataError, TypeError, ValueError):
                rejected += 1
                continue
            rows.append(row)
            labels.append(1 if _matches_label(record[schema.target_name], schema.positive_label) else -1)
    X = np.asarray(rows, dtype=float).reshape(len(rows), schema.n_features)
    return Dataset(schema, X, np.asarray(labels, dtype=int), rejected_rows=rejected)


def _matches_label(cell: str, positive_label: str) -> bool:
    if cell is None:
        return False
    if cell.strip() == positive_label.strip():
        return True
    try:
        return float(cell) == float(positive_label)
    except ValueError:
        return False


def save_csv(dataset: Dataset, path) -> None:
    """Write a dataset back to CSV with full-precision (round-trippable) floats."""
    schema = dataset.schema
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(schema.names + [schema.target_name])
        for row, label in zip(dataset.X, dataset.y):
            cells = [repr(float(v)) for v in row]
            cells.append(schema.positive_label if label == 1 else schema.negative_label)
            writer.writerow(cells)


def generate_synthetic(
    seed: int, n: int, schema: DatasetSchema, separation: float = 0.1
) -> Dataset:
    """Deterministic linearly separable two-class data for desk-scale tests.

    Every feature contributes its min-max-scaled value to a linear score
    centered at 0; a row labeled ``l`` satisfies ``l * score >= separation/2``
    in units of the maximum achievable |score|, so classes are separated by a
    margin. Target labels alternate row by row, which guarantees both classes
    are present. ``separation`` must lie in [0, 1).
    """
    if n < 10:
        raise ValueError("need n >= 10")
    if not 0 <= separation < 1:
        raise ValueError("separation must be in [0, 1)")
    rng = np.random.default_rng(seed)
    D = schema.n_features
    smax = D / 2.0  # every scaled feature contributes (scaled - 0.5) in [-0.5, 0.5]
    threshold = separation / 2.0 * smax

    def scaled_contrib(row):
        return float(np.sum(min_max_scale(np.asarray(row), schema) - 0.5))

    def sample_row():
        row = []
        for spec in schema.features:
            if spec.is_continuous:
                row.append(rng.uniform(spec.domain_min, spec.domain_max))
            else:
                row.append(float(rng.choice(spec.allowed_values)))
        return row

    rows, labels = [], []
    for i in range(n):
        target = 1 if i % 2 == 0 else -1
        row = None
        for _ in range(200):
            cand = sample_row()
            if target * scaled_contrib(cand) >= threshold:
                row = cand
                break
        if row is None:
            # Construct a feasible row directly: spread the needed score
            # evenly across the continuous features.
            row = sample_row()
            cont = [j for j, f in enumerate(schema.features) if f.is_continuous]
            if not cont:
                raise ValueError("separation unreachable with this schema")
            cat_part = sum(
                _scaled_value(row[j], schema.features[j]) - 0.5
                for j in range(D)
                if j not in cont
            )
            need = target * (threshold + 1e-6) - cat_part
            per = np.clip(need / len(cont), -0.5, 0.5)
            for j in cont:
                spec = schema.features[j]
                row[j] = spec.domain_min + (0.5 + per) * spec.width
            if target * scaled_contrib(row) < threshold:
                raise ValueError("separation unreachable with this schema")
        rows.append(row)
        labels.append(target)
    return Dataset(schema, np.asarray(rows), np.asarray(labels))


def _scaled_value(value: float, spec: FeatureSpec) -> float:
    if spec.width == 0:
        return 0.0
    if spec.is_continuous:
        return (value - spec.domain_min) / spec.width
    return spec.position(value) / spec.width


def min_max_scale(x, schema: DatasetSchema) -> np.ndarray:
    """Scale a vector or matrix into [0, 1]^D.

    Continuous features map linearly over their domain; categorical features
    map to their position in ``allowed_values`` divided by the number of gaps.
    Zero-width domains scale to 0.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    X = check_matrix(arr, schema.n_features)
    out = np.zeros_like(X)
    for j, spec in enumerate(schema.features):
        if spec.width == 0:
            continue
        if spec.is_continuous:
            out[:, j] = (X[:, j] - spec.domain_min) / spec.width
        else:
            out[:, j] = [spec.position(v) / spec.width for v in X[:, j]]
    return out[0] if single else out


def inverse_min_max_scale(u, schema: DatasetSchema, snap_categorical: bool = True) -> np.ndarray:
    """Map scaled coordinates back to raw feature values.

    Categorical coordinates are snapped to the nearest allowed value unless
    ``snap_categorical`` is False, in which case they interpolate linearly
    between the extreme allowed values (useful for gradient-based search).
    """
    arr = np.asarray(u, dtype=float)
    single = arr.ndim == 1
    U = check_matrix(arr, schema.n_features)
    out = np.zeros_like(U)
    for j, spec in enumerate(schema.features):
        if spec.is_continuous:
            out[:, j] = spec.domain_min + np.clip(U[:, j], 0.0, 1.0) * spec.width
        else:
            allowed = np.asarray(spec.allowed_values)
            if snap_categorical:
                pos = np.clip(np.round(U[:, j] * spec.width), 0, len(allowed) - 1)
                out[:, j] = allowed[pos.astype(int)]
            else:
                lo, hi = allowed[0], allowed[-1]
                out[:, j] = lo + np.clip(U[:, j], 0.0, 1.0) * (hi - lo)
    return out[0] if single else out
