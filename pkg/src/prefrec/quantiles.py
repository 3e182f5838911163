"""Empirical percentile tables, the substrate of the percentile-shift cost.

``Q_i(v)`` is the midpoint-rule empirical CDF of feature ``i``:
``(#{samples < v} + 0.5 * #{samples = v}) / N``. The same rule serves both
continuous features (over their sample column) and categorical features (over
value frequencies), so percentile shifts are uniformly defined. Values below
the sample minimum map to 0 and above the maximum to 1; downstream cost code
applies its own clamping.
"""

from __future__ import annotations

import warnings

import numpy as np

from .data import Dataset, DatasetSchema
from .validation import DataError


class DegenerateFeatureWarning(UserWarning):
    """A feature is constant in the fitted sample, so percentile shifts on it
    are meaningless and acting on it is pointless in practice."""


class QuantileTable:
    """Per-feature empirical percentile functions fitted on a dataset.

    Parameters
    ----------
    schema : DatasetSchema
    columns : sequence of 1-D arrays, one sorted sample column per feature.
    """

    def __init__(self, schema: DatasetSchema, columns):
        if len(columns) != schema.n_features:
            raise DataError("one sample column per feature required")
        self.schema = schema
        self.columns = []
        self.degenerate = []
        for spec, col in zip(schema.features, columns):
            arr = np.sort(np.asarray(col, dtype=float))
            if arr.size < 2:
                raise DataError(f"{spec.name}: need at least 2 samples")
            constant = bool(arr[0] == arr[-1])
            if constant:
                warnings.warn(
                    f"feature {spec.name!r} is constant in the sample; "
                    "it is non-actionable in practice",
                    DegenerateFeatureWarning,
                    stacklevel=2,
                )
            arr.setflags(write=False)
            self.columns.append(arr)
            self.degenerate.append(constant)

    @classmethod
    def from_dataset(cls, dataset: Dataset, population: str = "all") -> "QuantileTable":
        """Fit the table on ``dataset``.

        ``population="all"`` uses every row; ``"positive"`` restricts to rows
        labeled +1, for callers who want percentiles over the target class.
        """
        if population not in ("all", "positive"):
            raise ValueError("population must be 'all' or 'positive'")
        X = dataset.X if population == "all" else dataset.X[dataset.y == 1]
        if X.shape[0] < 2:
            raise DataError("need at least 2 rows to build a quantile table")
        return cls(dataset.schema, [X[:, j] for j in range(X.shape[1])])

    def percentile(self, i: int, value: float) -> float:
        """Midpoint-rule empirical CDF of feature ``i`` at ``value``."""
        col = self.columns[i]
        left = np.searchsorted(col, value, side="left")
        right = np.searchsorted(col, value, side="right")
        return (left + 0.5 * (right - left)) / col.size

    def percentile_by_name(self, name: str, value: float) -> float:
        return self.percentile(self.schema.index(name), value)

    def value_frequencies(self, i: int) -> dict[float, float]:
        """Relative frequency of each observed value (categorical summaries)."""
        values, counts = np.unique(self.columns[i], return_counts=True)
        return {float(v): float(c) / self.columns[i].size for v, c in zip(values, counts)}


def build_quantile_table(dataset: Dataset, population: str = "all") -> QuantileTable:
    """Functional alias for :meth:`QuantileTable.from_dataset`."""
    return QuantileTable.from_dataset(dataset, population=population)
