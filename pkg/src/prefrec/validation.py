"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError


class SchemaError(ValueError):
    """A feature schema or config file is malformed."""


class DataError(ValueError):
    """Rows or instances do not conform to the schema."""


class ProfileError(ValueError):
    """A preference profile failed validation.

    Carries the individual violation messages in ``violations``.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid preference profile: " + "; ".join(self.violations))


class PositiveInstanceError(ValueError):
    """The instance already receives the favorable label, nothing to do."""


class TrainingError(RuntimeError):
    """Training diverged (non-finite loss)."""


def check_instance(x, n_features: int) -> np.ndarray:
    """Coerce ``x`` to a 1-D float vector of length ``n_features``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != n_features:
        raise DataError(
            f"expected a feature vector of length {n_features}, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise DataError("feature vector contains non-finite values")
    return arr


def check_matrix(X, n_features: int) -> np.ndarray:
    """Coerce ``X`` to a 2-D float matrix with ``n_features`` columns."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != n_features:
        raise DataError(
            f"expected a matrix with {n_features} columns, got shape {arr.shape}"
        )
    return arr


def check_fitted(obj, attributes) -> None:
    """Raise ``NotFittedError`` unless every attribute in ``attributes`` is set."""
    if isinstance(attributes, str):
        attributes = [attributes]
    missing = [a for a in attributes if getattr(obj, a, None) is None]
    if missing:
        raise NotFittedError(
            f"{type(obj).__name__} is not fitted yet; call fit() before using it"
        )
