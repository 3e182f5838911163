import numpy as np
import pytest

from prefrec import (
    DatasetSchema,
    FeatureSpec,
    LogisticClassifier,
    PreferenceGuidedRecourse,
    generate_synthetic,
    train_logistic,
)


@pytest.fixture(scope="session")
def schema_2cont():
    return DatasetSchema(
        features=(
            FeatureSpec("duration", domain_min=0.0, domain_max=100.0),
            FeatureSpec("amount", domain_min=0.0, domain_max=100.0),
        ),
        target_name="y",
    )


@pytest.fixture(scope="session")
def schema_mixed():
    """Two continuous actionables, one binary actionable, one protected."""
    return DatasetSchema(
        features=(
            FeatureSpec("duration", domain_min=0.0, domain_max=100.0),
            FeatureSpec("amount", domain_min=0.0, domain_max=100.0),
            FeatureSpec("guarantor", kind="categorical", allowed_values=(0.0, 1.0)),
            FeatureSpec("age", domain_min=18.0, domain_max=90.0, actionable=False),
        ),
        target_name="y",
    )


@pytest.fixture(scope="session")
def dataset_2cont(schema_2cont):
    return generate_synthetic(seed=7, n=800, schema=schema_2cont, separation=0.05)


@pytest.fixture(scope="session")
def dataset_mixed(schema_mixed):
    return generate_synthetic(seed=11, n=900, schema=schema_mixed, separation=0.05)


@pytest.fixture(scope="session")
def lr_2cont(dataset_2cont):
    return train_logistic(dataset_2cont, epochs=300, lr=1.0, seed=0)


@pytest.fixture(scope="session")
def lr_mixed(dataset_mixed):
    return train_logistic(dataset_mixed, epochs=400, lr=1.0, seed=0)


@pytest.fixture(scope="session")
def upar_2cont(lr_2cont, dataset_2cont):
    return PreferenceGuidedRecourse(model=lr_2cont).fit(dataset_2cont)


@pytest.fixture(scope="session")
def upar_mixed(lr_mixed, dataset_mixed):
    return PreferenceGuidedRecourse(model=lr_mixed).fit(dataset_mixed)


@pytest.fixture
def manual_linear():
    """Hand-set linear model for analytic checks."""

    def make(weights, bias=0.0):
        model = LogisticClassifier()
        model.weights_ = np.asarray(weights, dtype=float)
        model.bias_ = float(bias)
        model.n_features_in_ = len(model.weights_)
        return model

    return make


def negatives(model, dataset, limit=None):
    idx = np.flatnonzero(model.predict_label(dataset.X) == -1)
    return idx if limit is None else idx[:limit]
