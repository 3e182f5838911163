import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prefrec import Dataset, DatasetSchema, DataError, FeatureSpec, build_quantile_table
from prefrec.quantiles import DegenerateFeatureWarning


def brute_force_midpoint_cdf(samples, v):
    below = sum(1 for s in samples if s < v)
    ties = sum(1 for s in samples if s == v)
    return (below + 0.5 * ties) / len(samples)


def one_feature_dataset(values, labels=None):
    schema = DatasetSchema(
        features=(FeatureSpec("f", domain_min=-1e6, domain_max=1e6),), target_name="y"
    )
    values = np.asarray(values, dtype=float).reshape(-1, 1)
    if labels is None:
        labels = np.where(np.arange(len(values)) % 2 == 0, 1, -1)
    return Dataset(schema, values, np.asarray(labels))


def test_midpoint_rule_with_tie():
    q = build_quantile_table(one_feature_dataset([1, 2, 3, 4]))
    assert q.percentile(0, 2.0) == pytest.approx(brute_force_midpoint_cdf([1, 2, 3, 4], 2.0))
    assert q.percentile(0, 2.0) == pytest.approx(0.375)


def test_below_minimum_and_above_maximum():
    q = build_quantile_table(one_feature_dataset([1, 2, 3, 4]))
    assert q.percentile(0, 0.0) == 0.0
    assert q.percentile(0, 9.0) == 1.0


def test_all_ties_gives_half_and_warns():
    with pytest.warns(DegenerateFeatureWarning):
        q = build_quantile_table(one_feature_dataset([5, 5, 5, 5]))
    assert q.percentile(0, 5.0) == pytest.approx(0.5)
    assert q.degenerate == [True]


def test_needs_two_rows(schema_2cont):
    tiny = Dataset(schema_2cont, np.array([[1.0, 2.0]]), np.array([1]))
    with pytest.raises(DataError):
        build_quantile_table(tiny)


def test_positive_population_switch(dataset_2cont):
    q_all = build_quantile_table(dataset_2cont, population="all")
    q_pos = build_quantile_table(dataset_2cont, population="positive")
    pos_rows = dataset_2cont.X[dataset_2cont.y == 1, 0]
    v = float(np.median(dataset_2cont.X[:, 0]))
    assert q_pos.percentile(0, v) == pytest.approx(brute_force_midpoint_cdf(pos_rows.tolist(), v))
    assert q_all.percentile(0, v) != q_pos.percentile(0, v)


def test_categorical_frequencies(dataset_mixed):
    q = build_quantile_table(dataset_mixed)
    i = dataset_mixed.schema.index("guarantor")
    freqs = q.value_frequencies(i)
    assert set(freqs) == {0.0, 1.0}
    assert sum(freqs.values()) == pytest.approx(1.0)
    share0 = np.mean(dataset_mixed.X[:, i] == 0.0)
    assert q.percentile(i, 0.0) == pytest.approx(0.5 * share0)


@pytest.mark.filterwarnings("ignore::prefrec.quantiles.DegenerateFeatureWarning")
@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(min_value=-100, max_value=100), min_size=2, max_size=40),
    st.floats(min_value=-150, max_value=150),
    st.floats(min_value=-150, max_value=150),
)
def test_percentile_monotone_and_bounded(samples, v1, v2):
    q = build_quantile_table(one_feature_dataset(samples))
    lo, hi = min(v1, v2), max(v1, v2)
    p_lo, p_hi = q.percentile(0, lo), q.percentile(0, hi)
    assert 0.0 <= p_lo <= p_hi <= 1.0
    assert p_lo == pytest.approx(brute_force_midpoint_cdf(samples, lo))
