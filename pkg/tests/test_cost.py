import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prefrec import (
    CostConfig,
    DataError,
    Dataset,
    DatasetSchema,
    FeatureSpec,
    build_quantile_table,
    fractional_costs,
    shift_cost,
    step_cost,
    total_cost,
)

CFG = CostConfig()


@pytest.fixture(scope="module")
def q_1234():
    schema = DatasetSchema(
        features=(FeatureSpec("f", domain_min=0.0, domain_max=10.0),), target_name="y"
    )
    ds = Dataset(schema, np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([1, -1, 1, -1]))
    return build_quantile_table(ds)


def test_zero_action_costs_exactly_zero(q_1234):
    assert shift_cost(q_1234, 0, 1.0, 0.0, CFG) == 0.0


def test_two_step_shift_from_sample_counts(q_1234):
    # Oracle: count-based midpoint CDF, then the log tail ratio by hand.
    q1 = (0 + 0.5) / 4       # value 1
    q3 = (2 + 0.5) / 4       # value 3
    expected = abs(math.log((1 - q3) / (1 - q1)))
    assert expected == pytest.approx(0.8473, abs=1e-4)
    assert shift_cost(q_1234, 0, 1.0, 2.0, CFG) == pytest.approx(expected, rel=1e-12)


def test_clamp_keeps_cost_finite_past_the_maximum(q_1234):
    cost = shift_cost(q_1234, 0, 4.0, 5.0, CFG)
    q4 = 7 / 8  # midpoint percentile at the sample maximum
    expected = abs(math.log(CFG.epsilon_q / (1 - q4)))
    assert math.isfinite(cost)
    assert cost == pytest.approx(expected, rel=1e-12)


def test_nonzero_action_floored(q_1234):
    # A move between two equal-percentile points costs the floor, not zero.
    tiny = shift_cost(q_1234, 0, 1.2, 0.1, CFG)  # no sample between 1.2 and 1.3
    assert tiny == CFG.epsilon_c


def test_step_cost_zero_step_bypasses_floor(q_1234):
    assert step_cost(q_1234, 0, 2.0, 0.0, CFG) == 0.0


def test_marginal_steps_telescope(q_1234):
    one = step_cost(q_1234, 0, 1.0, 1.0, CFG)
    two = step_cost(q_1234, 0, 2.0, 1.0, CFG)
    end_to_end = shift_cost(q_1234, 0, 1.0, 2.0, CFG)
    assert one + two == pytest.approx(end_to_end, abs=1e-9)


def test_categorical_flip_cost_from_frequencies():
    schema = DatasetSchema(
        features=(
            FeatureSpec("flag", kind="categorical", allowed_values=(0.0, 1.0)),
            FeatureSpec("f", domain_min=0.0, domain_max=1.0),
        ),
        target_name="y",
    )
    col = np.array([0.0] * 90 + [1.0] * 10)
    X = np.column_stack([col, np.linspace(0, 1, 100)])
    ds = Dataset(schema, X, np.where(np.arange(100) % 2 == 0, 1, -1))
    q = build_quantile_table(ds)
    q0 = 0.5 * 0.9             # midpoint percentile of value 0
    q1 = 0.9 + 0.5 * 0.1       # midpoint percentile of value 1
    expected = abs(math.log((1 - q1) / (1 - q0)))
    assert expected == pytest.approx(math.log(11), rel=1e-12)
    assert step_cost(q, 0, 0.0, 1.0, CFG) == pytest.approx(expected, rel=1e-12)


def test_total_cost_additive_and_zero(upar_mixed, dataset_mixed):
    q = upar_mixed.quantile_table_
    x = dataset_mixed.X[0]
    assert total_cost(q, x, np.zeros(4), CFG) == 0.0
    r = np.array([5.0, 0.0, 0.0, 0.0])
    assert total_cost(q, x, r, CFG) == pytest.approx(shift_cost(q, 0, x[0], 5.0, CFG))


def test_total_cost_rejects_non_actionable_move(upar_mixed, dataset_mixed):
    q = upar_mixed.quantile_table_
    x = dataset_mixed.X[0]
    r = np.zeros(4)
    r[dataset_mixed.schema.index("age")] = 1.0
    with pytest.raises(DataError, match="non-actionable"):
        total_cost(q, x, r, CFG)


def test_monotone_aggregation(upar_mixed, dataset_mixed):
    q = upar_mixed.quantile_table_
    x = dataset_mixed.X[0]
    r1 = np.array([5.0, 0.0, 0.0, 0.0])
    r2 = np.array([5.0, 7.0, 0.0, 0.0])
    assert total_cost(q, x, r2, CFG) >= total_cost(q, x, r1, CFG)


def test_fractional_costs_single_feature(upar_2cont, dataset_2cont):
    q = upar_2cont.quantile_table_
    x = dataset_2cont.X[0]
    frac = fractional_costs(q, x, np.array([5.0, 0.0]), CFG)
    assert frac == {"duration": 1.0, "amount": 0.0}


def test_fractional_costs_equal_split(q_1234):
    schema = DatasetSchema(
        features=(
            FeatureSpec("a", domain_min=0.0, domain_max=10.0),
            FeatureSpec("b", domain_min=0.0, domain_max=10.0),
        ),
        target_name="y",
    )
    X = np.tile(np.array([[1.0], [2.0], [3.0], [4.0]]), (1, 2))
    ds = Dataset(schema, X, np.array([1, -1, 1, -1]))
    q = build_quantile_table(ds)
    frac = fractional_costs(q, np.array([1.0, 1.0]), np.array([2.0, 2.0]), CFG)
    assert frac == pytest.approx({"a": 0.5, "b": 0.5})


def test_fractional_costs_ratio():
    # Shares follow the raw cost ratio: 0.8473 vs 0.2118 gives about 0.8 / 0.2.
    costs = {"a": 0.8473, "b": 0.2118}
    denom = sum(costs.values())
    assert costs["a"] / denom == pytest.approx(0.8, abs=0.01)


def test_fractional_costs_absent_when_nothing_moved(upar_2cont, dataset_2cont):
    q = upar_2cont.quantile_table_
    assert fractional_costs(q, dataset_2cont.X[0], np.zeros(2), CFG) is None


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.1, max_value=10.0))
def test_gamma_hat_scale_consistent(scale):
    # Scaling every per-feature cost by a common factor leaves shares unchanged.
    costs = np.array([0.3, 0.5, 0.2])
    shares = costs / costs.sum()
    scaled = costs * scale
    assert np.allclose(scaled / scaled.sum(), shares)


@pytest.mark.filterwarnings("ignore::prefrec.quantiles.DegenerateFeatureWarning")
@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(min_value=-50, max_value=50), min_size=4, max_size=30),
    st.floats(min_value=-40, max_value=40),
    st.floats(min_value=-20, max_value=20),
)
def test_shift_cost_non_negative(samples, x, r):
    q = build_quantile_table(
        Dataset(
            DatasetSchema(
                features=(FeatureSpec("f", domain_min=-100.0, domain_max=100.0),),
                target_name="y",
            ),
            np.asarray(samples, dtype=float).reshape(-1, 1),
            np.where(np.arange(len(samples)) % 2 == 0, 1, -1),
        )
    )
    c = shift_cost(q, 0, x, r, CFG)
    assert c >= 0.0
    assert (c == 0.0) == (r == 0.0)
