"""The log-percentile-shift cost of feature actions.

The cost of moving feature ``i`` from ``x_i`` by ``r_i`` is

    | log( (1 - Q_i(x_i + r_i)) / (1 - Q_i(x_i)) ) |

with ``Q_i`` the empirical percentile from :mod:`prefrec.quantiles`. The raw
ratio diverges as ``Q`` approaches 1 and the engine divides by costs, so
percentiles are clamped into ``[epsilon_q, 1 - epsilon_q]`` and nonzero
actions are floored at ``epsilon_c``. A zero action costs exactly 0.

The absolute value makes percentile-decreasing moves as costly as increasing
ones; both directions shift the individual relative to the population.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .quantiles import QuantileTable
from .validation import DataError


@dataclass(frozen=True)
class CostConfig:
    epsilon_q: float = 0.005
    epsilon_c: float = 1e-4

    def __post_init__(self):
        if not 0.0 < self.epsilon_q < 0.5:
            raise ValueError("epsilon_q must be in (0, 0.5)")
        if not self.epsilon_c > 0:
            raise ValueError("epsilon_c must be > 0")


DEFAULT_COST_CONFIG = CostConfig()


def _clamped_tail(q: QuantileTable, i: int, value: float, cfg: CostConfig) -> float:
    """1 - Q_i(value), clamped away from 0 and 1."""
    qi = min(max(q.percentile(i, value), cfg.epsilon_q), 1.0 - cfg.epsilon_q)
    return 1.0 - qi


def shift_cost(
    q: QuantileTable, i: int, x_i: float, r_i: float, cfg: CostConfig = DEFAULT_COST_CONFIG
) -> float:
    """Cost of moving feature ``i`` from ``x_i`` to ``x_i + r_i``."""
    if r_i == 0.0:
        return 0.0
    raw = abs(
        math.log(_clamped_tail(q, i, x_i + r_i, cfg) / _clamped_tail(q, i, x_i, cfg))
    )
    return max(raw, cfg.epsilon_c)


def step_cost(
    q: QuantileTable,
    i: int,
    current_value: float,
    delta: float,
    cfg: CostConfig = DEFAULT_COST_CONFIG,
) -> float:
    """Marginal cost of one step of ``delta`` taken from ``current_value``.

    Consecutive marginal costs along a monotone path telescope to the
    end-to-end shift cost as long as no clamp or floor engages.
    """
    return shift_cost(q, i, current_value, delta, cfg)


def total_cost(q: QuantileTable, x, r, cfg: CostConfig = DEFAULT_COST_CONFIG) -> float:
    """Sum of per-feature shift costs over the actionable features.

    Raises :class:`DataError` if ``r`` acts on a non-actionable feature.
    """
    schema = q.schema
    actionable = set(schema.actionable_indices)
    total = 0.0
    for i, spec in enumerate(schema.features):
        if r[i] == 0.0:
            continue
        if i not in actionable:
            raise DataError(
                f"action on non-actionable feature {spec.name!r} (constraint violation)"
            )
        total += shift_cost(q, i, float(x[i]), float(r[i]), cfg)
    return total


def actionable_cost(q: QuantileTable, x, r, cfg: CostConfig = DEFAULT_COST_CONFIG) -> float:
    """Like :func:`total_cost` but silently ignores non-actionable components.

    Used to price baseline counterfactuals, which do not respect
    actionability, on the same scale as constrained recourses.
    """
    total = 0.0
    for i in q.schema.actionable_indices:
        if r[i] != 0.0:
            total += shift_cost(q, i, float(x[i]), float(r[i]), cfg)
    return total


def fractional_costs(
    q: QuantileTable, x, r, cfg: CostConfig = DEFAULT_COST_CONFIG
) -> dict[str, float] | None:
    """Share of realized cost per continuous actionable feature.

    Categorical actions are excluded from both numerator and denominator.
    Returns None when no continuous actionable feature moved, in which case
    the shares are undefined and the caller decides how to treat the case.
    """
    schema = q.schema
    costs = {}
    for name in schema.continuous_actionable:
        i = schema.index(name)
        costs[name] = shift_cost(q, i, float(x[i]), float(r[i]), cfg)
    denom = sum(costs.values())
    if denom == 0.0:
        return None
    return {name: c / denom for name, c in costs.items()}
