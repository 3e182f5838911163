"""Two-stage preference-guided recourse search.

Stage 1 walks a connected path of per-feature steps. Each step draws, for
every actionable feature, an independent Bernoulli indicator whose probability
comes from a softmax over preference-weighted inverse costs:

    z_i = gamma_i / cost_i        sigma_i = exp(z_i / tau) / sum_j exp(z_j / tau)

where ``cost_i`` is the percentile-shift cost of the action accumulated on
feature ``i`` so far (for a feature that has not moved yet, the cost of its
next prospective step, which keeps z defined at the origin), and categorical
features carry a fixed preference weight of 1. Features that cannot move at
all this step (at a bound, monotonicity-blocked, no improving categorical
value, or held back by the categorical rank order) get probability 0. Sampled
features move one step of their configured granularity in the direction that
raises the positive-class probability, until the prediction flips or the step
budget runs out.

Stage 2 removes the redundancy a late categorical move induces: the final
categorical components are imposed on every earlier candidate and the walk
retraces from the success step backwards while the overridden candidate still
classifies positive, returning the earliest contiguously valid candidate.
This keeps the categorical flip but gives back the continuous steps it made
superfluous, and never increases total cost or breaks validity.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .cost import CostConfig, DEFAULT_COST_CONFIG, fractional_costs, shift_cost, total_cost
from .data import Dataset, DatasetSchema
from .models import Predictor
from .preferences import PreferenceProfile, default_profile, validate_profile
from .quantiles import QuantileTable
from .validation import (
    PositiveInstanceError,
    ProfileError,
    check_fitted,
    check_instance,
)

RANK_ORDERS = ("ascending", "descending")

# Relative slack when testing whether a step would exit a bound, absorbing
# float accumulation over many repeated step additions.
_BOUND_TOL = 1e-9


@dataclass(frozen=True)
class EngineConfig:
    cost: CostConfig = DEFAULT_COST_CONFIG
    rank_order: str = "ascending"

    def __post_init__(self):
        if self.rank_order not in RANK_ORDERS:
            raise ValueError(f"rank_order must be one of {RANK_ORDERS}")


DEFAULT_ENGINE_CONFIG = EngineConfig()


@dataclass(frozen=True)
class StepRecord:
    t: int
    acted: np.ndarray          # 0/1 indicator per feature
    directions: np.ndarray     # -1/0/+1 per feature
    candidate: np.ndarray      # cumulative action after this step
    marginal_costs: np.ndarray # prospective one-step cost per feature, NaN if blocked
    z_denominators: np.ndarray # cost divisor behind each selection score, NaN if excluded
    prediction: float          # p(+1) at x + candidate

    def to_dict(self, schema: DatasetSchema) -> dict:
        acted = [schema.names[i] for i in np.flatnonzero(self.acted)]
        return {
            "t": self.t,
            "acted": acted,
            "candidate": [float(v) for v in self.candidate],
            "prediction": float(self.prediction),
        }


@dataclass(frozen=True)
class Trajectory:
    records: tuple[StepRecord, ...]
    t_hat: int | None

    @property
    def succeeded(self) -> bool:
        return self.t_hat is not None

    @property
    def final_candidate(self) -> np.ndarray:
        if not self.records:
            raise ValueError("empty trajectory has no candidate")
        return self.records[-1].candidate

    def candidate_at(self, t: int) -> np.ndarray:
        return self.records[t - 1].candidate


@dataclass(frozen=True)
class RecourseResult:
    valid: bool
    stage1_action: np.ndarray
    final_action: np.ndarray
    steps_used: int | None
    total_cost_before: float | None
    total_cost_after: float | None
    fractional_costs: dict[str, float] | None
    final_probability: float
    wall_time: float
    seed: int
    method: str = "upar"
    trajectory: Trajectory | None = field(default=None, compare=False, repr=False)

    def to_dict(self, include_timing: bool = False, include_trace: bool = False,
                schema: DatasetSchema | None = None) -> dict:
        d = {
            "valid": self.valid,
            "method": self.method,
            "seed": self.seed,
            "stage1_action": [float(v) for v in self.stage1_action],
            "final_action": [float(v) for v in self.final_action],
            "steps_used": self.steps_used,
            "total_cost_before": self.total_cost_before,
            "total_cost_after": self.total_cost_after,
            "fractional_costs": self.fractional_costs,
            "final_probability": float(self.final_probability),
        }
        if include_timing:
            d["wall_time"] = self.wall_time
        if include_trace and self.trajectory is not None and schema is not None:
            d["trace"] = [r.to_dict(schema) for r in self.trajectory.records]
        return d

    def to_json(self, **kwargs) -> str:
        """Canonical serialization; timing is excluded by default so equal
        (instance, profile, seed) runs produce identical bytes."""
        return json.dumps(self.to_dict(**kwargs), sort_keys=True)


# -- per-feature action state ------------------------------------------------


class _ActionSpace:
    """Resolved per-feature movement rules for one (schema, profile) pair."""

    def __init__(self, schema: DatasetSchema, profile: PreferenceProfile):
        self.schema = schema
        self.profile = profile
        self.actionable = schema.actionable_indices
        self.continuous = [schema.index(n) for n in schema.continuous_actionable]
        self.categorical = [schema.index(n) for n in schema.categorical_actionable]
        self.gamma = np.zeros(schema.n_features)
        for name, score in profile.gamma.items():
            self.gamma[schema.index(name)] = score
        self.delta = np.zeros(schema.n_features)
        self.lo = np.full(schema.n_features, -np.inf)
        self.hi = np.full(schema.n_features, np.inf)
        self.candidates: dict[int, tuple[float, ...]] = {}
        for i in self.actionable:
            spec = schema.features[i]
            blo, bhi = profile.bounds.get(spec.name, (spec.lower, spec.upper))
            self.lo[i] = max(blo, spec.lower)
            self.hi[i] = min(bhi, spec.upper)
            step = profile.steps.get(spec.name)
            if spec.is_continuous:
                self.delta[i] = step if step is not None else spec.default_step
            else:
                values = step if isinstance(step, tuple) else spec.allowed_values
                self.candidates[i] = values

    def categorical_target(self, i: int, value: float, direction: int) -> float | None:
        """Adjacent candidate value of feature ``i`` in ``direction``, or None."""
        values = self.candidates[i]
        pos = None
        for k, v in enumerate(values):
            if abs(v - value) <= 1e-9:
                pos = k
                break
        if pos is None:
            return None
        k = pos + direction
        if not 0 <= k < len(values):
            return None
        target = values[k]
        if target < self.lo[i] - _BOUND_TOL or target > self.hi[i] + _BOUND_TOL:
            return None
        return target

    def rank_sequence(self, rank_order: str) -> list[int]:
        """Categorical feature indices in the order they are allowed to start
        acting."""
        items = sorted(
            self.profile.ranking.items(),
            key=lambda kv: kv[1],
            reverse=(rank_order == "descending"),
        )
        return [self.schema.index(name) for name, _ in items]


# -- stage 1 -----------------------------------------------------------------


def step_direction(
    model: Predictor,
    x: np.ndarray,
    r_current: np.ndarray,
    schema: DatasetSchema,
    profile: PreferenceProfile,
    space: _ActionSpace | None = None,
) -> np.ndarray:
    """Per-feature movement direction at the current candidate.

    Continuous features move along the sign of the model sensitivity unless
    monotonicity forbids it or a full step would exit the reachable interval.
    Categorical features move toward the adjacent candidate value that raises
    the predicted probability, found by trial evaluation. Binary categorical
    features flip at most once. Features that cannot move get 0.
    """
    space = space or _ActionSpace(schema, profile)
    v = x + r_current
    grad = model.sensitivity(v)
    p_now = model.predict_proba(v)
    directions = np.zeros(schema.n_features, dtype=np.int8)

    for i in space.continuous:
        spec = schema.features[i]
        d = int(np.sign(grad[i]))
        if d == 0:
            continue
        if spec.monotonicity == "non_decreasing" and d < 0:
            continue
        if spec.monotonicity == "non_increasing" and d > 0:
            continue
        target = v[i] + d * space.delta[i]
        tol = _BOUND_TOL * max(1.0, abs(space.hi[i]), abs(space.lo[i]))
        if target > space.hi[i] + tol or target < space.lo[i] - tol:
            continue
        directions[i] = d

    for i in space.categorical:
        spec = schema.features[i]
        if len(space.candidates[i]) == 2 and r_current[i] != 0.0:
            continue  # binary features flip at most once
        best_d, best_p = 0, p_now
        for d in (1, -1):
            if spec.monotonicity == "non_decreasing" and d < 0:
                continue
            if spec.monotonicity == "non_increasing" and d > 0:
                continue
            target = space.categorical_target(i, v[i], d)
            if target is None:
                continue
            trial = v.copy()
            trial[i] = target
            p_trial = model.predict_proba(trial)
            if p_trial > best_p:
                best_d, best_p = d, p_trial
        directions[i] = best_d

    return directions


def _prospective_costs(
    q: QuantileTable,
    x: np.ndarray,
    r_current: np.ndarray,
    directions: np.ndarray,
    space: _ActionSpace,
    cfg: CostConfig,
) -> np.ndarray:
    """One-step marginal cost per feature in its current direction (NaN when
    the feature cannot move)."""
    costs = np.full(len(x), np.nan)
    v = x + r_current
    for i in space.actionable:
        d = int(directions[i])
        if d == 0:
            continue
        if i in space.candidates:
            target = space.categorical_target(i, v[i], d)
            costs[i] = shift_cost(q, i, v[i], target - v[i], cfg)
        else:
            costs[i] = shift_cost(q, i, v[i], d * space.delta[i], cfg)
    return costs


def _z_denominators(
    q: QuantileTable,
    x: np.ndarray,
    r_current: np.ndarray,
    marginal_costs: np.ndarray,
    space: _ActionSpace,
    cfg: CostConfig,
    blocked: np.ndarray | None = None,
) -> np.ndarray:
    """Cost divisor behind each feature's selection score.

    A feature that has moved is priced by the cost of its accumulated action;
    one that has not yet moved by its next prospective step. Features that
    cannot move (or are rank-blocked) get NaN.
    """
    denoms = np.full(len(x), np.nan)
    for i in space.actionable:
        if not np.isfinite(marginal_costs[i]) or (blocked is not None and blocked[i]):
            continue
        if r_current[i] != 0.0:
            denoms[i] = shift_cost(q, i, float(x[i]), float(r_current[i]), cfg)
        else:
            denoms[i] = max(float(marginal_costs[i]), cfg.epsilon_c)
    return denoms


def softmax_weights(z: np.ndarray, tau: float, eligible: np.ndarray) -> np.ndarray:
    """Temperature softmax over the eligible entries; zeros elsewhere."""
    weights = np.zeros_like(z, dtype=float)
    idx = np.flatnonzero(eligible)
    if idx.size == 0:
        return weights
    scaled = z[idx] / tau
    scaled -= scaled.max()
    ez = np.exp(scaled)
    weights[idx] = ez / ez.sum()
    return weights


def sampling_weights(
    q: QuantileTable,
    x: np.ndarray,
    r_current: np.ndarray,
    profile: PreferenceProfile,
    cfg: CostConfig = DEFAULT_COST_CONFIG,
    directions: np.ndarray | None = None,
    marginal_costs: np.ndarray | None = None,
    blocked: np.ndarray | None = None,
    space: _ActionSpace | None = None,
    denominators: np.ndarray | None = None,
) -> np.ndarray:
    """Per-feature probability of acting this step.

    ``z`` divides the preference score (1 for categorical features) by the
    cost accumulated on the feature so far, or by its next prospective step
    cost while it has not moved yet. Features whose direction is 0 or that
    are blocked by the rank guard are excluded before normalization. Returns
    all zeros when no feature can move.
    """
    schema = q.schema
    space = space or _ActionSpace(schema, profile)
    if directions is None:
        raise ValueError("directions are required to price prospective steps")
    if marginal_costs is None:
        marginal_costs = _prospective_costs(q, x, r_current, directions, space, cfg)
    if denominators is None:
        denominators = _z_denominators(q, x, r_current, marginal_costs, space, cfg, blocked)
    z = np.zeros(schema.n_features)
    eligible = np.zeros(schema.n_features, dtype=bool)
    for i in space.actionable:
        if not np.isfinite(denominators[i]):
            continue
        weight = 1.0 if i in space.candidates else space.gamma[i]
        if weight == 0.0:
            continue
        z[i] = weight / denominators[i]
        eligible[i] = True
    return softmax_weights(z, profile.tau, eligible)


def sample_indicators(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli draw per feature."""
    return (rng.random(weights.shape[0]) < weights).astype(np.int8)


def _rank_blocked(
    space: _ActionSpace, r_current: np.ndarray, directions: np.ndarray, rank_order: str
) -> np.ndarray:
    """Categorical features that must wait for higher-priority ones.

    A categorical feature may take its first action only once every feature
    earlier in rank order has acted or cannot move at all this step.
    """
    blocked = np.zeros(len(r_current), dtype=bool)
    pending = False
    for i in space.rank_sequence(rank_order):
        if r_current[i] != 0.0:
            continue  # already acted; the guard only gates first actions
        if pending:
            blocked[i] = True
        elif directions[i] != 0:
            pending = True
    return blocked


def run_stage1(
    model: Predictor,
    x: np.ndarray,
    profile: PreferenceProfile,
    q: QuantileTable,
    cfg: EngineConfig = DEFAULT_ENGINE_CONFIG,
    rng: np.random.Generator | None = None,
) -> Trajectory:
    """Iterate preference-weighted stochastic steps until the prediction
    flips or the budget is spent.

    The caller is responsible for profile validity; ``generate_recourse``
    validates. Requires a negatively classified ``x``.
    """
    schema = q.schema
    x = check_instance(x, schema.n_features)
    if model.predict_label(x) == 1:
        raise PositiveInstanceError("instance already receives the favorable label")
    rng = rng if rng is not None else np.random.default_rng()
    space = _ActionSpace(schema, profile)

    r = np.zeros(schema.n_features)
    records: list[StepRecord] = []
    t_hat = None
    for t in range(1, profile.max_steps + 1):
        directions = step_direction(model, x, r, schema, profile, space=space)
        blocked = _rank_blocked(space, r, directions, cfg.rank_order)
        marginal = _prospective_costs(q, x, r, directions, space, cfg.cost)
        denominators = _z_denominators(q, x, r, marginal, space, cfg.cost, blocked)
        weights = sampling_weights(
            q, x, r, profile, cfg.cost,
            directions=directions, marginal_costs=marginal, blocked=blocked,
            space=space, denominators=denominators,
        )
        if not weights.any():
            break  # nothing can move: support is empty, stop early
        indicators = sample_indicators(weights, rng)
        r_new = r.copy()
        for i in np.flatnonzero(indicators):
            d = int(directions[i])
            if i in space.candidates:
                target = space.categorical_target(i, float(x[i] + r[i]), d)
                r_new[i] = target - x[i]
            else:
                r_new[i] = r[i] + d * space.delta[i]
        p = model.predict_proba(x + r_new)
        records.append(
            StepRecord(
                t=t,
                acted=indicators,
                directions=directions,
                candidate=r_new.copy(),
                marginal_costs=marginal,
                z_denominators=denominators,
                prediction=float(p),
            )
        )
        r = r_new
        if p >= 0.5:
            t_hat = t
            break
    return Trajectory(records=tuple(records), t_hat=t_hat)


# -- stage 2 -----------------------------------------------------------------


def cost_correction(
    model: Predictor,
    x: np.ndarray,
    trajectory: Trajectory,
    q: QuantileTable,
    cfg: EngineConfig = DEFAULT_ENGINE_CONFIG,
) -> np.ndarray:
    """Retrace redundant continuous steps after a categorical action.

    If no categorical feature acted, the stage-1 action is returned as is.
    Otherwise the final categorical components are imposed on every earlier
    candidate and the walk steps back from the success index while the
    overridden candidate still classifies positive; the earliest such
    candidate wins. Degenerate non-monotone paths where the retraced action
    would cost more fall back to the stage-1 action, so the correction never
    increases total cost and never breaks validity.
    """
    if trajectory.t_hat is None:
        raise ValueError("cost correction needs a successful trajectory")
    schema = q.schema
    r_hat = trajectory.candidate_at(trajectory.t_hat).copy()
    cat_idx = [schema.index(n) for n in schema.categorical_actionable]
    if not cat_idx or all(r_hat[i] == 0.0 for i in cat_idx):
        return r_hat
    best = r_hat
    for t in range(trajectory.t_hat - 1, 0, -1):
        cand = trajectory.candidate_at(t).copy()
        cand[cat_idx] = r_hat[cat_idx]
        if model.predict_label(x + cand) != 1:
            break
        best = cand
    if total_cost(q, x, best, cfg.cost) <= total_cost(q, x, r_hat, cfg.cost):
        return best
    return r_hat


# -- full pipeline -------------------------------------------------------------


def generate_recourse(
    model: Predictor,
    x: np.ndarray,
    profile: PreferenceProfile,
    q: QuantileTable,
    cfg: EngineConfig = DEFAULT_ENGINE_CONFIG,
    seed: int = 0,
) -> RecourseResult:
    """Run both stages and assemble a :class:`RecourseResult`.

    Deterministic given (x, profile, seed). Raises
    :class:`PositiveInstanceError` when ``x`` already classifies +1 and
    :class:`ProfileError` when the profile fails validation.
    """
    start = time.perf_counter()
    schema = q.schema
    x = check_instance(x, schema.n_features)
    violations = validate_profile(profile, schema)
    if violations:
        raise ProfileError(violations)
    rng = np.random.default_rng(seed)
    trajectory = run_stage1(model, x, profile, q, cfg, rng)
    if not trajectory.succeeded:
        last = trajectory.records[-1] if trajectory.records else None
        return RecourseResult(
            valid=False,
            stage1_action=last.candidate.copy() if last else np.zeros(schema.n_features),
            final_action=np.zeros(schema.n_features),
            steps_used=None,
            total_cost_before=None,
            total_cost_after=None,
            fractional_costs=None,
            final_probability=float(last.prediction) if last else float(model.predict_proba(x)),
            wall_time=time.perf_counter() - start,
            seed=seed,
            trajectory=trajectory,
        )
    stage1_action = trajectory.candidate_at(trajectory.t_hat).copy()
    final_action = cost_correction(model, x, trajectory, q, cfg)
    return RecourseResult(
        valid=True,
        stage1_action=stage1_action,
        final_action=final_action,
        steps_used=trajectory.t_hat,
        total_cost_before=total_cost(q, x, stage1_action, cfg.cost),
        total_cost_after=total_cost(q, x, final_action, cfg.cost),
        fractional_costs=fractional_costs(q, x, final_action, cfg.cost),
        final_probability=float(model.predict_proba(x + final_action)),
        wall_time=time.perf_counter() - start,
        seed=seed,
        trajectory=trajectory,
    )


class PreferenceGuidedRecourse(BaseEstimator):
    """Estimator-style wrapper: fit on a dataset, then generate recourses.

    ``fit`` builds the empirical quantile table the cost function needs;
    ``generate`` runs the two-stage search for one instance. Batch generation
    derives one seed per individual (``seed + index``) so results do not
    depend on evaluation order.
    """

    method_name = "upar"

    def __init__(
        self,
        model: Predictor | None = None,
        epsilon_q: float = 0.005,
        epsilon_c: float = 1e-4,
        rank_order: str = "ascending",
        quantile_population: str = "all",
    ):
        self.model = model
        self.epsilon_q = epsilon_q
        self.epsilon_c = epsilon_c
        self.rank_order = rank_order
        self.quantile_population = quantile_population
        self.schema_ = None
        self.quantile_table_ = None

    @property
    def engine_config(self) -> EngineConfig:
        return EngineConfig(
            cost=CostConfig(epsilon_q=self.epsilon_q, epsilon_c=self.epsilon_c),
            rank_order=self.rank_order,
        )

    def fit(self, dataset: Dataset, y=None):
        self.schema_ = dataset.schema
        self.quantile_table_ = QuantileTable.from_dataset(
            dataset, population=self.quantile_population
        )
        return self

    def default_profile(self) -> PreferenceProfile:
        check_fitted(self, "schema_")
        return default_profile(self.schema_)

    def generate(
        self, x, profile: PreferenceProfile | None = None, seed: int = 0
    ) -> RecourseResult:
        check_fitted(self, ["schema_", "quantile_table_"])
        profile = profile if profile is not None else self.default_profile()
        return generate_recourse(
            self.model, x, profile, self.quantile_table_, self.engine_config, seed
        )

    def generate_batch(self, X, profile=None, seed: int = 0) -> list[RecourseResult]:
        """Generate one recourse per row; ``profile`` may be a single profile
        or a sequence of per-row profiles."""
        X = np.asarray(X, dtype=float)
        results = []
        for idx in range(X.shape[0]):
            p = profile[idx] if isinstance(profile, (list, tuple)) else profile
            results.append(self.generate(X[idx], profile=p, seed=seed + idx))
        return results
