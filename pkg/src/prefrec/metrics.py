"""Evaluation metrics over batches of recourse results.

Success rate is computed over all attempts; every other aggregate is over the
valid results only. The preference error (``prmse``) measures, per continuous
actionable feature, the root-mean-square gap between the requested fractional
cost share and the share the delivered action actually realized; individuals
whose action touched no continuous feature have no defined share and are
excluded (and counted).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .data import DatasetSchema, min_max_scale
from .engine import RecourseResult, Trajectory, softmax_weights
from .models import Predictor
from .preferences import PreferenceProfile

REPORT_COLUMNS = (
    "success_rate",
    "prmse",
    "avg_time_s",
    "con_vio",
    "redundancy",
    "proximity",
    "sparsity",
)


def success_rate(results: list[RecourseResult]) -> float:
    if not results:
        raise ValueError("no results to aggregate")
    return sum(1 for r in results if r.valid) / len(results)


def constraint_violations(result: RecourseResult, schema: DatasetSchema) -> int:
    """Number of non-actionable features the action modified."""
    actionable = set(schema.actionable_indices)
    return sum(
        1
        for i in range(schema.n_features)
        if i not in actionable and result.final_action[i] != 0.0
    )


def redundancy(model: Predictor, x, r) -> int:
    """Moved features whose individual reversion keeps the favorable label."""
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    count = 0
    for i in np.flatnonzero(r):
        probe = x + r
        probe[i] = x[i]
        if model.predict_label(probe) == 1:
            count += 1
    return count


def proximity(x, r, schema: DatasetSchema) -> float:
    """Normalized L2 distance between the point and its recourse."""
    x = np.asarray(x, dtype=float)
    moved = min_max_scale(x + np.asarray(r, dtype=float), schema) - min_max_scale(x, schema)
    return float(np.linalg.norm(moved))


def sparsity(r) -> int:
    return int(np.count_nonzero(np.asarray(r)))


def prmse(
    results: list[RecourseResult], profiles: list[PreferenceProfile]
) -> tuple[float, dict[str, float], int]:
    """(mean preference RMSE, per-feature RMSE, excluded count).

    ``pRMSE_i = sqrt(mean_j (gamma_hat_i - gamma_i)^2)`` over individuals with
    a defined realized share; the scalar pRMSE averages over the continuous
    actionable features.
    """
    if len(results) != len(profiles):
        raise ValueError("one profile per result required")
    feature_names = sorted({name for p in profiles for name in p.gamma})
    errors: dict[str, list[float]] = {name: [] for name in feature_names}
    excluded = 0
    for result, profile in zip(results, profiles):
        if not result.valid:
            continue
        if result.fractional_costs is None:
            excluded += 1
            continue
        for name in feature_names:
            have = result.fractional_costs.get(name, 0.0)
            want = profile.gamma.get(name, 0.0)
            errors[name].append((have - want) ** 2)
    if all(not v for v in errors.values()):
        raise ValueError("no individual had a defined fractional cost")
    per_feature = {
        name: math.sqrt(sum(sq) / len(sq)) for name, sq in errors.items() if sq
    }
    return sum(per_feature.values()) / len(per_feature), per_feature, excluded


@dataclass(frozen=True)
class MetricsReport:
    n_results: int
    success_rate: float
    prmse: float | None
    prmse_per_feature: dict[str, float] = field(default_factory=dict)
    prmse_excluded: int = 0
    avg_time_s: float = 0.0
    con_vio: float = 0.0
    redundancy: float = 0.0
    proximity: float = 0.0
    sparsity: float = 0.0
    groups: dict[str, "MetricsReport"] | None = None

    def row(self) -> dict:
        return {
            "success_rate": self.success_rate,
            "prmse": self.prmse,
            "avg_time_s": self.avg_time_s,
            "con_vio": self.con_vio,
            "redundancy": self.redundancy,
            "proximity": self.proximity,
            "sparsity": self.sparsity,
        }

    def to_dict(self) -> dict:
        d = dict(self.row())
        d["n_results"] = self.n_results
        d["prmse_per_feature"] = dict(self.prmse_per_feature)
        d["prmse_excluded"] = self.prmse_excluded
        if self.groups is not None:
            d["groups"] = {k: g.to_dict() for k, g in self.groups.items()}
        return d


def evaluate(
    results: list[RecourseResult],
    xs,
    model: Predictor,
    schema: DatasetSchema,
    profiles: list[PreferenceProfile] | None = None,
) -> MetricsReport:
    """Aggregate the full metric suite for a batch of results."""
    if not results:
        raise ValueError("no results to aggregate")
    xs = np.asarray(xs, dtype=float)
    valid = [(r, xs[i]) for i, r in enumerate(results) if r.valid]
    if valid:
        times = [r.wall_time for r, _ in valid]
        vio = [constraint_violations(r, schema) for r, _ in valid]
        red = [redundancy(model, x, r.final_action) for r, x in valid]
        prox = [proximity(x, r.final_action, schema) for r, x in valid]
        spar = [sparsity(r.final_action) for r, _ in valid]
    else:
        times = vio = red = prox = spar = [0.0]
    overall, per_feature, excluded = (None, {}, 0)
    if profiles is not None and valid:
        try:
            overall, per_feature, excluded = prmse(results, profiles)
        except ValueError:
            overall, per_feature, excluded = None, {}, len(valid)
    return MetricsReport(
        n_results=len(results),
        success_rate=success_rate(results),
        prmse=overall,
        prmse_per_feature=per_feature,
        prmse_excluded=excluded,
        avg_time_s=float(np.mean(times)),
        con_vio=float(np.mean(vio)),
        redundancy=float(np.mean(red)),
        proximity=float(np.mean(prox)),
        sparsity=float(np.mean(spar)),
    )


def grouped(
    results: list[RecourseResult],
    xs,
    model: Predictor,
    schema: DatasetSchema,
    groups,
    profiles: list[PreferenceProfile] | None = None,
) -> dict[str, MetricsReport]:
    """Independent sub-reports per group key (one key per individual)."""
    groups = list(groups)
    if len(groups) != len(results):
        raise ValueError("one group key per result required")
    xs = np.asarray(xs, dtype=float)
    out = {}
    for key in sorted(set(map(str, groups))):
        idx = [i for i, g in enumerate(groups) if str(g) == key]
        if not idx:
            raise ValueError(f"empty group {key!r}")
        out[key] = evaluate(
            [results[i] for i in idx],
            xs[idx],
            model,
            schema,
            [profiles[i] for i in idx] if profiles is not None else None,
        )
    return out


def write_report_csv(path, rows: list[dict], extra_columns: tuple[str, ...] = ()) -> None:
    """Write metric rows with the fixed column set (plus any sweep columns)."""
    columns = list(extra_columns) + list(REPORT_COLUMNS)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k) for k in columns})


# -- empirical check of the per-feature expected-cost bound -------------------


@dataclass(frozen=True)
class BoundCheck:
    feature: str
    mean_cost: float
    std_error: float
    bound: float
    satisfied: bool


@dataclass(frozen=True)
class BoundReport:
    per_feature: list[BoundCheck]
    mean_total_cost: float
    total_bound: float
    total_satisfied: bool


def expected_cost_bound_check(
    trajectories: list[Trajectory],
    profile: PreferenceProfile,
    schema: DatasetSchema,
) -> BoundReport:
    """Compare mean per-feature step-cost totals against the softmax bound.

    For each actionable feature the expected incurred cost over a run is at
    most ``T* . sigma(gamma_i / C_min_i) . C_max_i`` where ``C_min_i`` is the
    smallest cost divisor that ever entered the feature's selection score,
    ``C_max_i`` the largest one-step cost it ever faced, and ``T*`` the
    realized step count. The sigma factor is a true per-step ceiling on the
    selection probability: feature ``i`` enters at its largest observed score
    while only rivals that were selectable at every step enter, each at its
    smallest observed score (dropping an intermittent rival can only enlarge
    the ceiling, never understate it).
    """
    if not trajectories:
        raise ValueError("need at least one trajectory")
    idx = schema.actionable_indices
    names = [schema.features[i].name for i in idx]
    gamma = np.asarray([
        1.0 if schema.features[i].is_categorical else profile.gamma.get(schema.features[i].name, 0.0)
        for i in idx
    ])

    costs = np.zeros((len(trajectories), len(idx)))
    step_cost_max = np.zeros(len(idx))
    denom_min = np.full(len(idx), np.inf)
    denom_max = np.zeros(len(idx))
    always_eligible = np.ones(len(idx), dtype=bool)
    t_stars = np.zeros(len(trajectories))
    any_steps = False
    for k, traj in enumerate(trajectories):
        t_stars[k] = traj.t_hat if traj.t_hat is not None else len(traj.records)
        for rec in traj.records:
            any_steps = True
            marg = rec.marginal_costs[idx]
            dens = rec.z_denominators[idx]
            finite = np.isfinite(dens)
            always_eligible &= finite
            step_cost_max[finite] = np.maximum(
                step_cost_max[finite], np.where(np.isfinite(marg), marg, 0.0)[finite]
            )
            denom_min[finite] = np.minimum(denom_min[finite], dens[finite])
            denom_max[finite] = np.maximum(denom_max[finite], dens[finite])
            acted = rec.acted[idx].astype(bool) & np.isfinite(marg)
            costs[k, acted] += marg[acted]
    if not any_steps:
        always_eligible[:] = False

    mean_t = float(np.mean(t_stars))
    checks = []
    for j, name in enumerate(names):
        mean_cost = float(np.mean(costs[:, j]))
        se = (
            float(np.std(costs[:, j], ddof=1) / math.sqrt(len(trajectories)))
            if len(trajectories) > 1
            else 0.0
        )
        if not np.isfinite(denom_min[j]) or step_cost_max[j] == 0.0:
            # The feature never had a feasible step; it incurred no cost.
            checks.append(BoundCheck(name, mean_cost, se, 0.0, mean_cost == 0.0))
            continue
        z = np.full(len(idx), -np.inf)
        z[always_eligible] = gamma[always_eligible] / denom_max[always_eligible]
        z[j] = gamma[j] / denom_min[j]
        sigma_upper = softmax_weights(z, profile.tau, np.isfinite(z))[j]
        bound = mean_t * float(sigma_upper) * float(step_cost_max[j])
        checks.append(BoundCheck(name, mean_cost, se, bound, mean_cost <= bound + 2 * se))
    mean_total = float(np.mean(costs.sum(axis=1)))
    total_bound = sum(c.bound for c in checks)
    return BoundReport(
        per_feature=checks,
        mean_total_cost=mean_total,
        total_bound=total_bound,
        total_satisfied=mean_total <= total_bound,
    )
