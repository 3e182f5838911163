"""User preference profiles and their validation.

A profile carries the three preference forms the engine understands:

* ``gamma``: fractional-cost scores over continuous actionable features,
  non-negative and summing to 1;
* ``bounds`` and ``steps``: reachable value intervals per actionable feature
  and the step granularity (a step size for continuous features, an ordered
  tuple of candidate values for categorical ones);
* ``ranking``: a rank per categorical actionable feature, lower rank numbers
  tried earlier by default.

Plus the sampling temperature ``tau`` and the step budget ``max_steps``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .data import DatasetSchema
from .validation import SchemaError

GAMMA_SUM_TOL = 1e-9
DEFAULT_TAU = 0.25
DEFAULT_MAX_STEPS = 1000


@dataclass(frozen=True)
class PreferenceProfile:
    gamma: dict[str, float] = field(default_factory=dict)
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    steps: dict[str, float | tuple[float, ...]] = field(default_factory=dict)
    ranking: dict[str, int] = field(default_factory=dict)
    tau: float = DEFAULT_TAU
    max_steps: int = DEFAULT_MAX_STEPS

    def with_updates(self, **changes) -> "PreferenceProfile":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "gamma": dict(self.gamma),
            "bounds": {k: list(v) for k, v in self.bounds.items()},
            "steps": {
                k: (list(v) if isinstance(v, tuple) else v) for k, v in self.steps.items()
            },
            "ranking": dict(self.ranking),
            "tau": self.tau,
            "max_steps": self.max_steps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PreferenceProfile":
        unknown = set(d) - {"gamma", "bounds", "steps", "ranking", "tau", "max_steps"}
        if unknown:
            raise SchemaError(f"unknown profile keys: {sorted(unknown)}")
        steps = {}
        for name, v in d.get("steps", {}).items():
            steps[name] = tuple(float(x) for x in v) if isinstance(v, (list, tuple)) else float(v)
        return cls(
            gamma={k: float(v) for k, v in d.get("gamma", {}).items()},
            bounds={k: (float(v[0]), float(v[1])) for k, v in d.get("bounds", {}).items()},
            steps=steps,
            ranking={k: int(v) for k, v in d.get("ranking", {}).items()},
            tau=float(d.get("tau", DEFAULT_TAU)),
            max_steps=int(d.get("max_steps", DEFAULT_MAX_STEPS)),
        )


def default_profile(schema: DatasetSchema) -> PreferenceProfile:
    """Domain-expert defaults: uniform gamma, schema-wide bounds and steps,
    schema-order ranking, tau = 1/4."""
    continuous = schema.continuous_actionable
    categorical = schema.categorical_actionable
    if not continuous:
        raise SchemaError("schema has no actionable continuous feature")
    gamma = {name: 1.0 / len(continuous) for name in continuous}
    bounds, steps = {}, {}
    for spec in schema.features:
        if not spec.actionable:
            continue
        bounds[spec.name] = (spec.lower, spec.upper)
        steps[spec.name] = spec.default_step if spec.is_continuous else spec.allowed_values
    ranking = {name: rank for rank, name in enumerate(categorical, start=1)}
    return PreferenceProfile(gamma=gamma, bounds=bounds, steps=steps, ranking=ranking)


def renormalize_gamma(scores: dict[str, float]) -> dict[str, float]:
    """Scale non-negative scores so they sum to 1; zero entries stay zero."""
    if any(v < 0 for v in scores.values()):
        raise ValueError("gamma scores must be non-negative")
    total = sum(scores.values())
    if total <= 0:
        raise ValueError("at least one gamma score must be positive")
    return {k: v / total for k, v in scores.items()}


def validate_profile(profile: PreferenceProfile, schema: DatasetSchema) -> list[str]:
    """Check every profile invariant against ``schema``.

    Returns a list of human-readable violations; an empty list means the
    profile is valid.
    """
    violations = []
    continuous = set(schema.continuous_actionable)
    categorical = set(schema.categorical_actionable)
    actionable = {schema.features[i].name for i in schema.actionable_indices}

    for name, score in profile.gamma.items():
        if name not in set(schema.names):
            violations.append(f"gamma: unknown feature {name!r}")
        elif name not in continuous and score != 0.0:
            violations.append(f"gamma: nonzero score on non-actionable feature {name!r}")
        elif not 0.0 <= score <= 1.0:
            violations.append(f"gamma: score for {name!r} outside [0, 1]")
    missing = continuous - set(profile.gamma)
    if missing:
        violations.append(f"gamma: missing scores for {sorted(missing)}")
    if continuous and not missing:
        total = sum(profile.gamma.get(n, 0.0) for n in continuous)
        if abs(total - 1.0) > GAMMA_SUM_TOL:
            violations.append(f"gamma sum != 1 (got {total!r})")

    for name, (lo, hi) in profile.bounds.items():
        if name not in actionable:
            violations.append(f"bounds: {name!r} is not an actionable feature")
            continue
        spec = schema.feature(name)
        if lo > hi:
            violations.append(f"bounds: lower > upper for {name!r}")
        elif lo > spec.upper or hi < spec.lower:
            violations.append(f"bounds: empty intersection with domain for {name!r}")
        elif spec.is_categorical and not any(lo <= v <= hi for v in spec.allowed_values):
            violations.append(f"bounds: no allowed value of {name!r} inside bounds")

    for name, step in profile.steps.items():
        if name not in actionable:
            violations.append(f"steps: {name!r} is not an actionable feature")
            continue
        spec = schema.feature(name)
        if spec.is_continuous:
            if isinstance(step, tuple):
                violations.append(f"steps: {name!r} is continuous, expected a step size")
            elif not 0 < step <= spec.width:
                violations.append(f"steps: step for {name!r} outside (0, domain width]")
        else:
            values = step if isinstance(step, tuple) else (step,)
            if not values:
                violations.append(f"steps: empty candidate values for {name!r}")
            elif any(v not in spec.allowed_values for v in values):
                violations.append(f"steps: candidate value outside allowed_values for {name!r}")
            elif any(b <= a for a, b in zip(values, values[1:])):
                violations.append(f"steps: candidate values for {name!r} must be increasing")

    rank_keys = set(profile.ranking)
    if rank_keys != categorical:
        violations.append(
            f"ranking: must cover exactly the categorical actionable features "
            f"{sorted(categorical)}, got {sorted(rank_keys)}"
        )
    ranks = list(profile.ranking.values())
    if any(r < 1 for r in ranks):
        violations.append("ranking: ranks must be positive integers")
    if len(set(ranks)) != len(ranks):
        violations.append("ranking not injective (duplicate ranks)")

    if not profile.tau > 0:
        violations.append("tau must be > 0")
    if profile.max_steps < 1:
        violations.append("max_steps must be >= 1")
    return violations
