"""Lightweight counterfactual baselines: growing spheres and Wachter descent.

Both methods search in min-max scaled space, round categorical coordinates to
the nearest allowed value before classifying, and deliberately ignore
actionability flags, preference profiles and monotonicity, which is what
makes them useful comparison points for the constrained engine: they are free
to modify protected features and usually do.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .cost import CostConfig, DEFAULT_COST_CONFIG, actionable_cost, fractional_costs
from .data import Dataset, DatasetSchema, inverse_min_max_scale, min_max_scale
from .engine import RecourseResult
from .models import Predictor
from .quantiles import QuantileTable
from .validation import PositiveInstanceError, check_fitted, check_instance


@dataclass(frozen=True)
class GrowingSpheresConfig:
    initial_radius: float = 0.05
    growth_factor: float = 1.4
    samples_per_shell: int = 200
    max_shells: int = 30

    def __post_init__(self):
        if self.initial_radius <= 0 or self.samples_per_shell <= 0:
            raise ValueError("radius and samples per shell must be positive")
        if self.growth_factor <= 1.0:
            raise ValueError("growth factor must be > 1")
        if self.max_shells < 0:
            raise ValueError("max_shells must be >= 0")


@dataclass(frozen=True)
class WachterConfig:
    lambdas: tuple[float, ...] = (1.0, 10.0, 100.0, 1000.0)
    lr: float = 0.05
    max_iter: int = 300
    tol: float = 1e-7
    target_margin: float = 0.05
    # Cap on the per-iteration move in scaled space; keeps the first valid
    # iterate close to the decision boundary even when lambda is large.
    max_step: float = 0.02

    def __post_init__(self):
        if not self.lambdas or any(l <= 0 for l in self.lambdas):
            raise ValueError("lambda schedule must be positive and non-empty")
        if self.lr <= 0 or self.max_iter < 0 or self.tol <= 0 or self.max_step <= 0:
            raise ValueError("lr/max_iter/tol/max_step must be positive")


def _round_to_schema(point_scaled: np.ndarray, schema: DatasetSchema) -> np.ndarray:
    """Scaled point -> raw feature values with categoricals snapped."""
    return inverse_min_max_scale(np.clip(point_scaled, 0.0, 1.0), schema)


def _result_from_action(
    method: str,
    schema: DatasetSchema,
    q: QuantileTable | None,
    x: np.ndarray,
    r: np.ndarray | None,
    steps: int,
    prob: float,
    start: float,
    seed: int,
    cfg_cost: CostConfig,
) -> RecourseResult:
    valid = r is not None
    action = r if valid else np.zeros(schema.n_features)
    cost = actionable_cost(q, x, action, cfg_cost) if (valid and q is not None) else None
    frac = fractional_costs(q, x, action, cfg_cost) if (valid and q is not None) else None
    return RecourseResult(
        valid=valid,
        stage1_action=action.copy(),
        final_action=action.copy(),
        steps_used=steps if valid else None,
        total_cost_before=cost,
        total_cost_after=cost,
        fractional_costs=frac,
        final_probability=float(prob),
        wall_time=time.perf_counter() - start,
        seed=seed,
        method=method,
    )


def growing_spheres(
    model: Predictor,
    x,
    schema: DatasetSchema,
    cfg: GrowingSpheresConfig = GrowingSpheresConfig(),
    seed: int = 0,
    q: QuantileTable | None = None,
    cost_cfg: CostConfig = DEFAULT_COST_CONFIG,
) -> RecourseResult:
    """Sample expanding spherical shells around ``x`` until a point flips the
    prediction; return the closest flipped point found in that shell.

    Each shell uses its own derived random streams for directions and radii,
    so a run with more samples per shell sees a superset of the points a
    smaller run saw, and can only find an equally close or closer flip.
    """
    start = time.perf_counter()
    x = check_instance(x, schema.n_features)
    if model.predict_label(x) == 1:
        raise PositiveInstanceError("instance already receives the favorable label")
    u = min_max_scale(x, schema)
    inner = 0.0
    outer = cfg.initial_radius
    for shell in range(cfg.max_shells):
        rng_dir = np.random.default_rng(np.random.SeedSequence((seed, shell, 0)))
        rng_rad = np.random.default_rng(np.random.SeedSequence((seed, shell, 1)))
        dirs = rng_dir.standard_normal((cfg.samples_per_shell, schema.n_features))
        dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-12)
        radii = rng_rad.uniform(inner, outer, size=cfg.samples_per_shell)
        points = np.clip(u + dirs * radii[:, None], 0.0, 1.0)
        raw = np.asarray([_round_to_schema(p, schema) for p in points])
        probs = np.asarray([model.predict_proba(row) for row in raw])
        flipped = probs >= 0.5
        if flipped.any():
            cand_scaled = min_max_scale(raw[flipped], schema)
            dists = np.linalg.norm(cand_scaled - u, axis=1)
            best = int(np.argmin(dists))
            r = raw[flipped][best] - x
            return _result_from_action(
                "growing_spheres", schema, q, x, r, shell + 1,
                float(probs[flipped][best]), start, seed, cost_cfg,
            )
        inner = outer
        outer *= cfg.growth_factor
    return _result_from_action(
        "growing_spheres", schema, q, x, None, cfg.max_shells,
        float(model.predict_proba(x)), start, seed, cost_cfg,
    )


def wachter(
    model: Predictor,
    x,
    schema: DatasetSchema,
    cfg: WachterConfig = WachterConfig(),
    q: QuantileTable | None = None,
    cost_cfg: CostConfig = DEFAULT_COST_CONFIG,
) -> RecourseResult:
    """Gradient counterfactual: descend lambda * (p - p_target)^2 + ||delta||_2
    in scaled space, escalating lambda until a valid point appears.

    Categorical coordinates are relaxed to a linear interpolation of their
    value range during descent and snapped to allowed values for the validity
    check and the returned action. Deterministic; no randomness involved.
    """
    start = time.perf_counter()
    x = check_instance(x, schema.n_features)
    if model.predict_label(x) == 1:
        raise PositiveInstanceError("instance already receives the favorable label")
    u0 = min_max_scale(x, schema)
    p_target = 0.5 + cfg.target_margin
    widths = np.asarray([
        (f.domain_max - f.domain_min) if f.is_continuous
        else (f.allowed_values[-1] - f.allowed_values[0])
        for f in schema.features
    ])
    iters = 0
    for lam in cfg.lambdas:
        u = u0.copy()
        for _ in range(cfg.max_iter):
            iters += 1
            raw_relaxed = inverse_min_max_scale(u, schema, snap_categorical=False)
            p = model.predict_proba(raw_relaxed)
            grad_p = model.sensitivity(raw_relaxed) * widths
            delta = u - u0
            norm = np.linalg.norm(delta)
            grad_dist = delta / norm if norm > 0 else np.zeros_like(delta)
            step = cfg.lr * (2.0 * lam * (p - p_target) * grad_p + grad_dist)
            norm_step = np.linalg.norm(step)
            if norm_step > cfg.max_step:
                step *= cfg.max_step / norm_step
            u_new = np.clip(u - step, 0.0, 1.0)
            moved = float(np.linalg.norm(u_new - u))
            u = u_new
            raw = _round_to_schema(u, schema)
            prob = model.predict_proba(raw)
            if prob >= 0.5:
                r = raw - x
                return _result_from_action(
                    "wachter", schema, q, x, r, iters, float(prob), start, 0, cost_cfg,
                )
            if moved < cfg.tol:
                break  # converged for this lambda, escalate
    return _result_from_action(
        "wachter", schema, q, x, None, iters,
        float(model.predict_proba(x)), start, 0, cost_cfg,
    )


class _BaselineRecourse(BaseEstimator):
    """Shared fit surface: store schema and quantile table from a dataset."""

    def __init__(self, model: Predictor | None = None):
        self.model = model
        self.schema_ = None
        self.quantile_table_ = None

    def fit(self, dataset: Dataset, y=None):
        self.schema_ = dataset.schema
        self.quantile_table_ = QuantileTable.from_dataset(dataset)
        return self

    def generate_batch(self, X, profile=None, seed: int = 0) -> list[RecourseResult]:
        X = np.asarray(X, dtype=float)
        return [self.generate(X[i], seed=seed + i) for i in range(X.shape[0])]


class GrowingSpheresRecourse(_BaselineRecourse):
    method_name = "growing_spheres"

    def __init__(
        self,
        model: Predictor | None = None,
        initial_radius: float = 0.05,
        growth_factor: float = 1.4,
        samples_per_shell: int = 200,
        max_shells: int = 30,
    ):
        super().__init__(model)
        self.initial_radius = initial_radius
        self.growth_factor = growth_factor
        self.samples_per_shell = samples_per_shell
        self.max_shells = max_shells

    def generate(self, x, profile=None, seed: int = 0) -> RecourseResult:
        check_fitted(self, ["schema_", "quantile_table_"])
        cfg = GrowingSpheresConfig(
            initial_radius=self.initial_radius,
            growth_factor=self.growth_factor,
            samples_per_shell=self.samples_per_shell,
            max_shells=self.max_shells,
        )
        return growing_spheres(self.model, x, self.schema_, cfg, seed, self.quantile_table_)


class WachterRecourse(_BaselineRecourse):
    method_name = "wachter"

    def __init__(
        self,
        model: Predictor | None = None,
        lambdas: tuple[float, ...] = (1.0, 10.0, 100.0, 1000.0),
        lr: float = 0.05,
        max_iter: int = 300,
        tol: float = 1e-7,
        target_margin: float = 0.05,
        max_step: float = 0.02,
    ):
        super().__init__(model)
        self.lambdas = lambdas
        self.lr = lr
        self.max_iter = max_iter
        self.tol = tol
        self.target_margin = target_margin
        self.max_step = max_step

    def generate(self, x, profile=None, seed: int = 0) -> RecourseResult:
        check_fitted(self, ["schema_", "quantile_table_"])
        cfg = WachterConfig(
            lambdas=tuple(self.lambdas),
            lr=self.lr,
            max_iter=self.max_iter,
            tol=self.tol,
            target_margin=self.target_margin,
            max_step=self.max_step,
        )
        result = wachter(self.model, x, self.schema_, cfg, self.quantile_table_)
        # Wachter is deterministic; carry the requested seed through so batch
        # results stay replayable by the same call signature.
        return dataclasses.replace(result, seed=seed)
