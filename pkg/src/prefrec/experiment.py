"""Batch experiment runner behind the ``run`` CLI subcommand.

A JSON config names a dataset (CSV + schema, or a synthetic spec), a model
(train or load), a recourse method, a preference source, and optional sweep
axes (temperature, step-size multipliers, actionable-subset sizes). Every
sweep point generates recourses for all negatively classified individuals
with per-individual seeds, then writes:

* ``results.jsonl``: one line per (sweep point, individual), canonical
  serialization without timing, so reruns are byte-identical;
* ``metrics.csv``: one row per sweep point (the ``avg_time_s`` column is
  measured wall time and is the only non-reproducible output);
* ``plot_gamma_hat.csv`` and ``plot_cost.csv``: long-format plot-ready data.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import GrowingSpheresRecourse, WachterRecourse
from .data import Dataset, DatasetSchema, generate_synthetic, load_csv, load_schema
from .engine import PreferenceGuidedRecourse
from .metrics import evaluate, write_report_csv
from .models import load_model, train_logistic, train_mlp
from .preferences import PreferenceProfile, default_profile, renormalize_gamma
from .validation import SchemaError

METHODS = {
    "upar": PreferenceGuidedRecourse,
    "growing_spheres": GrowingSpheresRecourse,
    "wachter": WachterRecourse,
}

SWEEP_AXES = ("tau", "step_multiplier", "actionable_counts")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: dict
    model: dict
    method: str = "upar"
    preferences: object = "default"
    sweep: dict | None = None
    seed: int = 0
    limit: int | None = None
    output_dir: str = "results"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        unknown = set(d) - {
            "dataset", "model", "method", "preferences", "sweep", "seed", "limit", "output_dir",
        }
        if unknown:
            raise SchemaError(f"config: unknown keys {sorted(unknown)}")
        for key in ("dataset", "model"):
            if key not in d:
                raise SchemaError(f"config: missing required key {key!r}")
        cfg = cls(
            dataset=d["dataset"],
            model=d["model"],
            method=d.get("method", "upar"),
            preferences=d.get("preferences", "default"),
            sweep=d.get("sweep"),
            seed=int(d.get("seed", 0)),
            limit=d.get("limit"),
            output_dir=d.get("output_dir", "results"),
        )
        if cfg.method not in METHODS:
            raise SchemaError(f"config: method must be one of {sorted(METHODS)}")
        if cfg.sweep:
            for axis, values in cfg.sweep.items():
                if axis not in SWEEP_AXES:
                    raise SchemaError(f"config: sweep.{axis} is not a known axis")
                if not isinstance(values, list) or not values:
                    raise SchemaError(f"config: sweep.{axis} must be a non-empty list")
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _load_dataset(spec: dict, base: Path) -> Dataset:
    if "csv" in spec:
        schema = load_schema(base / spec["schema"] if not Path(spec["schema"]).is_absolute() else spec["schema"])
        return load_csv(base / spec["csv"] if not Path(spec["csv"]).is_absolute() else spec["csv"], schema)
    if "synthetic" in spec:
        syn = spec["synthetic"]
        if isinstance(syn.get("schema"), dict):
            schema = DatasetSchema.from_dict(syn["schema"])
        else:
            schema = load_schema(base / syn["schema"] if not Path(syn["schema"]).is_absolute() else syn["schema"])
        return generate_synthetic(
            seed=int(syn.get("seed", 0)),
            n=int(syn.get("n", 500)),
            schema=schema,
            separation=float(syn.get("separation", 0.1)),
        )
    raise SchemaError("config: dataset needs either 'csv' or 'synthetic'")


def _build_model(spec: dict, dataset: Dataset, base: Path):
    if "load" in spec:
        path = Path(spec["load"])
        return load_model(base / path if not path.is_absolute() else path,
                          n_features=dataset.schema.n_features)
    if "train" in spec:
        t = dict(spec["train"])
        kind = t.pop("type", "logistic")
        if kind == "logistic":
            return train_logistic(dataset, **t)
        if kind == "mlp":
            if "hidden" in t:
                t["hidden"] = tuple(t["hidden"])
            return train_mlp(dataset, **t)
        raise SchemaError(f"config: model.train.type must be 'logistic' or 'mlp', got {kind!r}")
    raise SchemaError("config: model needs either 'train' or 'load'")


def _profile_for(
    base_profile: PreferenceProfile,
    schema: DatasetSchema,
    preferences,
    individual: int,
    rng: np.random.Generator,
) -> PreferenceProfile:
    if preferences == "default":
        return base_profile
    if "fixed" in preferences:
        return PreferenceProfile.from_dict(preferences["fixed"])
    if "random" in preferences:
        spec = preferences["random"]
        target = spec["feature"]
        candidates = spec["candidates"]
        drawn = float(rng.choice(candidates))
        others = [n for n in schema.continuous_actionable if n != target]
        gamma = {target: drawn}
        if others:
            rest = renormalize_gamma({n: base_profile.gamma[n] for n in others})
            for n, share in rest.items():
                gamma[n] = (1.0 - drawn) * share
        return base_profile.with_updates(gamma=gamma)
    raise SchemaError("config: preferences must be 'default', {'fixed': ...}, "
                      "{'file': ...} or {'random': ...}")


def _load_profile_file(path, n: int) -> list[PreferenceProfile]:
    profiles = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                profiles.append(PreferenceProfile.from_dict(json.loads(line)))
    if len(profiles) < n:
        raise SchemaError(f"profile file has {len(profiles)} rows, need {n}")
    return profiles[:n]


def _sweep_points(cfg: ExperimentConfig) -> list[dict]:
    sweep = cfg.sweep or {}
    taus = sweep.get("tau", [None])
    steps = sweep.get("step_multiplier", [None])
    counts = sweep.get("actionable_counts", [None])
    return [
        {"tau": t, "step_multiplier": s, "actionable_count": k}
        for t, s, k in itertools.product(taus, steps, counts)
    ]


def _apply_point(
    dataset: Dataset, point: dict
) -> tuple[Dataset, DatasetSchema]:
    schema = dataset.schema
    k = point["actionable_count"]
    if k is not None:
        actionable_names = [schema.features[i].name for i in schema.actionable_indices]
        if not 1 <= k <= len(actionable_names):
            raise SchemaError(f"actionable_count {k} outside 1..{len(actionable_names)}")
        subset = actionable_names[:k]
        schema = schema.with_actionable(subset)
        if not schema.continuous_actionable:
            raise SchemaError("actionable subset keeps no continuous feature")
        dataset = Dataset(schema, dataset.X, dataset.y, dataset.rejected_rows)
    return dataset, schema


def _point_profile(base: PreferenceProfile, point: dict, schema: DatasetSchema) -> PreferenceProfile:
    profile = base
    if point["tau"] is not None:
        profile = profile.with_updates(tau=float(point["tau"]))
    if point["step_multiplier"] is not None:
        mult = float(point["step_multiplier"])
        steps = dict(profile.steps)
        for name in schema.continuous_actionable:
            steps[name] = profile.steps[name] * mult
        profile = profile.with_updates(steps=steps)
    return profile


def run_experiment(cfg: ExperimentConfig, base_dir=".") -> dict:
    """Execute the configured experiment; returns a small summary dict."""
    base = Path(base_dir)
    out = Path(cfg.output_dir)
    if not out.is_absolute():
        out = base / out
    out.mkdir(parents=True, exist_ok=True)

    full_dataset = _load_dataset(cfg.dataset, base)
    model = _build_model(cfg.model, full_dataset, base)

    labels = model.predict_label(full_dataset.X)
    negative_idx = np.flatnonzero(labels == -1)
    if cfg.limit is not None:
        negative_idx = negative_idx[: cfg.limit]
    if negative_idx.size == 0:
        raise SchemaError("no negatively classified individuals to serve")

    results_path = out / "results.jsonl"
    gamma_rows: list[dict] = []
    cost_rows: list[dict] = []
    metric_rows: list[dict] = []

    file_profiles = None
    if isinstance(cfg.preferences, dict) and "file" in cfg.preferences:
        p = Path(cfg.preferences["file"])
        file_profiles = _load_profile_file(base / p if not p.is_absolute() else p, negative_idx.size)

    with open(results_path, "w", encoding="utf-8") as results_fh:
        for point in _sweep_points(cfg):
            dataset, schema = _apply_point(full_dataset, point)
            generator = METHODS[cfg.method](model=model).fit(dataset)
            base_profile = _point_profile(default_profile(schema), point, schema)
            draw_rng = np.random.default_rng(cfg.seed)

            xs, profiles, results = [], [], []
            for j, row_idx in enumerate(negative_idx):
                x = dataset.X[row_idx]
                if file_profiles is not None:
                    profile = _point_profile(file_profiles[j], point, schema)
                else:
                    profile = _profile_for(base_profile, schema, cfg.preferences, j, draw_rng)
                result = generator.generate(x, profile=profile, seed=cfg.seed + j)
                xs.append(x)
                profiles.append(profile)
                results.append(result)
                record = {"point": point, "individual": int(row_idx), **result.to_dict()}
                results_fh.write(json.dumps(record, sort_keys=True) + "\n")

                if result.valid and result.fractional_costs:
                    for name, got in sorted(result.fractional_costs.items()):
                        gamma_rows.append({
                            **point,
                            "individual": int(row_idx),
                            "feature": name,
                            "gamma": profile.gamma.get(name, 0.0),
                            "gamma_hat": got,
                        })
                if result.valid:
                    cost_rows.append({
                        **point,
                        "individual": int(row_idx),
                        "total_cost": result.total_cost_after,
                        "steps_used": result.steps_used,
                    })

            report = evaluate(results, np.asarray(xs), model, schema, profiles)
            metric_rows.append({**point, **report.row()})

    write_report_csv(
        out / "metrics.csv", metric_rows,
        extra_columns=("tau", "step_multiplier", "actionable_count"),
    )
    _write_long_csv(out / "plot_gamma_hat.csv", gamma_rows,
                    ("tau", "step_multiplier", "actionable_count", "individual",
                     "feature", "gamma", "gamma_hat"))
    _write_long_csv(out / "plot_cost.csv", cost_rows,
                    ("tau", "step_multiplier", "actionable_count", "individual",
                     "total_cost", "steps_used"))
    return {
        "individuals": int(negative_idx.size),
        "sweep_points": len(metric_rows),
        "output_dir": str(out),
        "files": ["results.jsonl", "metrics.csv", "plot_gamma_hat.csv", "plot_cost.csv"],
    }


def _write_long_csv(path, rows: list[dict], columns) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k) for k in columns})
