"""Command-line interface: batch experiments, single recourses, serving.

Subcommands
-----------
run       execute a JSON experiment config (sweeps, metrics, plot data)
recourse  print the suggested action for one instance, optionally with the
          full step trace
serve     start the HTTP service around a model and reference dataset

The service port comes from --port, falling back to the PREFREC_PORT
environment variable, then 8000.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .data import load_csv, load_schema
from .engine import EngineConfig, PreferenceGuidedRecourse
from .experiment import ExperimentConfig, run_experiment
from .models import load_model
from .preferences import PreferenceProfile, default_profile, validate_profile
from .validation import DataError, PositiveInstanceError, ProfileError, SchemaError


def _add_artifact_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", required=True, help="model JSON file")
    parser.add_argument("--schema", required=True, help="schema JSON file")
    parser.add_argument("--data", required=True,
                        help="reference CSV used to build the quantile table")


def _load_artifacts(args):
    schema = load_schema(args.schema)
    dataset = load_csv(args.data, schema)
    model = load_model(args.model, n_features=schema.n_features)
    return schema, dataset, model


def _load_instance(path, schema) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, dict):
        missing = [n for n in schema.names if n not in doc]
        if missing:
            raise DataError(f"instance file missing feature(s): {missing}")
        return np.asarray([float(doc[n]) for n in schema.names])
    return np.asarray([float(v) for v in doc])


def cmd_run(args) -> int:
    try:
        cfg = ExperimentConfig.from_file(args.config)
        if args.out is not None:
            cfg = ExperimentConfig.from_dict({**_cfg_dict(cfg), "output_dir": args.out})
        if args.seed is not None:
            cfg = ExperimentConfig.from_dict({**_cfg_dict(cfg), "seed": args.seed})
        summary = run_experiment(cfg, base_dir=Path(args.config).parent)
    except (SchemaError, DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cfg_dict(cfg: ExperimentConfig) -> dict:
    return {
        "dataset": cfg.dataset,
        "model": cfg.model,
        "method": cfg.method,
        "preferences": cfg.preferences,
        "sweep": cfg.sweep,
        "seed": cfg.seed,
        "limit": cfg.limit,
        "output_dir": cfg.output_dir,
    }


def cmd_recourse(args) -> int:
    try:
        schema, dataset, model = _load_artifacts(args)
        x = _load_instance(args.instance, schema)
        if args.profile:
            with open(args.profile, "r", encoding="utf-8") as fh:
                profile = PreferenceProfile.from_dict(json.load(fh))
        else:
            profile = default_profile(schema)
        violations = validate_profile(profile, schema)
        if violations:
            print("invalid preference profile:")
            for v in violations:
                print(f"  - {v}")
            return 2
        generator = PreferenceGuidedRecourse(
            model=model, rank_order=args.rank_order
        ).fit(dataset)
        result = generator.generate(x, profile=profile, seed=args.seed)
    except PositiveInstanceError:
        print("This instance already receives the favorable outcome; "
              "no recourse is needed.")
        return 1
    except (SchemaError, DataError, ProfileError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if not result.valid:
        print(f"no recourse found within {profile.max_steps} steps "
              f"(final probability {result.final_probability:.4f}, seed {result.seed})")
        return 1

    print(f"recourse found in {result.steps_used} steps (seed {result.seed})")
    print(f"total cost: {result.total_cost_after:.4f} "
          f"(before correction: {result.total_cost_before:.4f})")
    header = f"{'feature':<24}{'current':>12}{'suggested':>12}{'cost share':>12}{'requested':>12}"
    print(header)
    print("-" * len(header))
    frac = result.fractional_costs or {}
    for i, spec in enumerate(schema.features):
        if result.final_action[i] == 0.0:
            continue
        got = frac.get(spec.name)
        print(
            f"{spec.name:<24}{x[i]:>12.4g}{x[i] + result.final_action[i]:>12.4g}"
            f"{(f'{got:.3f}' if got is not None else '-'):>12}"
            f"{(f'{profile.gamma[spec.name]:.3f}' if spec.name in profile.gamma else '-'):>12}"
        )
    if args.trace and result.trajectory is not None:
        print("\nstep trace:")
        for rec in result.trajectory.records:
            acted = ", ".join(schema.names[j] for j in np.flatnonzero(rec.acted)) or "-"
            print(f"  t={rec.t:<5d} p={rec.prediction:.4f} acted: {acted}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    try:
        schema, dataset, model = _load_artifacts(args)
    except (SchemaError, DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    port = args.port or int(os.environ.get("PREFREC_PORT", "8000"))
    app = create_app(model, dataset, EngineConfig())
    uvicorn.run(app, host=args.host, port=port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prefrec",
        description="Preference-guided actionable recourse for tabular classifiers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a batch experiment config")
    p_run.add_argument("--config", required=True, help="experiment JSON config")
    p_run.add_argument("--out", help="override the config's output directory")
    p_run.add_argument("--seed", type=int, help="override the config's seed")
    p_run.set_defaults(func=cmd_run)

    p_rec = sub.add_parser("recourse", help="generate recourse for one instance")
    _add_artifact_args(p_rec)
    p_rec.add_argument("--instance", required=True,
                       help="JSON file: {feature: value} or value array")
    p_rec.add_argument("--profile", help="preference profile JSON file")
    p_rec.add_argument("--seed", type=int, default=0)
    p_rec.add_argument("--trace", action="store_true", help="print the step trace")
    p_rec.add_argument("--rank-order", choices=("ascending", "descending"),
                       default="ascending")
    p_rec.set_defaults(func=cmd_recourse)

    p_srv = sub.add_parser("serve", help="start the HTTP service")
    _add_artifact_args(p_srv)
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=None,
                       help="default: PREFREC_PORT env var, then 8000")
    p_srv.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
