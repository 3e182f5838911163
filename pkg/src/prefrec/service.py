"""HTTP service exposing recourse generation and preference what-if loops.

All endpoints speak JSON. Bodies are parsed manually so the status codes stay
exact: 400 for malformed payloads or invalid preference profiles (violations
embedded in the body), 422 when the instance already classifies positive.
The service holds only immutable startup artifacts (model, schema, quantile
table), so identical requests yield identical responses; callers supply the
seed and can replay any interactive result from the CLI.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .baselines import GrowingSpheresRecourse, WachterRecourse
from .data import Dataset
from .engine import EngineConfig, PreferenceGuidedRecourse, RecourseResult
from .metrics import constraint_violations, proximity, redundancy, sparsity
from .models import Predictor
from .preferences import PreferenceProfile, default_profile, validate_profile
from .quantiles import QuantileTable
from .validation import DataError, PositiveInstanceError, ProfileError, SchemaError

METHOD_CLASSES = {
    "upar": PreferenceGuidedRecourse,
    "growing_spheres": GrowingSpheresRecourse,
    "wachter": WachterRecourse,
}


def _bad_request(message: str, violations=None) -> JSONResponse:
    body = {"error": message}
    if violations is not None:
        body["violations"] = list(violations)
    return JSONResponse(status_code=400, content=body)


def create_app(model: Predictor, dataset: Dataset, engine_config: EngineConfig | None = None) -> FastAPI:
    """Build the service around one model and its reference dataset."""
    schema = dataset.schema
    table = QuantileTable.from_dataset(dataset)
    generators = {
        name: klass(model=model).fit(dataset) for name, klass in METHOD_CLASSES.items()
    }
    if engine_config is not None:
        upar = generators["upar"]
        upar.epsilon_q = engine_config.cost.epsilon_q
        upar.epsilon_c = engine_config.cost.epsilon_c
        upar.rank_order = engine_config.rank_order

    labels = model.predict_label(dataset.X)
    negatives = np.flatnonzero(labels == -1)
    example = dataset.X[negatives[0]].tolist() if negatives.size else None

    app = FastAPI(title="prefrec", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def parse_instance(payload) -> np.ndarray:
        if isinstance(payload, dict):
            missing = [n for n in schema.names if n not in payload]
            if missing:
                raise DataError(f"instance missing feature(s): {missing}")
            values = [float(payload[n]) for n in schema.names]
        elif isinstance(payload, list):
            if len(payload) != schema.n_features:
                raise DataError(
                    f"instance must have {schema.n_features} values, got {len(payload)}"
                )
            values = [float(v) for v in payload]
        else:
            raise DataError("instance must be an object or an array of numbers")
        return np.asarray(values, dtype=float)

    def parse_profile(payload) -> PreferenceProfile:
        if payload is None:
            return default_profile(schema)
        if not isinstance(payload, dict):
            raise SchemaError("preferences must be an object")
        profile = PreferenceProfile.from_dict(payload)
        violations = validate_profile(profile, schema)
        if violations:
            raise ProfileError(violations)
        return profile

    def run_one(x: np.ndarray, profile: PreferenceProfile, seed: int, method: str) -> dict:
        generator = generators[method]
        result: RecourseResult = generator.generate(x, profile=profile, seed=seed)
        suggested = x + result.final_action
        body = result.to_dict(include_trace=True, schema=schema)
        body.update(
            {
                "instance": {n: float(v) for n, v in zip(schema.names, x)},
                "suggested": {n: float(v) for n, v in zip(schema.names, suggested)},
                "action": {n: float(v) for n, v in zip(schema.names, result.final_action)},
                "gamma": dict(profile.gamma),
                "gamma_hat": result.fractional_costs,
                "metrics": {
                    "proximity": proximity(x, result.final_action, schema),
                    "sparsity": sparsity(result.final_action),
                    "constraint_violations": constraint_violations(result, schema),
                    "redundancy": redundancy(model, x, result.final_action)
                    if result.valid
                    else 0,
                },
            }
        )
        body.setdefault("trace", [])
        return body

    async def read_json(request: Request) -> dict:
        try:
            body = await request.json()
        except Exception as exc:
            raise DataError(f"request body is not valid JSON: {exc}") from exc
        if not isinstance(body, dict):
            raise DataError("request body must be a JSON object")
        return body

    @app.get("/api/schema")
    def get_schema():
        doc = schema.to_dict()
        doc["example_instance"] = example
        return doc

    @app.get("/api/defaults")
    def get_defaults():
        return default_profile(schema).to_dict()

    @app.post("/api/validate")
    async def post_validate(request: Request):
        try:
            body = await read_json(request)
            profile = PreferenceProfile.from_dict(body.get("preferences", body))
        except (DataError, SchemaError, TypeError, ValueError) as exc:
            return _bad_request(str(exc))
        violations = validate_profile(profile, schema)
        return {"ok": not violations, "violations": violations}

    @app.post("/api/recourse")
    async def post_recourse(request: Request):
        try:
            body = await read_json(request)
            x = parse_instance(body.get("instance"))
            profile = parse_profile(body.get("preferences"))
            seed = int(body.get("seed", 0))
            method = body.get("method", "upar")
            if method not in generators:
                raise DataError(f"method must be one of {sorted(generators)}")
        except ProfileError as exc:
            return _bad_request("invalid preference profile", exc.violations)
        except (DataError, SchemaError, TypeError, ValueError) as exc:
            return _bad_request(str(exc))
        try:
            return run_one(x, profile, seed, method)
        except PositiveInstanceError as exc:
            return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.post("/api/whatif")
    async def post_whatif(request: Request):
        try:
            body = await read_json(request)
            x = parse_instance(body.get("instance"))
            raw_profiles = body.get("profiles")
            if not isinstance(raw_profiles, list) or not raw_profiles:
                raise DataError("profiles must be a non-empty array")
            profiles = [parse_profile(p) for p in raw_profiles]
            seed = int(body.get("seed", 0))
            method = body.get("method", "upar")
            if method not in generators:
                raise DataError(f"method must be one of {sorted(generators)}")
        except ProfileError as exc:
            return _bad_request("invalid preference profile", exc.violations)
        except (DataError, SchemaError, TypeError, ValueError) as exc:
            return _bad_request(str(exc))
        try:
            results = [
                {**run_one(x, profile, seed, method), "profile_index": i}
                for i, profile in enumerate(profiles)
            ]
        except PositiveInstanceError as exc:
            return JSONResponse(status_code=422, content={"error": str(exc)})
        return {"results": results}

    return app
