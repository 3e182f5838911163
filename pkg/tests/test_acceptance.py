"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL verdict line (visible with ``pytest -s`` or on failure).

Every expected value is either computed by an independent oracle inside this
module (brute-force metric reimplementations, finite differences, rank
statistics) or is an exact structural requirement (zero violations, bit
identity). Tolerances are fixed here and nowhere else.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from prefrec import (
    DatasetSchema,
    FeatureSpec,
    GrowingSpheresRecourse,
    MlpClassifier,
    PreferenceGuidedRecourse,
    WachterRecourse,
    constraint_violations,
    generate_synthetic,
    load_csv,
    min_max_scale,
    prmse,
    proximity,
    redundancy,
    run_stage1,
    save_csv,
    sparsity,
    train_logistic,
)
from prefrec.engine import RecourseResult
from prefrec.metrics import expected_cost_bound_check

from conftest import negatives


def verdict(name: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'} - {name}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


# -- shared populations -------------------------------------------------------


@pytest.fixture(scope="module")
def mixed_results(upar_mixed, dataset_mixed, lr_mixed):
    idx = negatives(lr_mixed, dataset_mixed, limit=260)
    xs = dataset_mixed.X[idx]
    results = [upar_mixed.generate(x, seed=k) for k, x in enumerate(xs)]
    return xs, results


@pytest.fixture(scope="module")
def csv_results(tmp_path_factory, dataset_2cont, lr_2cont):
    """Recourses over a dataset that went through the CSV path, standing in
    for user-supplied data."""
    path = tmp_path_factory.mktemp("csv") / "data.csv"
    save_csv(dataset_2cont, path)
    reloaded = load_csv(path, dataset_2cont.schema)
    gen = PreferenceGuidedRecourse(model=lr_2cont).fit(reloaded)
    idx = negatives(lr_2cont, reloaded, limit=260)
    xs = reloaded.X[idx]
    results = [gen.generate(x, seed=1000 + k) for k, x in enumerate(xs)]
    return xs, results


def test_zero_constraint_violations(mixed_results, csv_results, schema_mixed, schema_2cont):
    t0 = time.time()
    xs_a, res_a = mixed_results
    xs_b, res_b = csv_results
    total = len(res_a) + len(res_b)
    assert total >= 500
    violations = [constraint_violations(r, schema_mixed) for r in res_a]
    violations += [constraint_violations(r, schema_2cont) for r in res_b]
    worst = max(violations)
    verdict(
        "zero constraint violations",
        worst == 0,
        f"{total} recourses, max violations {worst}, {time.time() - t0:.1f}s",
    )


def test_validity_of_all_valid_results(mixed_results, csv_results, lr_mixed, lr_2cont):
    xs_a, res_a = mixed_results
    xs_b, res_b = csv_results
    ok = all(
        lr_mixed.predict_label(x + r.final_action) == 1
        for x, r in zip(xs_a, res_a)
        if r.valid
    ) and all(
        lr_2cont.predict_label(x + r.final_action) == 1
        for x, r in zip(xs_b, res_b)
        if r.valid
    )
    n_valid = sum(r.valid for r in res_a + res_b)
    verdict("validity of every valid result", ok, f"{n_valid} valid results")


def test_preference_tracking(upar_2cont, dataset_2cont, lr_2cont):
    t0 = time.time()
    profile = upar_2cont.default_profile().with_updates(
        gamma={"duration": 0.8, "amount": 0.2}
    )
    idx = negatives(lr_2cont, dataset_2cont, limit=220)
    assert len(idx) >= 200
    results = [
        upar_2cont.generate(dataset_2cont.X[i], profile=profile, seed=k)
        for k, i in enumerate(idx)
    ]
    shares = [
        r.fractional_costs["duration"]
        for r in results
        if r.valid and r.fractional_costs
    ]
    mean_share = float(np.mean(shares))
    overall, _, _ = prmse(results, [profile] * len(results))
    verdict(
        "preference tracking",
        0.70 <= mean_share <= 0.90 and overall <= 0.15,
        f"mean share {mean_share:.3f}, prmse {overall:.3f}, {time.time() - t0:.1f}s",
    )


def test_prmse_dominance_over_baselines(dataset_2cont, lr_2cont, upar_2cont):
    t0 = time.time()
    idx = negatives(lr_2cont, dataset_2cont, limit=150)
    rng = np.random.default_rng(99)
    base = upar_2cont.default_profile()
    profiles = []
    for _ in idx:
        g = float(rng.choice([0.3, 0.6, 0.9]))
        profiles.append(base.with_updates(gamma={"duration": g, "amount": 1.0 - g}))

    gs = GrowingSpheresRecourse(model=lr_2cont).fit(dataset_2cont)
    wa = WachterRecourse(model=lr_2cont).fit(dataset_2cont)
    upar_res, gs_res, wa_res = [], [], []
    for k, i in enumerate(idx):
        x = dataset_2cont.X[i]
        upar_res.append(upar_2cont.generate(x, profile=profiles[k], seed=k))
        gs_res.append(gs.generate(x, seed=k))
        wa_res.append(wa.generate(x, seed=k))
    p_upar = prmse(upar_res, profiles)[0]
    p_gs = prmse(gs_res, profiles)[0]
    p_wa = prmse(wa_res, profiles)[0]
    verdict(
        "preference error dominance",
        p_upar < p_gs and p_upar < p_wa,
        f"upar {p_upar:.3f} vs gs {p_gs:.3f} / wachter {p_wa:.3f}, {time.time() - t0:.1f}s",
    )


def test_cost_correction_saves_continuous_cost(mixed_results, lr_mixed, upar_mixed,
                                               dataset_mixed, schema_mixed):
    t0 = time.time()
    xs, results = mixed_results
    guard = schema_mixed.index("guarantor")
    fired = [(x, r) for x, r in zip(xs, results) if r.valid and r.final_action[guard] != 0.0]
    assert len(fired) >= 30
    never_increases = all(
        r.total_cost_after <= r.total_cost_before + 1e-12 for _, r in fired
    )
    still_valid = all(lr_mixed.predict_label(x + r.final_action) == 1 for x, r in fired)
    # Continuous savings: stage-1 action vs corrected action, priced on the
    # continuous actionable components only.
    q = upar_mixed.quantile_table_
    from prefrec import shift_cost

    savings = []
    for x, r in fired:
        cont = [schema_mixed.index(n) for n in schema_mixed.continuous_actionable]
        before = sum(shift_cost(q, i, x[i], r.stage1_action[i]) for i in cont)
        after = sum(shift_cost(q, i, x[i], r.final_action[i]) for i in cont)
        savings.append(before - after)
    avg_saving = float(np.mean(savings))
    verdict(
        "cost correction",
        never_increases and still_valid and avg_saving > 0,
        f"{len(fired)} categorical runs, avg continuous saving {avg_saving:.4f}, "
        f"{time.time() - t0:.1f}s",
    )


def test_tau_monotone_cost(upar_mixed, dataset_mixed, lr_mixed):
    t0 = time.time()
    idx = negatives(lr_mixed, dataset_mixed, limit=150)
    stats = []
    for tau in (1.0, 0.5, 0.25, 0.125):
        profile = upar_mixed.default_profile().with_updates(tau=tau)
        costs = [
            r.total_cost_after
            for k, i in enumerate(idx)
            if (r := upar_mixed.generate(dataset_mixed.X[i], profile=profile, seed=k)).valid
        ]
        stats.append((float(np.mean(costs)), float(np.std(costs, ddof=1))))
    ok = True
    for (m_hi, s_hi), (m_lo, s_lo) in zip(stats, stats[1:]):
        pooled = math.sqrt((s_hi ** 2 + s_lo ** 2) / 2)
        ok &= m_lo <= m_hi + pooled
    means = ", ".join(f"{m:.3f}" for m, _ in stats)
    verdict("tau monotonicity", ok, f"means at tau 1,1/2,1/4,1/8: {means}, "
                                    f"{time.time() - t0:.1f}s")


def test_expected_cost_bound_monte_carlo(upar_2cont, dataset_2cont, lr_2cont, schema_2cont):
    t0 = time.time()
    profile = upar_2cont.default_profile().with_updates(
        gamma={"duration": 0.8, "amount": 0.2}
    )
    q = upar_2cont.quantile_table_
    x = dataset_2cont.X[negatives(lr_2cont, dataset_2cont)[2]]
    trajectories = [
        run_stage1(lr_2cont, x, profile, q, rng=np.random.default_rng(s))
        for s in range(1000)
    ]
    report = expected_cost_bound_check(trajectories, profile, schema_2cont)
    ok = all(c.satisfied for c in report.per_feature)
    detail = "; ".join(
        f"{c.feature}: {c.mean_cost:.4f} <= {c.bound:.4f}" for c in report.per_feature
    )
    verdict("expected-cost bound", ok, f"{detail}, {time.time() - t0:.1f}s")


def test_gradient_oracle_mlp():
    t0 = time.time()
    rng = np.random.default_rng(7)
    model = MlpClassifier.random_init(6, hidden=(18, 9, 3), activation="relu", seed=3)
    checked, worst = 0, 0.0
    while checked < 100:
        x = rng.uniform(-3, 3, size=6)
        if _near_relu_kink(model, x):
            continue
        fd = np.zeros(6)
        h = 1e-5
        for i in range(6):
            up, down = x.copy(), x.copy()
            up[i] += h
            down[i] -= h
            fd[i] = (model.predict_proba(up) - model.predict_proba(down)) / (2 * h)
        grad = model.sensitivity(x)
        rel = np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-12)
        worst = max(worst, rel)
        checked += 1
    verdict("gradient oracle", worst <= 1e-4,
            f"100 points, worst relative error {worst:.2e}, {time.time() - t0:.1f}s")


def _near_relu_kink(model, x, tol=1e-4):
    a = x
    for W, b in zip(model.coefs_[:-1], model.intercepts_[:-1]):
        pre = a @ W + b
        if np.any(np.abs(pre) < tol):
            return True
        a = np.maximum(pre, 0.0)
    return False


DETERMINISM_SCRIPT = """
import numpy as np
from prefrec import (DatasetSchema, FeatureSpec, PreferenceGuidedRecourse,
                     generate_synthetic, train_logistic)

schema = DatasetSchema(
    features=(
        FeatureSpec("duration", domain_min=0.0, domain_max=100.0),
        FeatureSpec("amount", domain_min=0.0, domain_max=100.0),
        FeatureSpec("guarantor", kind="categorical", allowed_values=(0.0, 1.0)),
    ),
    target_name="y",
)
ds = generate_synthetic(seed=5, n=120, schema=schema, separation=0.1)
model = train_logistic(ds, epochs=120, lr=1.0, seed=0)
gen = PreferenceGuidedRecourse(model=model).fit(ds)
idx = int(np.flatnonzero(model.predict_label(ds.X) == -1)[0])
profile = gen.default_profile().with_updates(gamma={"duration": 0.7, "amount": 0.3})
print(gen.generate(ds.X[idx], profile=profile, seed=123).to_json())
"""


def test_bit_identical_across_processes():
    t0 = time.time()
    runs = [
        subprocess.run(
            [sys.executable, "-c", DETERMINISM_SCRIPT],
            capture_output=True, check=True,
        ).stdout
        for _ in range(2)
    ]
    body = json.loads(runs[0])
    verdict(
        "cross-process determinism",
        runs[0] == runs[1] and body["valid"],
        f"{len(runs[0])} bytes, {time.time() - t0:.1f}s",
    )


def test_metric_oracles_brute_force(schema_mixed):
    """redundancy / proximity / sparsity / prmse vs independent
    reimplementations on 50 random small cases."""
    from prefrec import LogisticClassifier

    rng = np.random.default_rng(21)
    cat = schema_mixed.index("guarantor")
    agree = True
    for _ in range(50):
        model = LogisticClassifier()
        model.weights_ = rng.normal(size=4)
        model.bias_ = float(rng.normal())
        model.n_features_in_ = 4
        x = rng.uniform(0, 100, size=4)
        x[cat] = float(rng.integers(0, 2))
        x[3] = rng.uniform(18, 90)
        r = rng.uniform(-10, 10, size=4) * (rng.random(4) < 0.6)
        r[cat] = float(rng.integers(0, 2)) - x[cat] if rng.random() < 0.5 else 0.0

        # Sparsity oracle: explicit loop.
        s_oracle = sum(1 for v in r if v != 0.0)
        agree &= sparsity(r) == s_oracle

        # Proximity oracle: scale by hand from the schema fields.
        diff = []
        for j, spec in enumerate(schema_mixed.features):
            if spec.is_continuous:
                width = spec.domain_max - spec.domain_min
                diff.append(((x[j] + r[j]) - spec.domain_min) / width
                            - (x[j] - spec.domain_min) / width)
            else:
                diff.append(r[j])  # binary 0/1 values scale to their position
        p_oracle = math.sqrt(sum(d * d for d in diff))
        agree &= abs(proximity(x, r, schema_mixed) - p_oracle) <= 1e-12

        # Redundancy oracle: literal revert-one-at-a-time loop.
        red_oracle = 0
        for j in range(4):
            if r[j] == 0.0:
                continue
            probe = x + r
            probe[j] = x[j]
            if model.predict_proba(probe) >= 0.5:
                red_oracle += 1
        agree &= redundancy(model, x, r) == red_oracle

    # prmse oracle: direct double loop over individuals and features.
    base_gamma = {"duration": 0.5, "amount": 0.5}
    results, profiles = [], []
    from prefrec import default_profile

    for k in range(50):
        g = float(rng.uniform(0.1, 0.9))
        frac = {"duration": g, "amount": 1.0 - g}
        results.append(
            RecourseResult(
                valid=True, stage1_action=np.zeros(2), final_action=np.ones(2),
                steps_used=1, total_cost_before=1.0, total_cost_after=1.0,
                fractional_costs=frac, final_probability=0.6, wall_time=0.0, seed=k,
            )
        )
        profiles.append(default_profile(
            DatasetSchema(
                features=(
                    FeatureSpec("duration", domain_min=0.0, domain_max=1.0),
                    FeatureSpec("amount", domain_min=0.0, domain_max=1.0),
                ),
                target_name="y",
            )
        ))
    overall, per_feature, _ = prmse(results, profiles)
    for name in ("duration", "amount"):
        sq = [
            (results[k].fractional_costs[name] - base_gamma[name]) ** 2
            for k in range(50)
        ]
        agree &= abs(per_feature[name] - math.sqrt(sum(sq) / 50)) <= 1e-12
    agree &= abs(overall - sum(per_feature.values()) / 2) <= 1e-12
    verdict("metric oracles", agree, "50 random cases, tolerance 1e-12")


def test_timing_grows_with_actionable_set_size():
    t0 = time.time()
    features = tuple(
        FeatureSpec(f"f{i}", domain_min=0.0, domain_max=100.0) for i in range(8)
    )
    schema = DatasetSchema(features=features, target_name="y")
    ds = generate_synthetic(seed=17, n=600, schema=schema, separation=0.05)
    model = train_logistic(ds, epochs=200, lr=1.0, seed=0)
    idx = np.flatnonzero(model.predict_label(ds.X) == -1)[:60]
    sizes = [2, 4, 6, 8]
    avg_times = []
    for k in sizes:
        sub_schema = schema.with_actionable([f"f{i}" for i in range(k)])
        from prefrec import Dataset

        sub_ds = Dataset(sub_schema, ds.X, ds.y)
        gen = PreferenceGuidedRecourse(model=model).fit(sub_ds)
        results = [gen.generate(ds.X[i], seed=j) for j, i in enumerate(idx)]
        avg_times.append(float(np.mean([r.wall_time for r in results if r.valid])))
    rho = _spearman(sizes, avg_times)
    times = ", ".join(f"{t * 1e3:.1f}ms" for t in avg_times)
    verdict("timing trend", rho > 0,
            f"avg time by size {sizes}: {times}, spearman {rho:.2f}, "
            f"{time.time() - t0:.1f}s")


def _spearman(a, b) -> float:
    ra = np.argsort(np.argsort(a)).astype(float)
    rb = np.argsort(np.argsort(b)).astype(float)
    ra -= ra.mean()
    rb -= rb.mean()
    return float(np.sum(ra * rb) / math.sqrt(np.sum(ra ** 2) * np.sum(rb ** 2)))
