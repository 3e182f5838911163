// Pure elicitation-state logic, kept free of DOM access so it is unit
// testable. The displayed cost shares always sum to 1: moving one slider
// proportionally rescales the unpinned rest. Every displayed number in the
// result panels comes from the service; this module only manages inputs.

import type { FeatureDoc, Profile, RecourseResponse, SchemaResponse } from "./types.js";

export interface HistoryEntry {
    profile: Profile;
    result: RecourseResponse;
}

export interface ElicitationState {
    features: FeatureDoc[];
    instance: Record<string, number>;
    gamma: Record<string, number>;
    pinned: Record<string, boolean>;
    bounds: Record<string, [number, number]>;
    rankOrder: string[]; // categorical actionable features, first acts first
    tau: number;
    maxSteps: number;
    seed: number;
    history: HistoryEntry[];
}

export const GAMMA_EPSILON = 1e-9;

export function continuousActionable(features: FeatureDoc[]): FeatureDoc[] {
    return features.filter((f) => f.actionable && f.kind === "continuous");
}

export function categoricalActionable(features: FeatureDoc[]): FeatureDoc[] {
    return features.filter((f) => f.actionable && f.kind === "categorical");
}

export function initialState(schema: SchemaResponse, defaults: Profile): ElicitationState {
    const instance: Record<string, number> = {};
    schema.features.forEach((f, i) => {
        if (schema.example_instance) {
            instance[f.name] = schema.example_instance[i];
        } else if (f.kind === "continuous") {
            instance[f.name] = (f.min! + f.max!) / 2;
        } else {
            instance[f.name] = f.values![0];
        }
    });
    const rankOrder = Object.entries(defaults.ranking)
        .sort((a, b) => a[1] - b[1])
        .map(([name]) => name);
    return {
        features: schema.features,
        instance,
        gamma: { ...defaults.gamma },
        pinned: {},
        bounds: Object.fromEntries(
            Object.entries(defaults.bounds).map(([k, v]) => [k, [v[0], v[1]] as [number, number]]),
        ),
        rankOrder,
        tau: defaults.tau,
        maxSteps: defaults.max_steps,
        seed: Math.floor(Math.random() * 1_000_000),
        history: [],
    };
}

export function gammaSum(gamma: Record<string, number>): number {
    return Object.values(gamma).reduce((a, b) => a + b, 0);
}

export interface AdjustResult {
    ok: boolean;
    gamma: Record<string, number>;
    hint?: string;
}

/**
 * Set one share and proportionally rescale the other unpinned shares so the
 * total stays 1. Pinned shares never move; when every other slider is pinned
 * the adjustment is rejected with a hint instead.
 */
export function adjustGamma(
    gamma: Record<string, number>,
    pinned: Record<string, boolean>,
    feature: string,
    value: number,
): AdjustResult {
    if (!(feature in gamma)) {
        return { ok: false, gamma, hint: `unknown feature ${feature}` };
    }
    const others = Object.keys(gamma).filter((k) => k !== feature);
    const free = others.filter((k) => !pinned[k]);
    if (others.length === 0) {
        // A single slider is always the whole share.
        return { ok: false, gamma, hint: "only one continuous feature; its share is fixed at 1" };
    }
    if (free.length === 0) {
        return { ok: false, gamma, hint: "unpin another slider first" };
    }
    const pinnedMass = others
        .filter((k) => pinned[k])
        .reduce((a, k) => a + gamma[k], 0);
    const target = Math.min(Math.max(value, 0), 1 - pinnedMass);
    const remainder = 1 - pinnedMass - target;
    const freeMass = free.reduce((a, k) => a + gamma[k], 0);
    const next: Record<string, number> = { ...gamma, [feature]: target };
    for (const k of free) {
        next[k] = freeMass > GAMMA_EPSILON ? (gamma[k] / freeMass) * remainder : remainder / free.length;
    }
    return { ok: true, gamma: next };
}

export function togglePin(
    pinned: Record<string, boolean>,
    feature: string,
): Record<string, boolean> {
    return { ...pinned, [feature]: !pinned[feature] };
}

/** Move a rank entry to a new index, keeping the list a permutation. */
export function moveRank(order: string[], feature: string, toIndex: number): string[] {
    const from = order.indexOf(feature);
    if (from < 0) return order;
    const clamped = Math.min(Math.max(toIndex, 0), order.length - 1);
    const next = order.slice();
    next.splice(from, 1);
    next.splice(clamped, 0, feature);
    return next;
}

/** Assemble the profile the service expects from the current state. */
export function toProfile(state: ElicitationState): Profile {
    const steps: Record<string, number | number[]> = {};
    for (const f of state.features) {
        if (!f.actionable) continue;
        steps[f.name] = f.kind === "continuous" ? f.step! : f.values!;
    }
    const ranking: Record<string, number> = {};
    state.rankOrder.forEach((name, i) => {
        ranking[name] = i + 1;
    });
    return {
        gamma: { ...state.gamma },
        bounds: { ...state.bounds },
        steps,
        ranking,
        tau: state.tau,
        max_steps: state.maxSteps,
    };
}

/**
 * Client-side replication of the service's profile validation, so the UI
 * never submits a profile the service would bounce.
 */
export function localViolations(state: ElicitationState): string[] {
    const violations: string[] = [];
    const cont = continuousActionable(state.features).map((f) => f.name);
    if (cont.length > 0) {
        const sum = gammaSum(state.gamma);
        if (Math.abs(sum - 1) > 1e-6) {
            violations.push(`gamma sum != 1 (got ${sum.toFixed(6)})`);
        }
    }
    for (const name of Object.keys(state.gamma)) {
        if (!cont.includes(name)) violations.push(`gamma: ${name} is not continuous actionable`);
        else if (state.gamma[name] < 0 || state.gamma[name] > 1)
            violations.push(`gamma: ${name} outside [0, 1]`);
    }
    for (const [name, [lo, hi]] of Object.entries(state.bounds)) {
        if (lo > hi) violations.push(`bounds: lower > upper for ${name}`);
    }
    const cats = categoricalActionable(state.features).map((f) => f.name);
    const order = state.rankOrder.slice().sort();
    if (JSON.stringify(order) !== JSON.stringify(cats.slice().sort())) {
        violations.push("ranking: must be a permutation of the categorical actionable features");
    }
    if (!(state.tau > 0)) violations.push("tau must be > 0");
    if (state.maxSteps < 1) violations.push("max_steps must be >= 1");
    return violations;
}

export function pushHistory(
    history: HistoryEntry[],
    profile: Profile,
    result: RecourseResponse,
): HistoryEntry[] {
    return [...history, { profile, result }];
}
