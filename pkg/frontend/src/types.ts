// Wire types for the five service endpoints. Field names mirror the JSON
// payloads exactly; the UI computes no recourse math of its own.

export interface FeatureDoc {
    name: string;
    kind: "continuous" | "categorical";
    actionable: boolean;
    monotonicity: "free" | "non_decreasing" | "non_increasing";
    min?: number;
    max?: number;
    step?: number;
    values?: number[];
}

export interface SchemaResponse {
    features: FeatureDoc[];
    target_name: string;
    positive_label: string;
    negative_label: string;
    example_instance: number[] | null;
}

export interface Profile {
    gamma: Record<string, number>;
    bounds: Record<string, [number, number]>;
    steps: Record<string, number | number[]>;
    ranking: Record<string, number>;
    tau: number;
    max_steps: number;
}

export interface ValidateResponse {
    ok: boolean;
    violations: string[];
}

export interface TraceStep {
    t: number;
    acted: string[];
    candidate: number[];
    prediction: number;
}

export interface RecourseMetrics {
    proximity: number;
    sparsity: number;
    constraint_violations: number;
    redundancy: number;
}

export interface RecourseResponse {
    valid: boolean;
    method: string;
    seed: number;
    instance: Record<string, number>;
    suggested: Record<string, number>;
    action: Record<string, number>;
    stage1_action: number[];
    final_action: number[];
    steps_used: number | null;
    total_cost_before: number | null;
    total_cost_after: number | null;
    final_probability: number;
    gamma: Record<string, number>;
    gamma_hat: Record<string, number> | null;
    fractional_costs: Record<string, number> | null;
    metrics: RecourseMetrics;
    trace: TraceStep[];
    profile_index?: number;
}

export interface WhatIfResponse {
    results: RecourseResponse[];
}

export interface ApiError {
    error: string;
    violations?: string[];
}
