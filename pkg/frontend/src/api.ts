import type {
    ApiError,
    Profile,
    RecourseResponse,
    SchemaResponse,
    ValidateResponse,
    WhatIfResponse,
} from "./types.js";

// The service port is configurable via PREFREC_PORT on the backend; mirror
// it here with a ?api= query override for dev setups on other ports.
const params = new URLSearchParams(window.location.search);
export const API_BASE = params.get("api") ?? "http://127.0.0.1:8000";

export class ServiceError extends Error {
    status: number;
    violations: string[];

    constructor(status: number, body: ApiError) {
        super(body.error ?? `service error (${status})`);
        this.status = status;
        this.violations = body.violations ?? [];
    }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${API_BASE}${path}`, init);
    const body = await response.json();
    if (!response.ok) {
        throw new ServiceError(response.status, body as ApiError);
    }
    return body as T;
}

function post<T>(path: string, payload: unknown): Promise<T> {
    return request<T>(path, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(payload),
    });
}

export const getSchema = () => request<SchemaResponse>("/api/schema");

export const getDefaults = () => request<Profile>("/api/defaults");

export const validateProfile = (profile: Profile) =>
    post<ValidateResponse>("/api/validate", { preferences: profile });

export const requestRecourse = (
    instance: Record<string, number>,
    profile: Profile,
    seed: number,
    method = "upar",
) =>
    post<RecourseResponse>("/api/recourse", {
        instance,
        preferences: profile,
        seed,
        method,
    });

export const requestWhatIf = (
    instance: Record<string, number>,
    profiles: Profile[],
    seed: number,
    method = "upar",
) => post<WhatIfResponse>("/api/whatif", { instance, profiles, seed, method });
