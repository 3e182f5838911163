// Pure view-model construction and HTML rendering for the result panels.
// Every number shown is lifted verbatim from a service response.

import type { RecourseResponse } from "./types.js";

export interface ChangeRow {
    feature: string;
    current: number;
    suggested: number;
    delta: number;
}

export interface SharePair {
    feature: string;
    requested: number;
    realized: number | null;
}

export interface TraceLine {
    t: number;
    acted: string;
    prediction: number;
}

export interface ResultViewModel {
    valid: boolean;
    method: string;
    seed: number;
    stepsUsed: number | null;
    finalProbability: number;
    totalCostBefore: number | null;
    totalCostAfter: number | null;
    changes: ChangeRow[];
    shares: SharePair[];
    metrics: { label: string; value: number }[];
    trace: TraceLine[];
    failureMessage: string | null;
}

export function resultViewModel(r: RecourseResponse): ResultViewModel {
    const changes: ChangeRow[] = Object.keys(r.instance)
        .filter((name) => r.action[name] !== 0)
        .map((name) => ({
            feature: name,
            current: r.instance[name],
            suggested: r.suggested[name],
            delta: r.action[name],
        }));
    const shares: SharePair[] = Object.keys(r.gamma).map((feature) => ({
        feature,
        requested: r.gamma[feature],
        realized: r.gamma_hat ? r.gamma_hat[feature] : null,
    }));
    return {
        valid: r.valid,
        method: r.method,
        seed: r.seed,
        stepsUsed: r.steps_used,
        finalProbability: r.final_probability,
        totalCostBefore: r.total_cost_before,
        totalCostAfter: r.total_cost_after,
        changes,
        shares,
        metrics: [
            { label: "proximity", value: r.metrics.proximity },
            { label: "sparsity", value: r.metrics.sparsity },
            { label: "constraint_violations", value: r.metrics.constraint_violations },
            { label: "redundancy", value: r.metrics.redundancy },
        ],
        trace: r.trace.map((s) => ({
            t: s.t,
            acted: s.acted.join(", ") || "-",
            prediction: s.prediction,
        })),
        failureMessage: r.valid
            ? null
            : `no recourse within the step budget (final probability ${fmt(r.final_probability)})`,
    };
}

export function fmt(v: number | null, digits = 4): string {
    if (v === null) return "-";
    return Number.isInteger(v) ? String(v) : v.toFixed(digits);
}

function escapeHtml(s: string): string {
    return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderResultPanel(r: RecourseResponse): string {
    const vm = resultViewModel(r);
    if (vm.failureMessage) {
        return `<div class="result failed">
<p class="failure">${escapeHtml(vm.failureMessage)}</p>
<p class="meta">method ${escapeHtml(vm.method)}, seed ${vm.seed}</p>
</div>`;
    }
    const changeRows = vm.changes
        .map(
            (c) => `<tr><td>${escapeHtml(c.feature)}</td><td>${fmt(c.current)}</td>` +
                `<td>${fmt(c.suggested)}</td><td>${fmt(c.delta)}</td></tr>`,
        )
        .join("\n");
    const shareBars = vm.shares
        .map((s) => {
            const realized = s.realized === null ? "-" : fmt(s.realized, 3);
            const reqPct = Math.round(s.requested * 100);
            const gotPct = s.realized === null ? 0 : Math.round(s.realized * 100);
            return `<div class="share-row" data-feature="${escapeHtml(s.feature)}">
  <span class="share-name">${escapeHtml(s.feature)}</span>
  <div class="bar requested" style="width:${reqPct}%"></div>
  <div class="bar realized" style="width:${gotPct}%"></div>
  <span class="share-nums">${fmt(s.requested, 3)} vs ${realized}</span>
</div>`;
        })
        .join("\n");
    const metricCells = vm.metrics
        .map((m) => `<div class="metric"><span>${m.label}</span><b>${fmt(m.value)}</b></div>`)
        .join("\n");
    const traceRows = vm.trace
        .map((s) => `<tr><td>${s.t}</td><td>${escapeHtml(s.acted)}</td><td>${fmt(s.prediction)}</td></tr>`)
        .join("\n");
    return `<div class="result valid">
<p class="meta">method ${escapeHtml(vm.method)}, seed ${vm.seed}, ${vm.stepsUsed} steps,
final probability ${fmt(vm.finalProbability)},
cost ${fmt(vm.totalCostAfter)} (before correction ${fmt(vm.totalCostBefore)})</p>
<table class="changes">
<thead><tr><th>feature</th><th>current</th><th>suggested</th><th>change</th></tr></thead>
<tbody>${changeRows}</tbody>
</table>
<div class="shares">${shareBars}</div>
<div class="metrics">${metricCells}</div>
<details class="trace"><summary>step trace (${vm.trace.length})</summary>
<table><thead><tr><th>t</th><th>acted</th><th>p(+1)</th></tr></thead>
<tbody>${traceRows}</tbody></table>
</details>
</div>`;
}

export function renderHistoryStrip(entries: { result: RecourseResponse }[]): string {
    return entries
        .map((e, i) => {
            const vm = resultViewModel(e.result);
            const status = vm.valid ? `${vm.stepsUsed} steps, cost ${fmt(vm.totalCostAfter)}` : "failed";
            return `<button class="history-item" data-index="${i}">#${i + 1} seed ${vm.seed} (${status})</button>`;
        })
        .join("\n");
}
