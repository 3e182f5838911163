import { describe, expect, it } from "vitest";

import { fmt, renderHistoryStrip, renderResultPanel, resultViewModel } from "../src/render.js";
import type { RecourseResponse } from "../src/types.js";

import fixture from "./fixtures/recourse_response.json";

const recorded = fixture as unknown as RecourseResponse;

describe("golden fixture: recorded /api/recourse response", () => {
    it("surfaces exactly the recorded fields in the view model", () => {
        const vm = resultViewModel(recorded);
        expect(vm.valid).toBe(recorded.valid);
        expect(vm.method).toBe(recorded.method);
        expect(vm.seed).toBe(recorded.seed);
        expect(vm.stepsUsed).toBe(recorded.steps_used);
        expect(vm.finalProbability).toBe(recorded.final_probability);
        expect(vm.totalCostBefore).toBe(recorded.total_cost_before);
        expect(vm.totalCostAfter).toBe(recorded.total_cost_after);

        // One change row per moved feature, values copied verbatim.
        const moved = Object.keys(recorded.action).filter((n) => recorded.action[n] !== 0);
        expect(vm.changes.map((c) => c.feature).sort()).toEqual(moved.sort());
        for (const row of vm.changes) {
            expect(row.current).toBe(recorded.instance[row.feature]);
            expect(row.suggested).toBe(recorded.suggested[row.feature]);
            expect(row.delta).toBe(recorded.action[row.feature]);
        }

        // One share pair per requested gamma, realized values verbatim.
        expect(vm.shares.map((s) => s.feature).sort()).toEqual(
            Object.keys(recorded.gamma).sort(),
        );
        for (const pair of vm.shares) {
            expect(pair.requested).toBe(recorded.gamma[pair.feature]);
            expect(pair.realized).toBe(recorded.gamma_hat![pair.feature]);
        }

        // Metric singletons all present.
        const labels = vm.metrics.map((m) => m.label);
        expect(labels).toEqual([
            "proximity",
            "sparsity",
            "constraint_violations",
            "redundancy",
        ]);
        for (const m of vm.metrics) {
            expect(m.value).toBe(
                recorded.metrics[m.label as keyof typeof recorded.metrics],
            );
        }

        // Full trace carried through.
        expect(vm.trace).toHaveLength(recorded.trace.length);
        expect(vm.trace[0].t).toBe(recorded.trace[0].t);
        expect(vm.failureMessage).toBeNull();
    });

    it("renders every field into the panel markup", () => {
        const html = renderResultPanel(recorded);
        expect(html).toContain(`seed ${recorded.seed}`);
        expect(html).toContain(`${recorded.steps_used} steps`);
        expect(html).toContain(fmt(recorded.total_cost_after));
        expect(html).toContain(fmt(recorded.total_cost_before));
        expect(html).toContain(fmt(recorded.final_probability));
        for (const name of Object.keys(recorded.action)) {
            if (recorded.action[name] !== 0) {
                expect(html).toContain(name);
                expect(html).toContain(fmt(recorded.instance[name]));
                expect(html).toContain(fmt(recorded.suggested[name]));
            }
        }
        for (const name of Object.keys(recorded.gamma)) {
            expect(html).toContain(`data-feature="${name}"`);
            expect(html).toContain(fmt(recorded.gamma[name], 3));
            expect(html).toContain(fmt(recorded.gamma_hat![name], 3));
        }
        expect(html).toContain(`step trace (${recorded.trace.length})`);
    });

    it("renders a failed result as an explicit no-recourse state", () => {
        const failed: RecourseResponse = {
            ...recorded,
            valid: false,
            steps_used: null,
            total_cost_before: null,
            total_cost_after: null,
            gamma_hat: null,
            final_probability: 0.41,
        };
        const vm = resultViewModel(failed);
        expect(vm.failureMessage).toMatch(/no recourse within the step budget/);
        const html = renderResultPanel(failed);
        expect(html).toContain("no recourse within the step budget");
        expect(html).toContain("0.4100");
    });

    it("summarizes history entries", () => {
        const html = renderHistoryStrip([{ result: recorded }, { result: recorded }]);
        expect(html).toContain('data-index="0"');
        expect(html).toContain('data-index="1"');
        expect(html).toContain(`seed ${recorded.seed}`);
    });
});
