// DOM wiring: builds the elicitation form from /api/schema + /api/defaults,
// keeps the share sliders renormalized through state.ts, and renders service
// responses through render.ts. At most one what-if request is in flight;
// later submissions queue behind it.

import { getDefaults, getSchema, requestWhatIf, ServiceError, validateProfile } from "./api.js";
import {
    adjustGamma,
    categoricalActionable,
    continuousActionable,
    ElicitationState,
    initialState,
    localViolations,
    moveRank,
    pushHistory,
    toProfile,
    togglePin,
} from "./state.js";
import { renderHistoryStrip, renderResultPanel } from "./render.js";

let state: ElicitationState;
let inFlight = false;
let queued = false;

const $ = <T extends HTMLElement>(id: string): T => {
    const el = document.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el as T;
};

function banner(message: string | null): void {
    const el = $("banner");
    el.textContent = message ?? "";
    el.classList.toggle("hidden", message === null);
}

function numberInput(value: number, step: number | undefined, onChange: (v: number) => void): HTMLInputElement {
    const input = document.createElement("input");
    input.type = "number";
    input.value = String(value);
    if (step !== undefined) input.step = String(step);
    input.addEventListener("change", () => {
        const v = Number(input.value);
        if (Number.isFinite(v)) onChange(v);
    });
    return input;
}

function buildInstanceForm(): void {
    const host = $("instance-form");
    host.textContent = "";
    for (const f of state.features) {
        const row = document.createElement("label");
        row.className = "field-row" + (f.actionable ? "" : " readonly");
        const name = document.createElement("span");
        name.textContent = f.name + (f.actionable ? "" : " (fixed)");
        row.appendChild(name);
        if (f.kind === "categorical") {
            const select = document.createElement("select");
            for (const v of f.values ?? []) {
                const opt = document.createElement("option");
                opt.value = String(v);
                opt.textContent = String(v);
                opt.selected = state.instance[f.name] === v;
                select.appendChild(opt);
            }
            select.addEventListener("change", () => {
                state.instance[f.name] = Number(select.value);
            });
            row.appendChild(select);
        } else {
            row.appendChild(
                numberInput(state.instance[f.name], f.step, (v) => {
                    state.instance[f.name] = v;
                }),
            );
        }
        host.appendChild(row);
    }
}

function buildGammaSliders(): void {
    const host = $("gamma-sliders");
    host.textContent = "";
    const cont = continuousActionable(state.features);
    for (const f of cont) {
        const row = document.createElement("div");
        row.className = "slider-row";
        const label = document.createElement("span");
        label.className = "slider-label";
        const slider = document.createElement("input");
        slider.type = "range";
        slider.min = "0";
        slider.max = "1";
        slider.step = "0.01";
        slider.value = String(state.gamma[f.name]);
        const pin = document.createElement("button");
        pin.type = "button";
        pin.className = "pin";
        const refreshRow = () => {
            label.textContent = `${f.name}: ${state.gamma[f.name].toFixed(2)}`;
            slider.value = String(state.gamma[f.name]);
            pin.textContent = state.pinned[f.name] ? "pinned" : "pin";
            slider.disabled = Boolean(state.pinned[f.name]);
        };
        slider.addEventListener("input", () => {
            const res = adjustGamma(state.gamma, state.pinned, f.name, Number(slider.value));
            if (!res.ok) {
                banner(res.hint ?? "adjustment rejected");
            } else {
                banner(null);
                state.gamma = res.gamma;
            }
            refreshAllSliders();
        });
        pin.addEventListener("click", () => {
            state.pinned = togglePin(state.pinned, f.name);
            refreshRow();
        });
        row.append(label, slider, pin);
        host.appendChild(row);
        sliderRefreshers.set(f.name, refreshRow);
        refreshRow();
    }
    $("gamma-panel").classList.toggle("hidden", cont.length === 0);
}

const sliderRefreshers = new Map<string, () => void>();

function refreshAllSliders(): void {
    for (const refresh of sliderRefreshers.values()) refresh();
}

function buildBoundsInputs(): void {
    const host = $("bounds-form");
    host.textContent = "";
    for (const f of state.features) {
        if (!f.actionable) continue;
        const [lo, hi] = state.bounds[f.name];
        const row = document.createElement("div");
        row.className = "field-row";
        const name = document.createElement("span");
        name.textContent = f.name;
        row.appendChild(name);
        row.appendChild(numberInput(lo, f.step, (v) => {
            state.bounds[f.name] = [v, state.bounds[f.name][1]];
        }));
        row.appendChild(numberInput(hi, f.step, (v) => {
            state.bounds[f.name] = [state.bounds[f.name][0], v];
        }));
        host.appendChild(row);
    }
}

function buildRankList(): void {
    const host = $("rank-list");
    host.textContent = "";
    const cats = categoricalActionable(state.features);
    $("rank-panel").classList.toggle("hidden", cats.length === 0);
    state.rankOrder.forEach((name, index) => {
        const item = document.createElement("li");
        item.draggable = true;
        item.dataset.feature = name;
        item.textContent = `${index + 1}. ${name}`;
        item.addEventListener("dragstart", (ev) => {
            ev.dataTransfer?.setData("text/plain", name);
        });
        item.addEventListener("dragover", (ev) => ev.preventDefault());
        item.addEventListener("drop", (ev) => {
            ev.preventDefault();
            const dragged = ev.dataTransfer?.getData("text/plain");
            if (dragged) {
                state.rankOrder = moveRank(state.rankOrder, dragged, index);
                buildRankList();
            }
        });
        const up = document.createElement("button");
        up.type = "button";
        up.textContent = "up";
        up.addEventListener("click", () => {
            state.rankOrder = moveRank(state.rankOrder, name, index - 1);
            buildRankList();
        });
        const down = document.createElement("button");
        down.type = "button";
        down.textContent = "down";
        down.addEventListener("click", () => {
            state.rankOrder = moveRank(state.rankOrder, name, index + 1);
            buildRankList();
        });
        item.append(" ", up, down);
        host.appendChild(item);
    });
}

function buildControls(): void {
    const tau = $("tau-select") as unknown as HTMLSelectElement;
    tau.value = String(state.tau);
    tau.addEventListener("change", () => {
        state.tau = Number(tau.value);
    });
    const seed = $("seed-input") as unknown as HTMLInputElement;
    seed.value = String(state.seed);
    seed.addEventListener("change", () => {
        state.seed = Number(seed.value) | 0;
    });
    $("submit").addEventListener("click", () => void submit());
}

async function submit(): Promise<void> {
    if (inFlight) {
        queued = true;
        return;
    }
    const local = localViolations(state);
    if (local.length > 0) {
        banner(`profile invalid: ${local.join("; ")}`);
        return;
    }
    const profile = toProfile(state);
    inFlight = true;
    $("submit").setAttribute("disabled", "true");
    try {
        const check = await validateProfile(profile);
        if (!check.ok) {
            banner(`profile invalid: ${check.violations.join("; ")}`);
            return;
        }
        const response = await requestWhatIf(state.instance, [profile], state.seed);
        const result = response.results[0];
        state.history = pushHistory(state.history, profile, result);
        $("result-panel").innerHTML = renderResultPanel(result);
        $("history-strip").innerHTML = renderHistoryStrip(state.history);
        wireHistoryButtons();
        banner(null);
    } catch (err) {
        if (err instanceof ServiceError && err.status === 422) {
            banner("this instance already receives the favorable outcome");
        } else if (err instanceof ServiceError) {
            banner(`${err.message}${err.violations.length ? ": " + err.violations.join("; ") : ""}`);
        } else {
            banner(`service unreachable: ${String(err)}`);
        }
    } finally {
        inFlight = false;
        $("submit").removeAttribute("disabled");
        if (queued) {
            queued = false;
            void submit();
        }
    }
}

function wireHistoryButtons(): void {
    document.querySelectorAll<HTMLButtonElement>(".history-item").forEach((btn) => {
        btn.addEventListener("click", () => {
            const index = Number(btn.dataset.index);
            const entry = state.history[index];
            if (entry) $("result-panel").innerHTML = renderResultPanel(entry.result);
        });
    });
}

async function boot(): Promise<void> {
    try {
        const [schema, defaults] = await Promise.all([getSchema(), getDefaults()]);
        state = initialState(schema, defaults);
        buildInstanceForm();
        buildGammaSliders();
        buildBoundsInputs();
        buildRankList();
        buildControls();
        banner(null);
    } catch (err) {
        banner(`cannot reach the recourse service: ${String(err)}`);
    }
}

void boot();
