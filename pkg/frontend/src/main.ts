// DOM bootstrap: wires the pure panel models to the page. All domain facts on
// screen come from control-plane responses; this file only moves them around.

import { ApiClient, ApiError } from "./api.js";
import { LiveFeed } from "./live.js";
import {
  buildFormModel,
  canStopRecording,
  conflictMessage,
  eventPanelLines,
  plantSchematic,
  proposalRows,
  queryForFilterChange,
  summaryControlEnabled,
  validateFormValues,
} from "./panels.js";
import type { EventFilters, EventRecord, PlantState } from "./types.js";

const api = new ApiClient((url, init) => fetch(url, init));

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const state = {
  filters: {} as EventFilters,
  events: [] as EventRecord[],
  eventCount: 0,
  recording: false,
  plant: null as PlantState | null,
};

function toast(message: string, isError = false): void {
  const box = el<HTMLDivElement>("toast");
  box.textContent = message;
  box.className = isError ? "toast error" : "toast";
  box.style.display = "block";
  setTimeout(() => (box.style.display = "none"), 4000);
}

function renderEvents(): void {
  const panel = el<HTMLPreElement>("event-panel");
  panel.textContent = eventPanelLines(state.events).join("\n");
  panel.scrollTop = panel.scrollHeight;
  el<HTMLButtonElement>("summary-button").disabled = !summaryControlEnabled(state.eventCount);
}

function pushEvent(event: EventRecord): void {
  state.eventCount = Math.max(state.eventCount, event.seq);
  state.events.push(event);
  renderEvents();
}

async function applyFilters(): Promise<void> {
  const filters: EventFilters = {};
  const scope = el<HTMLInputElement>("filter-scope").value.trim();
  const source = el<HTMLSelectElement>("filter-source").value;
  const level = el<HTMLSelectElement>("filter-level").value;
  if (scope) filters.scope = scope;
  if (source) filters.source = source;
  if (level) filters.level = level;
  state.filters = filters;
  const query = queryForFilterChange(filters);
  state.events = await api.getEvents(query.fromSeq, query.filters);
  renderEvents();
}

function renderPlant(plant: PlantState): void {
  state.plant = plant;
  const host = el<HTMLDivElement>("plant-view");
  host.innerHTML = "";
  for (const bar of plantSchematic(plant)) {
    const row = document.createElement("div");
    row.className = "track-row";
    const label = document.createElement("span");
    label.className = "track-label";
    label.textContent = `${bar.module} / ${bar.trackId}${bar.running ? " (running)" : ""}`;
    const lane = document.createElement("div");
    lane.className = "track-lane";
    for (const sensor of bar.sensors) {
      const tick = document.createElement("span");
      tick.className = "sensor";
      tick.style.left = `${sensor.fraction * 100}%`;
      tick.title = sensor.id;
      lane.appendChild(tick);
    }
    for (const holder of bar.holders) {
      const tick = document.createElement("span");
      tick.className = holder.engaged ? "holder engaged" : "holder";
      tick.style.left = `${holder.fraction * 100}%`;
      tick.title = holder.id;
      lane.appendChild(tick);
    }
    for (const marker of bar.markers) {
      const dot = document.createElement("span");
      dot.className = marker.held ? "entity held" : "entity";
      dot.style.left = `${marker.fraction * 100}%`;
      dot.title = `${marker.entityId} (${marker.kind})`;
      lane.appendChild(dot);
    }
    row.append(label, lane);
    host.appendChild(row);
  }
  renderPalette(plant);
}

function renderPalette(plant: PlantState): void {
  const moduleSelect = el<HTMLSelectElement>("palette-module");
  const fnSelect = el<HTMLSelectElement>("palette-function");
  const current = moduleSelect.value;
  moduleSelect.innerHTML = "";
  for (const module of plant.modules) {
    const option = document.createElement("option");
    option.value = module.name;
    option.textContent = module.name;
    moduleSelect.appendChild(option);
  }
  if (current) moduleSelect.value = current;
  const module = plant.modules.find((m) => m.name === moduleSelect.value) ?? plant.modules[0];
  if (!module) return;
  const selectedFn = fnSelect.value;
  fnSelect.innerHTML = "";
  for (const fn of module.functions) {
    const option = document.createElement("option");
    option.value = fn.name;
    option.textContent = fn.name;
    fnSelect.appendChild(option);
  }
  if (selectedFn) fnSelect.value = selectedFn;
  renderForm();
}

function renderForm(): void {
  const plant = state.plant;
  if (!plant) return;
  const moduleName = el<HTMLSelectElement>("palette-module").value;
  const fnName = el<HTMLSelectElement>("palette-function").value;
  const module = plant.modules.find((m) => m.name === moduleName);
  const descriptor = module?.functions.find((f) => f.name === fnName);
  const host = el<HTMLDivElement>("palette-form");
  host.innerHTML = "";
  if (!module || !descriptor) return;
  const model = buildFormModel(module.name, descriptor);
  const doc = document.createElement("p");
  doc.className = "fn-doc";
  doc.textContent = model.doc;
  host.appendChild(doc);
  for (const field of model.fields) {
    const wrap = document.createElement("label");
    wrap.textContent = field.name + " ";
    let input: HTMLElement;
    if (field.kind === "select") {
      const select = document.createElement("select");
      for (const option of field.options) {
        const node = document.createElement("option");
        node.value = option;
        node.textContent = option;
        select.appendChild(node);
      }
      input = select;
    } else {
      const text = document.createElement("input");
      text.type = field.kind === "number" ? "number" : "text";
      input = text;
    }
    input.dataset.field = field.name;
    const error = document.createElement("span");
    error.className = "field-error";
    error.dataset.errorFor = field.name;
    wrap.append(input, error);
    host.appendChild(wrap);
  }
}

async function submitCommand(): Promise<void> {
  const plant = state.plant;
  if (!plant) return;
  const moduleName = el<HTMLSelectElement>("palette-module").value;
  const fnName = el<HTMLSelectElement>("palette-function").value;
  const module = plant.modules.find((m) => m.name === moduleName);
  const descriptor = module?.functions.find((f) => f.name === fnName);
  if (!module || !descriptor) return;
  const model = buildFormModel(module.name, descriptor);
  const values: Record<string, string> = {};
  const host = el<HTMLDivElement>("palette-form");
  host.querySelectorAll<HTMLInputElement | HTMLSelectElement>("[data-field]").forEach((node) => {
    values[node.dataset.field as string] = node.value;
  });
  const { errors, args } = validateFormValues(model, values);
  host.querySelectorAll<HTMLSpanElement>("[data-error-for]").forEach((node) => {
    node.textContent = errors[node.dataset.errorFor as string] ?? "";
  });
  if (Object.keys(errors).length > 0) return; // invalid: nothing leaves the page
  try {
    await api.invokeFunction(model.module, model.functionName, args);
    toast(`${model.functionName} dispatched`);
  } catch (error) {
    if (error instanceof ApiError) {
      toast(error.message, true);
    } else {
      throw error;
    }
  }
}

async function refreshProposals(): Promise<void> {
  const rows = proposalRows(await api.listProposals());
  const host = el<HTMLTableSectionElement>("proposal-rows");
  host.innerHTML = "";
  for (const row of rows) {
    const tr = document.createElement("tr");
    if (row.struckThrough) tr.className = "expired";
    const cells = [row.id, row.agentId, row.reason, row.command, row.status];
    for (const value of cells) {
      const td = document.createElement("td");
      td.textContent = value;
      tr.appendChild(td);
    }
    const actions = document.createElement("td");
    if (row.actionable) {
      const approve = document.createElement("button");
      approve.textContent = "approve";
      approve.onclick = () => void decide(row.id, "approve");
      const reject = document.createElement("button");
      reject.textContent = "reject";
      reject.onclick = () => void decide(row.id, "reject");
      actions.append(approve, reject);
    }
    tr.appendChild(actions);
    host.appendChild(tr);
  }
}

async function decide(id: string, action: "approve" | "reject"): Promise<void> {
  try {
    if (action === "approve") await api.approveProposal(id);
    else await api.rejectProposal(id);
  } catch (error) {
    if (error instanceof ApiError && error.status === 409) {
      toast(conflictMessage(id), true);
    } else if (error instanceof ApiError) {
      toast(error.message, true);
    } else {
      throw error;
    }
  }
  await refreshProposals();
}

async function toggleRecording(): Promise<void> {
  const button = el<HTMLButtonElement>("recording-button");
  if (!state.recording) {
    try {
      await api.startRecording();
      state.recording = true;
      button.textContent = "stop recording";
      toast("recording started");
    } catch (error) {
      if (error instanceof ApiError) toast(error.message, true);
    }
    return;
  }
  const description = el<HTMLInputElement>("task-description").value;
  const decision = canStopRecording(description);
  if (!decision.allowed) {
    toast(decision.message ?? "task description required", true);
    return;
  }
  try {
    const result = await api.stopRecording(description);
    state.recording = false;
    button.textContent = "start recording";
    toast(`recorded suite '${result.suite}' with ${result.cases} case(s)`);
    await refreshDatasets();
  } catch (error) {
    if (error instanceof ApiError) toast(error.message, true);
  }
}

async function refreshDatasets(): Promise<void> {
  const datasets = await api.listDatasets();
  const host = el<HTMLUListElement>("dataset-list");
  host.innerHTML = "";
  for (const name of datasets) {
    const li = document.createElement("li");
    li.textContent = name + " ";
    const button = document.createElement("button");
    button.textContent = "evaluate (oracle)";
    button.onclick = async () => {
      const report = await api.evaluateDataset(name, "oracle");
      el<HTMLPreElement>("eval-output").textContent = report.table;
    };
    li.appendChild(button);
    host.appendChild(li);
  }
}

async function boot(): Promise<void> {
  renderPlant(await api.getState());
  state.events = await api.getEvents(0, {});
  state.eventCount = state.events.length > 0 ? state.events[state.events.length - 1]!.seq : 0;
  renderEvents();
  await refreshProposals();
  await refreshDatasets();

  const feed = new LiveFeed(
    api,
    {
      onEvent: pushEvent,
      onModeChange: (mode) => {
        el<HTMLSpanElement>("feed-mode").textContent =
          mode === "polling" ? "live stream lost, polling" : "live";
      },
    },
    // DOM EventSource is structurally compatible: handlers only read .data.
    (url) => new EventSource(url) as unknown as import("./live.js").EventSourceLike,
  );
  feed.start(state.eventCount);

  el<HTMLButtonElement>("filter-apply").onclick = () => void applyFilters();
  el<HTMLSelectElement>("palette-module").onchange = () => {
    if (state.plant) renderPalette(state.plant);
  };
  el<HTMLSelectElement>("palette-function").onchange = renderForm;
  el<HTMLButtonElement>("palette-submit").onclick = () => void submitCommand();
  el<HTMLButtonElement>("task-submit").onclick = async () => {
    const box = el<HTMLInputElement>("task-box");
    if (box.value.trim()) {
      await api.submitTask(box.value.trim());
      toast("task submitted");
      box.value = "";
    }
  };
  el<HTMLButtonElement>("recording-button").onclick = () => void toggleRecording();
  el<HTMLButtonElement>("proposals-refresh").onclick = () => void refreshProposals();
  el<HTMLButtonElement>("summary-button").onclick = async () => {
    try {
      el<HTMLPreElement>("summary-output").textContent = await api.getSummary();
    } catch (error) {
      if (error instanceof ApiError) toast(error.message, true);
    }
  };
  setInterval(async () => {
    renderPlant(await api.getState());
  }, 2000);
}

void boot();
