// Pure view models for the console panels. Everything here is plain data in,
// plain data out, so the behaviour is testable without a DOM.

import type {
  EventFilters,
  EventRecord,
  FunctionDescriptor,
  ParamDescriptor,
  PlantState,
  Proposal,
} from "./types.js";

// ------------------------------------------------------------- event panel

// Lines are displayed exactly as served; the console never re-renders them.
export function eventPanelLines(events: EventRecord[]): string[] {
  return events.map((e) => e.rendered);
}

export interface PanelQuery {
  fromSeq: number;
  filters: EventFilters;
}

// Filter changes always restart the query from the beginning of the log.
export function queryForFilterChange(filters: EventFilters): PanelQuery {
  return { fromSeq: 0, filters };
}

// ---------------------------------------------------------- command palette

export interface FormField {
  name: string;
  kind: "text" | "number" | "select";
  options: string[];
  minimum: number | null;
}

export interface FormModel {
  module: string;
  functionName: string;
  doc: string;
  fields: FormField[];
}

function fieldFor(param: ParamDescriptor): FormField {
  if (param.type === "enum") {
    return { name: param.name, kind: "select", options: param.values, minimum: null };
  }
  if (param.type === "integer") {
    return { name: param.name, kind: "number", options: [], minimum: param.minimum };
  }
  return { name: param.name, kind: "text", options: [], minimum: null };
}

export function buildFormModel(module: string, descriptor: FunctionDescriptor): FormModel {
  return {
    module,
    functionName: descriptor.name,
    doc: descriptor.doc,
    fields: descriptor.params.map(fieldFor),
  };
}

// Client-side validation runs before any network call; server-side causes
// (422 bodies) are rendered inline afterwards.
export function validateFormValues(
  model: FormModel,
  values: Record<string, string>,
): { errors: Record<string, string>; args: (string | number)[] } {
  const errors: Record<string, string> = {};
  const args: (string | number)[] = [];
  for (const field of model.fields) {
    const raw = values[field.name] ?? "";
    if (field.kind === "number") {
      const parsed = Number(raw);
      if (raw.trim() === "" || !Number.isInteger(parsed)) {
        errors[field.name] = `${field.name} must be an integer`;
        continue;
      }
      if (field.minimum !== null && parsed < field.minimum) {
        errors[field.name] = `${field.name} must be at least ${field.minimum}`;
        continue;
      }
      args.push(parsed);
    } else if (field.kind === "select") {
      if (!field.options.includes(raw)) {
        errors[field.name] = `${field.name} must be one of: ${field.options.join(", ")}`;
        continue;
      }
      args.push(raw);
    } else {
      if (raw.trim() === "") {
        errors[field.name] = `${field.name} must not be empty`;
        continue;
      }
      args.push(raw);
    }
  }
  return { errors, args };
}

// ------------------------------------------------------------- approvals

export interface ProposalRow {
  id: string;
  agentId: string;
  reason: string;
  command: string;
  status: Proposal["status"];
  actionable: boolean;
  struckThrough: boolean;
}

export function proposalRows(proposals: Proposal[]): ProposalRow[] {
  return proposals.map((p) => ({
    id: p.id,
    agentId: p.agent_id,
    reason: p.reason,
    command: p.command,
    status: p.status,
    actionable: p.status === "pending",
    struckThrough: p.status === "expired",
  }));
}

export function conflictMessage(id: string): string {
  return `Proposal ${id} was already resolved.`;
}

// -------------------------------------------------------------- recording

export interface RecordingStopDecision {
  allowed: boolean;
  message?: string;
}

export function canStopRecording(taskDescription: string): RecordingStopDecision {
  if (taskDescription.trim() === "") {
    return {
      allowed: false,
      message: "Describe the task you just performed before stopping the recording.",
    };
  }
  return { allowed: true };
}

// ------------------------------------------------------------ summary view

export function summaryControlEnabled(eventCount: number): boolean {
  return eventCount > 0;
}

// ------------------------------------------------------------- plant view

export interface TrackMarker {
  entityId: string;
  kind: string;
  fraction: number; // position / length, straight from the last snapshot
  held: boolean;
}

export interface TrackBar {
  module: string;
  trackId: string;
  length: number;
  running: boolean;
  sensors: { id: string; fraction: number }[];
  holders: { id: string; fraction: number; engaged: boolean }[];
  markers: TrackMarker[];
}

// Schematic only: positions come from the snapshot and are never extrapolated.
export function plantSchematic(state: PlantState): TrackBar[] {
  const bars: TrackBar[] = [];
  for (const module of state.modules) {
    for (const track of module.tracks) {
      const key = `${module.name}/${track.id}`;
      const dynamic = state.tracks[key];
      bars.push({
        module: module.name,
        trackId: track.id,
        length: track.length,
        running: dynamic ? dynamic.running : false,
        sensors: track.sensors.map((s) => ({ id: s.id, fraction: s.position / track.length })),
        holders: track.holders.map((h) => ({
          id: h.id,
          fraction: h.position / track.length,
          engaged: state.holders[`${module.name}/${h.id}`] ?? false,
        })),
        markers: state.entities
          .filter(
            (e) => e.module === module.name && e.track === track.id && e.position !== null,
          )
          .map((e) => ({
            entityId: e.id,
            kind: e.kind,
            fraction: (e.position as number) / track.length,
            held: e.held_by !== null,
          })),
      });
    }
  }
  return bars;
}
