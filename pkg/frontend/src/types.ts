// Wire types mirroring the control-plane JSON bodies. The console displays
// these verbatim and never derives domain facts of its own.

export interface EventRecord {
  seq: number;
  sim_time: number;
  scope: string;
  source: string;
  level: string;
  text: string;
  rendered: string;
}

export interface ParamDescriptor {
  name: string;
  type: "string" | "integer" | "enum";
  values: string[];
  minimum: number | null;
}

export interface FunctionDescriptor {
  name: string;
  params: ParamDescriptor[];
  doc: string;
}

export interface SensorState {
  id: string;
  position: number;
  dwell: number;
}

export interface HolderState {
  id: string;
  position: number;
}

export interface TrackDescriptor {
  id: string;
  length: number;
  sensors: SensorState[];
  holders: HolderState[];
}

export interface ModuleDescriptor {
  name: string;
  tracks: TrackDescriptor[];
  functions: FunctionDescriptor[];
}

export interface EntityState {
  id: string;
  kind: string;
  payload: string | null;
  module: string | null;
  track: string | null;
  position: number | null;
  held_by: string | null;
}

export interface PlantState {
  sim_time: number;
  epoch: string;
  modules: ModuleDescriptor[];
  entities: EntityState[];
  tracks: Record<string, { running: boolean; direction: string; remaining_run: number }>;
  holders: Record<string, boolean>;
  inventories: Record<string, Record<string, string>>;
}

export interface Proposal {
  id: string;
  agent_id: string;
  reason: string;
  command: string;
  created_sim_time: number;
  status: "pending" | "approved" | "rejected" | "expired";
}

export interface EvaluationStratum {
  cases: number;
  matches: number;
  rate: number | null;
  plausibility_avg: number | null;
  plausibility_annotated: number;
}

export interface EvaluationReport {
  backend: string;
  overall: EvaluationStratum;
  routine: EvaluationStratum;
  unexpected: EvaluationStratum;
  table: string;
}

export interface EventFilters {
  scope?: string;
  source?: string;
  level?: string;
}
