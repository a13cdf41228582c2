// Thin, complete client for the control-plane HTTP API. Every console action
// maps 1:1 onto exactly one of these calls; the endpoint-coverage test keeps
// that honest.

import type {
  EventFilters,
  EventRecord,
  EvaluationReport,
  PlantState,
  Proposal,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

async function parseJson(response: Response): Promise<unknown> {
  const text = await response.text();
  let body: unknown = null;
  if (text) {
    try {
      body = JSON.parse(text);
    } catch {
      body = text;
    }
  }
  if (!response.ok) {
    const detail =
      body && typeof body === "object" && "error" in body
        ? String((body as { error: unknown }).error)
        : response.statusText || `HTTP ${response.status}`;
    throw new ApiError(response.status, detail);
  }
  return body;
}

export class ApiClient {
  constructor(
    private readonly fetchFn: FetchLike,
    private readonly baseUrl: string = "",
  ) {}

  private async get(path: string): Promise<unknown> {
    return parseJson(await this.fetchFn(this.baseUrl + path));
  }

  private async post(path: string, body?: unknown): Promise<unknown> {
    const init: RequestInit = { method: "POST" };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    return parseJson(await this.fetchFn(this.baseUrl + path, init));
  }

  async getState(): Promise<PlantState> {
    return (await this.get("/state")) as PlantState;
  }

  async getEvents(fromSeq = 0, filters: EventFilters = {}): Promise<EventRecord[]> {
    const params = new URLSearchParams({ from_seq: String(fromSeq) });
    if (filters.scope) params.set("scope", filters.scope);
    if (filters.source) params.set("source", filters.source);
    if (filters.level) params.set("level", filters.level);
    const body = (await this.get(`/events?${params.toString()}`)) as {
      events: EventRecord[];
    };
    return body.events;
  }

  eventStreamUrl(fromSeq = 0): string {
    return `${this.baseUrl}/events/stream?from_seq=${fromSeq}`;
  }

  async invokeFunction(
    module: string,
    name: string,
    args: (string | number)[],
    note?: string,
  ): Promise<EventRecord[]> {
    const suffix = note ? `?note=${encodeURIComponent(note)}` : "";
    const body = (await this.post(
      `/functions/${encodeURIComponent(module)}/${encodeURIComponent(name)}${suffix}`,
      args,
    )) as { events: EventRecord[] };
    return body.events;
  }

  async submitTask(text: string): Promise<void> {
    await this.post("/tasks", { text });
  }

  async listProposals(): Promise<Proposal[]> {
    const body = (await this.get("/proposals")) as { proposals: Proposal[] };
    return body.proposals;
  }

  async approveProposal(id: string): Promise<void> {
    await this.post(`/proposals/${encodeURIComponent(id)}/approve`);
  }

  async rejectProposal(id: string): Promise<void> {
    await this.post(`/proposals/${encodeURIComponent(id)}/reject`);
  }

  async startRecording(): Promise<void> {
    await this.post("/recording/start");
  }

  async stopRecording(taskDescription: string): Promise<{ suite: string; cases: number }> {
    return (await this.post("/recording/stop", {
      task_description: taskDescription,
    })) as { suite: string; cases: number };
  }

  async listDatasets(): Promise<string[]> {
    const body = (await this.get("/datasets")) as { datasets: string[] };
    return body.datasets;
  }

  async evaluateDataset(dataset: string, backend: string): Promise<EvaluationReport> {
    return (await this.post("/evaluate", { dataset, backend })) as EvaluationReport;
  }

  async getSummary(): Promise<string> {
    const body = (await this.get("/summary")) as { summary: string };
    return body.summary;
  }
}
