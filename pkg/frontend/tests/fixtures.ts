// Shared test scaffolding: a recording fetch stub and a small mocked
// control-plane with the same observable semantics as the real service.

import type { FetchLike } from "../src/api.js";
import type { EventRecord, PlantState, Proposal } from "../src/types.js";

// The storage retrieval fixture: served rendered lines, verbatim.
export const RETRIEVAL_LINES: string[] = [
  "[Task Planner][Manager][12:04:23] task assigned: retrieve a 'white plastic cylinder' from the storage station.",
  "[Storage Station][System][12:04:23] task received: retrieve a 'white plastic cylinder' from the storage station.",
  "[Inspection Station][System][12:04:44] BG27 detects a workpiece at the outlet of conveyor C2.",
  "[Storage Station][System][12:04:45] BG56 detects a carrier at the infeed of conveyor C1.",
  "[Storage Station][Operator][12:04:45] Storage Station calls function: conveyor_1_run('forward', 13).",
  "[Storage Station][Operator][12:04:45] Conveyor C1 starts running for 13 seconds.",
  "[Storage Station][System][12:04:47] A carrier passes BG56.",
  "[Storage Station][System][12:04:52] BG51 detects a carrier at the holder H2 on conveyor C1.",
  "[Storage Station][Operator][12:04:53] Storage Station calls function: query_inventory_workpiece_position('white plastic cylinder').",
  "[Storage Station][System][12:04:53] The 'white plastic cylinder' is located on shelf 'A_13'.",
  "[Storage Station][Operator][12:04:54] Storage Station calls function: robot_arm_pick('A_13').",
  "[Storage Station][System][12:04:54] Robot arm has started picking the workpiece from position A_13.",
];

function parseLine(seq: number, line: string): EventRecord {
  const match = /^\[([^\]]+)\]\[([^\]]+)\]\[(\d{2}):(\d{2}):(\d{2})\] (.*)$/.exec(line);
  if (!match) throw new Error(`bad fixture line: ${line}`);
  const [, scope, source, hh, mm, ss, text] = match;
  const simTime =
    Number(hh) * 3600 + Number(mm) * 60 + Number(ss) - 12 * 3600; // epoch 12:00:00
  return {
    seq,
    sim_time: simTime,
    scope: scope!,
    source: source!,
    level: source === "Operator" ? "control" : "field",
    text: text!,
    rendered: line,
  };
}

export function retrievalEvents(): EventRecord[] {
  return RETRIEVAL_LINES.map((line, i) => parseLine(i + 1, line));
}

export const PLANT_STATE: PlantState = {
  sim_time: 300,
  epoch: "12:00:00",
  modules: [
    {
      name: "Storage Station",
      tracks: [
        {
          id: "C1",
          length: 14,
          sensors: [
            { id: "BG56", position: 0, dwell: 2 },
            { id: "BG51", position: 7, dwell: 1 },
          ],
          holders: [{ id: "H2", position: 7 }],
        },
      ],
      functions: [
        {
          name: "conveyor_1_run",
          params: [
            { name: "direction", type: "enum", values: ["forward", "backward"], minimum: null },
            { name: "time", type: "integer", values: [], minimum: 1 },
          ],
          doc: "This function is used to start Conveyor C1 and run it in a specified direction for a specified duration.",
        },
        {
          name: "H1_release",
          params: [],
          doc: "This function is used to release the holder H1.",
        },
      ],
    },
  ],
  entities: [
    {
      id: "E1",
      kind: "carrier",
      payload: null,
      module: "Storage Station",
      track: "C1",
      position: 7,
      held_by: "H2",
    },
  ],
  tracks: { "Storage Station/C1": { running: false, direction: "forward", remaining_run: 0 } },
  holders: { "Storage Station/H2": true },
  inventories: { "Storage Station": { A_13: "white plastic cylinder" } },
};

export interface RecordedCall {
  method: string;
  url: string;
  body: unknown;
}

export class MockControlPlane {
  events: EventRecord[] = [];
  proposals: Proposal[] = [];
  datasets: string[] = [];
  recording = false;
  summary = "All stations nominal.";
  state: PlantState = PLANT_STATE;

  addProposal(proposal: Proposal): void {
    this.proposals.push(proposal);
  }

  private appendCallEvents(module: string, name: string, args: unknown[]): EventRecord[] {
    const rendered = args
      .map((a) => (typeof a === "number" ? String(a) : `'${String(a)}'`))
      .join(", ");
    const call = `${module} calls function: ${name}(${rendered}).`;
    const next = this.events.length + 1;
    const created: EventRecord[] = [
      {
        seq: next,
        sim_time: 0,
        scope: module,
        source: "Operator",
        level: "control",
        text: call,
        rendered: `[${module}][Operator][12:00:00] ${call}`,
      },
    ];
    this.events.push(...created);
    return created;
  }

  handle(method: string, url: string, body: unknown): { status: number; body: unknown } {
    const { pathname, searchParams } = new URL(url, "http://mock");
    if (method === "GET" && pathname === "/state") {
      return { status: 200, body: this.state };
    }
    if (method === "GET" && pathname === "/events") {
      const fromSeq = Number(searchParams.get("from_seq") ?? "0");
      const scope = searchParams.get("scope");
      const level = searchParams.get("level");
      const source = searchParams.get("source");
      const events = this.events.filter(
        (e) =>
          e.seq > fromSeq &&
          (!scope || e.scope === scope) &&
          (!level || e.level === level) &&
          (!source || e.source === source),
      );
      return { status: 200, body: { events } };
    }
    const invokeMatch = /^\/functions\/([^/]+)\/([^/]+)$/.exec(pathname);
    if (method === "POST" && invokeMatch) {
      const module = decodeURIComponent(invokeMatch[1]!);
      const name = decodeURIComponent(invokeMatch[2]!);
      if (name === "robot_arm_pick") {
        return { status: 422, body: { error: "robot arm is busy" } };
      }
      return {
        status: 200,
        body: { events: this.appendCallEvents(module, name, body as unknown[]) },
      };
    }
    if (method === "POST" && pathname === "/tasks") {
      return { status: 202, body: { status: "accepted" } };
    }
    if (method === "GET" && pathname === "/proposals") {
      return { status: 200, body: { proposals: this.proposals } };
    }
    const decision = /^\/proposals\/([^/]+)\/(approve|reject)$/.exec(pathname);
    if (method === "POST" && decision) {
      const proposal = this.proposals.find((p) => p.id === decision[1]);
      if (!proposal) return { status: 404, body: { error: "unknown proposal" } };
      if (proposal.status !== "pending") {
        return { status: 409, body: { error: `proposal already ${proposal.status}` } };
      }
      if (decision[2] === "approve") {
        proposal.status = "approved";
        const [module = "", rest = ""] = [
          "Storage Station",
          proposal.command,
        ];
        const open = rest.indexOf("(");
        this.appendCallEvents(module, rest.slice(0, open), []);
      } else {
        proposal.status = "rejected";
        // The gate: rejection must never append a function-call event.
      }
      return { status: 200, body: { id: proposal.id, status: proposal.status } };
    }
    if (method === "POST" && pathname === "/recording/start") {
      this.recording = true;
      return { status: 200, body: { recording: true } };
    }
    if (method === "POST" && pathname === "/recording/stop") {
      const description = (body as { task_description?: string })?.task_description;
      if (!description) {
        return { status: 422, body: { error: "recording/stop needs a non-empty task_description" } };
      }
      this.recording = false;
      this.datasets.push("recorded.dataset.jsonl");
      return { status: 200, body: { suite: "recorded", cases: 4 } };
    }
    if (method === "GET" && pathname === "/datasets") {
      return { status: 200, body: { datasets: this.datasets } };
    }
    if (method === "POST" && pathname === "/evaluate") {
      return {
        status: 200,
        body: {
          backend: "oracle",
          overall: { cases: 4, matches: 4, rate: 1.0, plausibility_avg: null, plausibility_annotated: 0 },
          routine: { cases: 4, matches: 4, rate: 1.0, plausibility_avg: null, plausibility_annotated: 0 },
          unexpected: { cases: 0, matches: 0, rate: null, plausibility_avg: null, plausibility_annotated: 0 },
          table: "all 4/4",
        },
      };
    }
    if (method === "GET" && pathname === "/summary") {
      return { status: 200, body: { summary: this.summary } };
    }
    return { status: 404, body: { error: `no route ${method} ${pathname}` } };
  }
}

export function mockFetch(plane: MockControlPlane): { fetchFn: FetchLike; calls: RecordedCall[] } {
  const calls: RecordedCall[] = [];
  const fetchFn: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    calls.push({ method, url, body });
    const result = plane.handle(method, url, body);
    return new Response(JSON.stringify(result.body), {
      status: result.status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fetchFn, calls };
}
