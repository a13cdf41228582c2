// Approval queue: the human gate between agent proposals and the plant.

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { conflictMessage, proposalRows } from "../src/panels.js";
import { MockControlPlane, mockFetch } from "./fixtures.js";
import type { Proposal } from "../src/types.js";

function pending(id: string): Proposal {
  return {
    id,
    agent_id: "storage-operator",
    reason: "Carrier detected at entrance, initiate transport to pick and place point",
    command: "conveyor_1_run('forward', 13)",
    created_sim_time: 285,
    status: "pending",
  };
}

describe("approval queue", () => {
  it("shows reason and canonical command, actionable only while pending", () => {
    const rows = proposalRows([
      pending("p1"),
      { ...pending("p2"), status: "expired" },
      { ...pending("p3"), status: "rejected" },
    ]);
    expect(rows[0]).toMatchObject({
      reason: "Carrier detected at entrance, initiate transport to pick and place point",
      command: "conveyor_1_run('forward', 13)",
      actionable: true,
      struckThrough: false,
    });
    expect(rows[1]).toMatchObject({ actionable: false, struckThrough: true }); // superseded
    expect(rows[2]).toMatchObject({ actionable: false, struckThrough: false });
  });

  it("a rejected proposal never produces a function-call event", async () => {
    const plane = new MockControlPlane();
    plane.addProposal(pending("p1"));
    const { fetchFn } = mockFetch(plane);
    const api = new ApiClient(fetchFn);

    await api.rejectProposal("p1");
    const events = await api.getEvents(0, {});
    expect(events.filter((e) => e.text.includes("calls function"))).toHaveLength(0);
    const proposals = await api.listProposals();
    expect(proposals[0]!.status).toBe("rejected");
  });

  it("an approved proposal dispatches and double-approval is a visible conflict", async () => {
    const plane = new MockControlPlane();
    plane.addProposal(pending("p1"));
    const { fetchFn } = mockFetch(plane);
    const api = new ApiClient(fetchFn);

    await api.approveProposal("p1");
    const events = await api.getEvents(0, {});
    expect(events.some((e) => e.text.includes("calls function"))).toBe(true);

    await expect(api.approveProposal("p1")).rejects.toMatchObject({ status: 409 });
    expect(conflictMessage("p1")).toBe("Proposal p1 was already resolved.");
  });
});
