// The event panel shows served lines verbatim; filters re-query from seq 0.

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { eventPanelLines, queryForFilterChange } from "../src/panels.js";
import { MockControlPlane, mockFetch, RETRIEVAL_LINES, retrievalEvents } from "./fixtures.js";

describe("event panel", () => {
  it("renders the retrieval fixture character-identically and in order", () => {
    const lines = eventPanelLines(retrievalEvents());
    expect(lines).toEqual(RETRIEVAL_LINES);
    expect(lines).toHaveLength(12);
  });

  it("scope filter narrows to exactly the inspection line", async () => {
    const plane = new MockControlPlane();
    plane.events = retrievalEvents();
    const { fetchFn } = mockFetch(plane);
    const api = new ApiClient(fetchFn);
    const events = await api.getEvents(0, { scope: "Inspection Station" });
    expect(eventPanelLines(events)).toEqual([
      "[Inspection Station][System][12:04:44] BG27 detects a workpiece at the outlet of conveyor C2.",
    ]);
  });

  it("an empty session gives an empty panel", () => {
    expect(eventPanelLines([])).toEqual([]);
  });

  it("filter changes restart the query at seq 0", () => {
    const query = queryForFilterChange({ scope: "Storage Station" });
    expect(query.fromSeq).toBe(0);
    expect(query.filters).toEqual({ scope: "Storage Station" });
  });
});
