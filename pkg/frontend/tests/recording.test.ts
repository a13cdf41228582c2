// Recording controls and the task-description requirement on stop.

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { canStopRecording, summaryControlEnabled } from "../src/panels.js";
import { MockControlPlane, mockFetch } from "./fixtures.js";

describe("recording controls", () => {
  it("stop is blocked locally until a task description is provided", async () => {
    const plane = new MockControlPlane();
    const { fetchFn, calls } = mockFetch(plane);
    const api = new ApiClient(fetchFn);

    await api.startRecording();
    const decision = canStopRecording("   ");
    expect(decision.allowed).toBe(false);
    expect(decision.message).toContain("Describe the task");
    // guard respected: no stop request was issued
    expect(calls.filter((c) => c.url === "/recording/stop")).toHaveLength(0);

    const ok = canStopRecording("storage export routine");
    expect(ok.allowed).toBe(true);
    const result = await api.stopRecording("storage export routine");
    expect(result.cases).toBe(4);
    const datasets = await api.listDatasets();
    expect(datasets).toContain("recorded.dataset.jsonl");
  });

  it("the service also refuses a stop without description", async () => {
    const plane = new MockControlPlane();
    const { fetchFn } = mockFetch(plane);
    const api = new ApiClient(fetchFn);
    await api.startRecording();
    await expect(api.stopRecording("")).rejects.toMatchObject({ status: 422 });
  });
});

describe("summary control", () => {
  it("is disabled on an empty log and enabled once events exist", () => {
    expect(summaryControlEnabled(0)).toBe(false);
    expect(summaryControlEnabled(12)).toBe(true);
  });

  it("fetches the summary text verbatim", async () => {
    const plane = new MockControlPlane();
    plane.summary = "The storage station completed one retrieval task.";
    const { fetchFn } = mockFetch(plane);
    const api = new ApiClient(fetchFn);
    expect(await api.getSummary()).toBe("The storage station completed one retrieval task.");
  });
});
