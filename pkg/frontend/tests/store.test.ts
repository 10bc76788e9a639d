// Console session flow against the recorded fixture run: events arrive in
// order, the final mesh renders from the service's JSON, the escalated
// clause is highlighted, and the downloaded OBJ bytes match the engine's
// committed golden file.

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { SessionStore } from "../src/store.js";
import type { MeshJson, SessionSnapshot } from "../src/types.js";

const FIXTURES = join(__dirname, "..", "fixtures", "decagon");

function loadEvents(): Array<{ event: string; data: SessionSnapshot }> {
  return JSON.parse(readFileSync(join(FIXTURES, "events.json"), "utf-8"));
}

function loadMesh(): MeshJson {
  return JSON.parse(readFileSync(join(FIXTURES, "model.json"), "utf-8"));
}

describe("session dashboard store (fixture replay)", () => {
  it("shows the iteration events in order with three accepted sections", () => {
    const store = new SessionStore();
    for (const { event, data } of loadEvents()) store.applyEvent(event, data);

    expect(store.entries.map((entry) => entry.iteration)).toEqual([1, 2, 3, 4]);
    expect(store.entries[0].kind).toBe("rejected");
    expect(store.entries[0].defects).toContain("SELF_INTERSECT");
    expect(store.acceptedIterations.map((entry) => entry.iteration)).toEqual([2, 3, 4]);
    expect(store.terminal).toBe("complete");
    expect(store.snapshot?.mesh_ready).toBe(true);
  });

  it("renders the final mesh fetched from the service", () => {
    const store = new SessionStore();
    for (const { event, data } of loadEvents()) store.applyEvent(event, data);
    store.setMesh(loadMesh());

    expect(store.mesh?.vertices).toHaveLength(32);
    expect(store.mesh?.triangles).toHaveLength(60);
    // each accepted section also carries its ring for live display
    expect(store.sectionRings).toHaveLength(3);
    for (const ring of store.sectionRings) expect(ring).toHaveLength(10);
  });

  it("highlights the escalated clause in the prompt composer", () => {
    const store = new SessionStore();
    for (const { event, data } of loadEvents()) store.applyEvent(event, data);

    expect(store.escalatedClauses).toEqual([
      "Ensure that the points create a convex circle that avoids intersection lines.",
    ]);
    // the highlighted clause is a line of the rendered prompt
    const promptLines = store.snapshot?.prompt_text.split("\n") ?? [];
    expect(promptLines).toContain(store.escalatedClauses[0]);
  });

  it("downloads OBJ bytes identical to the engine's golden file", () => {
    const served = readFileSync(join(FIXTURES, "model.obj"));
    const golden = readFileSync(
      join(__dirname, "..", "..", "tests", "data", "decagon_model.obj"),
    );
    expect(Buffer.compare(served, golden)).toBe(0);
  });

  it("re-applies replayed events idempotently (reconnect re-sync)", () => {
    const store = new SessionStore();
    const events = loadEvents();
    for (const { event, data } of events) store.applyEvent(event, data);
    const once = JSON.stringify(store.entries);
    for (const { event, data } of events) store.applyEvent(event, data); // replay
    expect(JSON.stringify(store.entries)).toBe(once);
    expect(store.entries).toHaveLength(4);
  });
});
