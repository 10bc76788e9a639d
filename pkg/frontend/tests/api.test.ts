import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { ApiClient, SseParser, StreamHandlers } from "../src/api.js";
import type { SessionSnapshot } from "../src/types.js";

const FIXTURES = join(__dirname, "..", "fixtures", "decagon");

describe("SseParser", () => {
  it("parses whole events", () => {
    const parser = new SseParser();
    const events = parser.feed('event: iteration\ndata: {"a": 1}\n\n');
    expect(events).toEqual([{ event: "iteration", data: '{"a": 1}' }]);
  });

  it("handles chunks split at arbitrary boundaries", () => {
    const parser = new SseParser();
    const full = 'event: iteration\ndata: {"n": 1}\n\nevent: complete\ndata: {"n": 2}\n\n';
    const collected: string[] = [];
    for (const chunk of [full.slice(0, 7), full.slice(7, 31), full.slice(31)]) {
      for (const event of parser.feed(chunk)) collected.push(event.event);
    }
    expect(collected).toEqual(["iteration", "complete"]);
  });

  it("ignores blocks without data", () => {
    const parser = new SseParser();
    expect(parser.feed(": keepalive\n\n")).toEqual([]);
  });
});

function fixtureFetch(url: string): Promise<Response> {
  const routes: Record<string, () => Response> = {
    "/api/sessions/demo": () =>
      new Response(readFileSync(join(FIXTURES, "snapshot.json")), { status: 200 }),
    "/api/sessions/demo/model": () =>
      new Response(readFileSync(join(FIXTURES, "model.json")), { status: 200 }),
    "/api/sessions/demo/model.obj": () =>
      new Response(readFileSync(join(FIXTURES, "model.obj")), { status: 200 }),
    "/api/sessions/demo/transcript": () =>
      new Response(readFileSync(join(FIXTURES, "transcript.jsonl")), { status: 200 }),
  };
  const path = url.replace(/^https?:\/\/[^/]+/, "");
  const route = routes[path];
  return Promise.resolve(route ? route() : new Response("not found", { status: 404 }));
}

describe("ApiClient against fixture responses", () => {
  const client = new ApiClient("http://service", fixtureFetch);

  it("fetches snapshots and meshes", async () => {
    const snapshot = await client.getSession("demo");
    expect(snapshot.state).toBe("complete");
    expect(snapshot.mesh_ready).toBe(true);
    const mesh = await client.getModel("demo");
    expect(mesh.vertices).toHaveLength(32);
  });

  it("downloads OBJ bytes equal to the fixture file", async () => {
    const bytes = await client.getModelObj("demo");
    const expected = readFileSync(join(FIXTURES, "model.obj"));
    expect(Buffer.compare(Buffer.from(bytes), expected)).toBe(0);
  });

  it("surfaces HTTP failures", async () => {
    await expect(client.getSession("missing")).rejects.toThrow("404");
  });

  it("delivers subscribed events through the stream factory", () => {
    const events: SessionSnapshot[] = [];
    const factory = (_url: string, handlers: StreamHandlers) => {
      const fixture = JSON.parse(readFileSync(join(FIXTURES, "events.json"), "utf-8"));
      for (const { event, data } of fixture) handlers.onEvent(event, data);
      return { close: () => undefined };
    };
    const streaming = new ApiClient("http://service", fixtureFetch, factory);
    streaming.subscribe("demo", { onEvent: (_name, data) => events.push(data) });
    expect(events).toHaveLength(5);
    expect(events[4].state).toBe("complete");
  });
});
