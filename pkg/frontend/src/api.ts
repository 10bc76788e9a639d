// HTTP + SSE client for the session service. The UI computes no geometry:
// every mesh, report, and transcript shown comes from these endpoints.

import type {
  MeshJson,
  RepairSnapshot,
  SessionCreateBody,
  SessionSnapshot,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface EventStreamHandle {
  close(): void;
}

export interface StreamHandlers {
  onEvent(name: string, data: SessionSnapshot): void;
  onError?(): void;
}

export type StreamFactory = (url: string, handlers: StreamHandlers) => EventStreamHandle;

/** Incremental SSE parser: feed chunks, get completed events. */
export class SseParser {
  private buffer = "";

  feed(chunk: string): Array<{ event: string; data: string }> {
    this.buffer += chunk;
    const events: Array<{ event: string; data: string }> = [];
    let boundary = this.buffer.indexOf("\n\n");
    while (boundary >= 0) {
      const block = this.buffer.slice(0, boundary);
      this.buffer = this.buffer.slice(boundary + 2);
      let name = "message";
      const dataLines: string[] = [];
      for (const line of block.split("\n")) {
        if (line.startsWith("event: ")) name = line.slice("event: ".length);
        else if (line.startsWith("data: ")) dataLines.push(line.slice("data: ".length));
      }
      if (dataLines.length) events.push({ event: name, data: dataLines.join("\n") });
      boundary = this.buffer.indexOf("\n\n");
    }
    return events;
  }
}

const browserStreamFactory: StreamFactory = (url, handlers) => {
  const source = new EventSource(url);
  for (const name of ["iteration", "complete", "failed"]) {
    source.addEventListener(name, (event) => {
      handlers.onEvent(name, JSON.parse((event as MessageEvent).data));
    });
  }
  source.onerror = () => handlers.onError?.();
  return { close: () => source.close() };
};

export class ApiClient {
  constructor(
    public baseUrl: string,
    private fetchLike: FetchLike = (url, init) => fetch(url, init),
    private streamFactory: StreamFactory = browserStreamFactory,
  ) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchLike(this.baseUrl + path, init);
    if (!response.ok) {
      throw new Error(`${init?.method ?? "GET"} ${path} -> ${response.status}`);
    }
    return (await response.json()) as T;
  }

  listSessions(): Promise<SessionSnapshot[]> {
    return this.json("/api/sessions");
  }

  createSession(body: SessionCreateBody): Promise<{ id: string }> {
    return this.json("/api/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  startSession(id: string): Promise<unknown> {
    return this.json(`/api/sessions/${id}/start`, { method: "POST" });
  }

  tickSession(id: string): Promise<unknown> {
    return this.json(`/api/sessions/${id}/tick`, { method: "POST" });
  }

  getSession(id: string): Promise<SessionSnapshot> {
    return this.json(`/api/sessions/${id}`);
  }

  getModel(id: string): Promise<MeshJson> {
    return this.json(`/api/sessions/${id}/model`);
  }

  async getModelObj(id: string): Promise<Uint8Array> {
    const response = await this.fetchLike(`${this.baseUrl}/api/sessions/${id}/model.obj`);
    if (!response.ok) throw new Error(`model.obj -> ${response.status}`);
    return new Uint8Array(await response.arrayBuffer());
  }

  async getTranscript(id: string): Promise<string> {
    const response = await this.fetchLike(`${this.baseUrl}/api/sessions/${id}/transcript`);
    if (!response.ok) throw new Error(`transcript -> ${response.status}`);
    return await response.text();
  }

  async cancelSession(id: string): Promise<void> {
    const response = await this.fetchLike(`${this.baseUrl}/api/sessions/${id}`, {
      method: "DELETE",
    });
    if (!response.ok && response.status !== 204) {
      throw new Error(`DELETE -> ${response.status}`);
    }
  }

  createRepair(body: { task_prompt: string; budget: number; provider?: unknown }) {
    return this.json<{ id: string }>("/api/repairs", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getRepair(id: string): Promise<RepairSnapshot> {
    return this.json(`/api/repairs/${id}`);
  }

  getRepairModel(id: string): Promise<MeshJson> {
    return this.json(`/api/repairs/${id}/model`);
  }

  subscribe(id: string, handlers: StreamHandlers): EventStreamHandle {
    return this.streamFactory(`${this.baseUrl}/api/sessions/${id}/events`, handlers);
  }
}
