// Session dashboard: prompt composer, live viewport, validation feedback,
// transcript, and run controls, all fed by the service's SSE stream.

import { ApiClient, EventStreamHandle } from "./api.js";
import { SessionStore } from "./store.js";
import { Viewport } from "./viewport.js";
import { PRESETS, SessionCreateBody } from "./types.js";

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

export class Dashboard {
  readonly store = new SessionStore();
  private viewport: Viewport;
  private stream: EventStreamHandle | null = null;
  private sessionId: string | null = null;

  constructor(private api: ApiClient) {
    this.viewport = new Viewport(element<HTMLCanvasElement>("viewport"));
    this.store.onChange(() => this.renderPanels());
    this.wireControls();
    void this.refreshSessions();
  }

  private wireControls(): void {
    for (const [name, sentence] of Object.entries(PRESETS)) {
      element<HTMLButtonElement>(`preset-${name}`).addEventListener("click", () => {
        element<HTMLTextAreaElement>("base-prompt").value = sentence;
        element<HTMLSelectElement>("mode").value = "equation_profile";
      });
    }
    element<HTMLButtonElement>("create-session").addEventListener("click", () => {
      void this.createSession();
    });
    element<HTMLButtonElement>("start-session").addEventListener("click", () => {
      if (this.sessionId) void this.api.startSession(this.sessionId).then(() => this.subscribe());
    });
    element<HTMLButtonElement>("tick-session").addEventListener("click", () => {
      if (!this.sessionId) return;
      void this.api
        .tickSession(this.sessionId)
        .then(() => this.resync())
        .catch((error) => this.setBanner(String(error)));
    });
    element<HTMLButtonElement>("cancel-session").addEventListener("click", () => {
      if (this.sessionId) void this.api.cancelSession(this.sessionId).then(() => this.resync());
    });
    element<HTMLButtonElement>("download-obj").addEventListener("click", () => {
      void this.downloadObj();
    });
    element<HTMLSelectElement>("session-list").addEventListener("change", (event) => {
      const id = (event.target as HTMLSelectElement).value;
      if (id) void this.openSession(id);
    });
    element<HTMLButtonElement>("refresh-sessions").addEventListener("click", () => {
      void this.refreshSessions();
    });
  }

  private async refreshSessions(): Promise<void> {
    const picker = element<HTMLSelectElement>("session-list");
    try {
      const sessions = await this.api.listSessions();
      picker.innerHTML = "<option value=''>choose a session…</option>";
      for (const snapshot of sessions) {
        const option = document.createElement("option");
        option.value = snapshot.id;
        option.textContent = `${snapshot.id} (${snapshot.state})`;
        picker.appendChild(option);
      }
      if (!sessions.length) {
        this.setBanner("no sessions yet; create one to begin", false);
      }
    } catch (error) {
      this.setBanner(`service unreachable: ${error}`);
    }
  }

  private collectCreateBody(): SessionCreateBody {
    const numberOf = (id: string) => Number(element<HTMLInputElement>(id).value);
    const maybe = (id: string) => {
      const raw = element<HTMLInputElement>(id).value.trim();
      return raw === "" ? null : Number(raw);
    };
    const base = element<HTMLTextAreaElement>("base-prompt").value.trim();
    return {
      mode: element<HTMLSelectElement>("mode").value,
      sections_target: numberOf("sections-target"),
      max_iterations: numberOf("max-iterations"),
      trigger_interval: numberOf("trigger-interval"),
      section_spacing: numberOf("section-spacing"),
      degree: Number(element<HTMLSelectElement>("degree").value),
      base_prompt: base || null,
      constraints: {
        require_convex: element<HTMLInputElement>("require-convex").checked,
        forbid_self_intersection: element<HTMLInputElement>("forbid-self-intersection").checked,
        inner_circle_radius: maybe("inner-radius"),
        center_bound_radius: maybe("center-bound"),
      },
    };
  }

  private async createSession(): Promise<void> {
    try {
      const { id } = await this.api.createSession(this.collectCreateBody());
      await this.refreshSessions();
      element<HTMLSelectElement>("session-list").value = id;
      await this.openSession(id);
      this.setBanner(`session ${id} created`, false);
    } catch (error) {
      this.setBanner(`create failed: ${error}`);
    }
  }

  async openSession(id: string): Promise<void> {
    this.stream?.close();
    this.sessionId = id;
    this.store.reset();
    this.viewport.clear();
    await this.resync();
    this.subscribe();
  }

  /** Pull the authoritative snapshot (idempotent after reconnects). */
  private async resync(): Promise<void> {
    if (!this.sessionId) return;
    const snapshot = await this.api.getSession(this.sessionId);
    this.store.setSnapshot(snapshot);
    const constraints = snapshot.constraints;
    this.viewport.setOverlays(
      constraints?.inner_circle_radius ?? null,
      constraints?.center_bound_radius ?? null,
    );
    if (snapshot.mesh_ready) {
      this.store.setMesh(await this.api.getModel(this.sessionId));
      this.viewport.setMesh(this.store.mesh);
    }
    await this.renderTranscript();
  }

  private subscribe(): void {
    if (!this.sessionId) return;
    this.stream?.close();
    this.store.setConnection("live");
    this.stream = this.api.subscribe(this.sessionId, {
      onEvent: (name, data) => {
        this.store.applyEvent(name, data);
        this.viewport.setRings(this.store.sectionRings);
        if (name === "complete" && this.sessionId) {
          void this.api.getModel(this.sessionId).then((mesh) => {
            this.store.setMesh(mesh);
            this.viewport.setMesh(mesh);
          });
          this.stream?.close();
          this.store.setConnection("closed");
        }
        void this.renderTranscript();
      },
      onError: () => {
        if (this.store.terminal) {
          this.stream?.close();
          this.store.setConnection("closed");
        } else {
          this.store.setConnection("reconnecting");
          this.setBanner("connection lost, reconnecting…");
          void this.resync();
        }
      },
    });
  }

  private async downloadObj(): Promise<void> {
    if (!this.sessionId) return;
    try {
      const bytes = await this.api.getModelObj(this.sessionId);
      const blob = new Blob([new Uint8Array(bytes)], { type: "model/obj" });
      const link = document.createElement("a");
      link.href = URL.createObjectURL(blob);
      link.download = `${this.sessionId}.obj`;
      link.click();
      URL.revokeObjectURL(link.href);
    } catch (error) {
      this.setBanner(`download failed: ${error}`);
    }
  }

  private setBanner(text: string, isError = true): void {
    const banner = element<HTMLDivElement>("banner");
    banner.textContent = text;
    banner.className = isError ? "banner error" : "banner";
  }

  private async renderTranscript(): Promise<void> {
    if (!this.sessionId) return;
    try {
      const raw = await this.api.getTranscript(this.sessionId);
      const pane = element<HTMLDivElement>("transcript");
      pane.innerHTML = "";
      for (const line of raw.split("\n")) {
        if (!line.trim()) continue;
        const message = JSON.parse(line) as { role: string; content: string };
        const row = document.createElement("div");
        row.className = `turn turn-${message.role}`;
        row.textContent = `${message.role}: ${message.content}`;
        pane.appendChild(row);
      }
      pane.scrollTop = pane.scrollHeight;
    } catch {
      /* transcript is best-effort while a run is in flight */
    }
  }

  private renderPanels(): void {
    const snapshot = this.store.snapshot;
    element<HTMLDivElement>("session-state").textContent = snapshot
      ? `${snapshot.id} — ${snapshot.state}` +
        (snapshot.failure ? ` (${snapshot.failure})` : "") +
        ` — ${snapshot.sections_accepted} sections`
      : "no session selected";

    // Prompt composer: base text plus clauses; escalations highlighted.
    const composer = element<HTMLDivElement>("clause-list");
    composer.innerHTML = "";
    if (snapshot) {
      const clauses = new Set(this.store.escalatedClauses);
      for (const line of snapshot.prompt_text.split("\n")) {
        const row = document.createElement("div");
        row.textContent = line;
        row.className = clauses.has(line) ? "clause escalated" : "clause";
        composer.appendChild(row);
      }
    }

    // Validation panel: one row per iteration.
    const log = element<HTMLDivElement>("iteration-log");
    log.innerHTML = "";
    for (const entry of this.store.entries) {
      const row = document.createElement("div");
      row.className = `iteration ${entry.kind}`;
      const defects = entry.defects.length ? `  [${entry.defects.join(", ")}]` : "";
      row.textContent = `#${entry.iteration} ${entry.kind}${defects}`;
      log.appendChild(row);
    }

    element<HTMLButtonElement>("download-obj").disabled = !snapshot?.mesh_ready;
    const connection = element<HTMLSpanElement>("connection-state");
    connection.textContent = this.store.connection;
    connection.className = `pill ${this.store.connection}`;
  }
}
