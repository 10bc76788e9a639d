// Single source of UI truth for one open session. Events may replay after a
// reconnect, so every application is an idempotent upsert keyed by iteration.

import type { MeshJson, OutcomeJson, SessionSnapshot } from "./types.js";

export interface IterationEntry {
  iteration: number;
  kind: string;
  defects: string[];
  promptText: string;
  ring: number[][] | null;
  reportViolations: [string, string][];
}

export type StoreListener = (store: SessionStore) => void;

export class SessionStore {
  snapshot: SessionSnapshot | null = null;
  entries: IterationEntry[] = [];
  mesh: MeshJson | null = null;
  terminal: string | null = null;
  connection: "idle" | "live" | "reconnecting" | "closed" = "idle";

  private listeners: StoreListener[] = [];

  onChange(listener: StoreListener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this);
  }

  /** Clauses appended by escalation; these are highlighted in the composer. */
  get escalatedClauses(): string[] {
    return this.snapshot?.prompt_clauses ?? [];
  }

  get acceptedIterations(): IterationEntry[] {
    return this.entries.filter((entry) => entry.kind === "accepted");
  }

  get sectionRings(): number[][][] {
    return this.acceptedIterations
      .map((entry) => entry.ring)
      .filter((ring): ring is number[][] => ring != null);
  }

  reset(): void {
    this.snapshot = null;
    this.entries = [];
    this.mesh = null;
    this.terminal = null;
    this.connection = "idle";
    this.notify();
  }

  setConnection(state: SessionStore["connection"]): void {
    this.connection = state;
    this.notify();
  }

  setSnapshot(snapshot: SessionSnapshot): void {
    this.snapshot = snapshot;
    this.notify();
  }

  setMesh(mesh: MeshJson): void {
    this.mesh = mesh;
    this.notify();
  }

  applyEvent(name: string, snapshot: SessionSnapshot): void {
    if (name === "iteration") {
      this.snapshot = snapshot;
      const outcome: OutcomeJson | undefined = snapshot.outcome;
      const entry: IterationEntry = {
        iteration: snapshot.iteration,
        kind: outcome?.kind ?? "unknown",
        defects: outcome?.defects ?? [],
        promptText: snapshot.prompt_text,
        ring: outcome?.ring ?? null,
        reportViolations: outcome?.report?.violations ?? [],
      };
      const index = this.entries.findIndex((e) => e.iteration === entry.iteration);
      if (index >= 0) {
        this.entries[index] = entry; // replayed event: idempotent upsert
      } else {
        this.entries.push(entry);
        this.entries.sort((a, b) => a.iteration - b.iteration);
      }
    } else if (name === "complete" || name === "failed") {
      this.snapshot = snapshot;
      this.terminal = name;
    }
    this.notify();
  }
}
