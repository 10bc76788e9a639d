// Repair console: one card per generate-execute-debug attempt, with the
// interpreter's error string on failures and the scene mesh on convergence.

import { ApiClient } from "./api.js";
import { Viewport } from "./viewport.js";
import type { RepairSnapshot } from "./types.js";

export interface RepairCard {
  index: number;
  script: string;
  error: string | null;
  converged: boolean;
}

/** Pure view-model: what each attempt card displays. */
export function repairCards(snapshot: RepairSnapshot): RepairCard[] {
  return (snapshot.attempts ?? []).map((attempt, index) => ({
    index: index + 1,
    script: attempt.script_text,
    error: attempt.outcome.error ?? null,
    converged: attempt.outcome.scene != null,
  }));
}

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

export class RepairConsole {
  private repairId: string | null = null;
  private timer: number | null = null;

  constructor(private api: ApiClient) {
    element<HTMLButtonElement>("repair-run").addEventListener("click", () => {
      void this.run();
    });
  }

  private async run(): Promise<void> {
    const prompt = element<HTMLTextAreaElement>("repair-prompt").value.trim();
    const budget = Number(element<HTMLInputElement>("repair-budget").value) || 3;
    if (!prompt) return;
    const status = element<HTMLDivElement>("repair-status");
    try {
      const { id } = await this.api.createRepair({ task_prompt: prompt, budget });
      this.repairId = id;
      status.textContent = `repair ${id} running…`;
      if (this.timer != null) window.clearInterval(this.timer);
      this.timer = window.setInterval(() => void this.poll(), 250);
    } catch (error) {
      status.textContent = `repair failed to start: ${error}`;
    }
  }

  private async poll(): Promise<void> {
    if (!this.repairId) return;
    const snapshot = await this.api.getRepair(this.repairId);
    if (snapshot.state === "running") return;
    if (this.timer != null) window.clearInterval(this.timer);
    this.timer = null;
    element<HTMLDivElement>("repair-status").textContent =
      `repair ${this.repairId}: ${snapshot.state}`;
    await this.render(snapshot);
  }

  async render(snapshot: RepairSnapshot): Promise<void> {
    const pane = element<HTMLDivElement>("repair-cards");
    pane.innerHTML = "";
    for (const card of repairCards(snapshot)) {
      const box = document.createElement("div");
      box.className = `card ${card.converged ? "converged" : "failed"}`;

      const title = document.createElement("div");
      title.className = "card-title";
      title.textContent = `attempt ${card.index}: ` + (card.converged ? "scene" : "error");
      box.appendChild(title);

      const script = document.createElement("pre");
      script.textContent = card.script;
      box.appendChild(script);

      if (card.error) {
        const error = document.createElement("div");
        error.className = "error-string";
        error.textContent = card.error;
        box.appendChild(error);
      }
      if (card.converged && this.repairId) {
        const canvas = document.createElement("canvas");
        canvas.width = 420;
        canvas.height = 260;
        box.appendChild(canvas);
        const viewport = new Viewport(canvas);
        viewport.setMesh(await this.api.getRepairModel(this.repairId));
      }
      pane.appendChild(box);
    }
    if (snapshot.state === "exhausted" && pane.lastElementChild) {
      const flag = document.createElement("div");
      flag.className = "error-string";
      flag.textContent = "budget exhausted";
      pane.lastElementChild.appendChild(flag);
    }
  }
}
