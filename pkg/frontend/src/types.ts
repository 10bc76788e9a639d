// Wire types mirroring the service's JSON bodies.

export interface ConstraintsInfo {
  require_convex: boolean;
  forbid_self_intersection: boolean;
  inner_circle_radius: number | null;
  center_bound_radius: number | null;
}

export type Violation = [string, string];

export interface ReportJson {
  convex: boolean;
  self_intersecting: boolean;
  contains_inner_circle: boolean | null;
  center_in_bound: boolean | null;
  violations: Violation[];
  passed: boolean;
}

export interface OutcomeJson {
  kind: string;
  defects: string[];
  report: ReportJson | null;
  payload: string | null;
  message: string | null;
  ring: number[][] | null;
}

export interface SessionSnapshot {
  id: string;
  state: string;
  iteration: number;
  sections_accepted: number;
  prompt_text: string;
  prompt_clauses?: string[];
  last_report: ReportJson | null;
  mesh_ready: boolean;
  failure?: string | null;
  constraints?: ConstraintsInfo;
  outcome?: OutcomeJson;
  links?: { model_url: string; transcript_url: string; events_url: string };
}

export interface MeshJson {
  vertices: number[][];
  triangles: number[][];
  ring_size?: number;
  section_count?: number;
}

export interface RepairAttemptJson {
  script_text: string;
  outcome: { scene?: unknown; error?: string };
}

export interface RepairSnapshot {
  id: string;
  state: string;
  budget?: number;
  attempts?: RepairAttemptJson[];
  error?: string;
}

export interface SessionCreateBody {
  mode: string;
  sections_target: number;
  max_iterations: number;
  trigger_interval: number;
  section_spacing: number;
  degree: number;
  base_prompt?: string | null;
  constraints: {
    require_convex: boolean;
    forbid_self_intersection: boolean;
    inner_circle_radius: number | null;
    center_bound_radius: number | null;
  };
  provider?: unknown;
}

// The preset sentences offered by the prompt composer.
export const PRESETS: Record<string, string> = {
  placid: "Generate a polynomial curve that has placid, calm, and linear waves.",
  drastic: "Generate a polynomial curve that has surge, drastic, and crazy fluctuation waves",
};
