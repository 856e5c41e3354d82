// Wire message types for the session service (see docs/protocol.md).
// Every body carries a `schema` tag of the form "<name>@<version>".

export type ConditionName = "control" | "declarative" | "sensing";
export type ContactEstimate = "contact" | "no_contact";
export type DetectorState =
  | "awaiting_reference"
  | "sensing"
  | "contact_confirmed"
  | null;

export interface TrialView {
  schema: "trial.view@1";
  index: number;
  condition: "control" | "sensing";
  complete: boolean;
  detector_state: DetectorState;
  declarations: number;
}

export interface SessionCreated {
  schema: "session.created@1";
  session_id: string;
  trial_count: number;
  trial: TrialView;
}

export interface PositionEstimate {
  schema: "position.estimate@1";
  estimated_distance_mm: number;
  uncertainty_mm: number;
}

export interface AdvanceResult {
  schema: "advance.result@1";
  estimate: PositionEstimate;
  clamped: boolean;
}

export interface TracePreview {
  schema: "trace.preview@1";
  sample_rate_hz: number;
  n_samples: number;
  times_s: number[];
  pressure_pa: number[];
}

export interface ReferenceCaptured {
  schema: "reference.captured@1";
  detector_state: DetectorState;
  trace: TracePreview;
}

export interface SenseResult {
  schema: "sense.result@1";
  verdict: ContactEstimate;
  decision_score: number;
  relative_average_pressure_pa: number;
  pressure_change_from_prior_pa: number;
  detector_state: DetectorState;
  trace: TracePreview;
}

export interface DeclareResult {
  schema: "declare.result@1";
  recorded: boolean;
  condition: ConditionName;
  record_count: number;
}

export interface TrialNext {
  schema: "trial.next@1";
  remaining: number;
  trial: TrialView;
}

export interface TrialsExhausted {
  schema: "session.trials_exhausted@1";
  remaining: 0;
}

export interface RecordView {
  trial_id: string;
  condition: ConditionName;
  actual: ContactEstimate;
  estimated: ContactEstimate;
}

export interface ConfusionCells {
  tp: number;
  fp: number;
  fn: number;
  tn: number;
  total: number;
  errors: number;
}

export interface CloseSummary {
  schema: "session.closed@1";
  records: RecordView[];
  confusion: Record<string, ConfusionCells>;
  ground_truth: Record<string, number>;
}

export interface StreamEvent {
  schema: "event@1";
  seq: number;
  type:
    | "session_created"
    | "trial_started"
    | "reference_captured"
    | "advanced"
    | "sense_result"
    | "declaration_recorded"
    | "trial_complete"
    | "session_closed";
  trial: number;
  payload: unknown;
}

export interface EventPage {
  schema: "event.page@1";
  events: StreamEvent[];
  next: number;
}

export const PA_PER_MMHG = 133.3223684210526;

export function paToMmhg(pa: number): number {
  return pa / PA_PER_MMHG;
}

/** Recursively collect forbidden key names found in a wire body. */
export function scanForKeys(payload: unknown, forbidden: Set<string>): string[] {
  const found: string[] = [];
  const walk = (node: unknown): void => {
    if (Array.isArray(node)) {
      node.forEach(walk);
    } else if (node !== null && typeof node === "object") {
      for (const [key, value] of Object.entries(node as Record<string, unknown>)) {
        if (forbidden.has(key)) found.push(key);
        walk(value);
      }
    }
  };
  walk(payload);
  return found;
}

/** Keys that must never appear on the wire before session close. */
export const GROUND_TRUTH_KEYS = new Set([
  "clot_position_mm",
  "ground_truth",
  "actual",
  "true_distance_mm",
  "in_contact",
]);
