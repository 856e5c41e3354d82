// Guided study-protocol flow: pause at estimated 10 / 5 / 0 mm, declare
// before advancing, sense after declaring (sensing trials only). Out-of-order
// actions are blocked with an explanation rather than sent to the service.

import type { SessionCommands } from "./client.js";
import type {
  ContactEstimate,
  SenseResult,
  SessionCreated,
  TracePreview,
  TrialView,
} from "./protocol.js";

export const PAUSE_TARGETS_MM = [10, 5, 0] as const;

export type StepperPhase =
  | "need-reference"
  | "ready-to-advance"
  | "awaiting-declaration"
  | "need-sense"
  | "trial-complete"
  | "session-complete";

export class StepperBlockedError extends Error {}

export interface StepperState {
  phase: StepperPhase;
  trial: TrialView;
  pauseIndex: number; // index into PAUSE_TARGETS_MM of the *next* pause
  estimateMm: number | null;
  uncertaintyMm: number | null;
  contactConfirmed: boolean;
  trialsCompleted: number;
  declarations: number;
}

export interface StepperHooks {
  onUpdate?: (state: StepperState) => void;
  onTrace?: (trace: TracePreview) => void;
  onVerdict?: (result: SenseResult) => void;
}

export class ProtocolStepper {
  private phase: StepperPhase;
  private trial: TrialView;
  private pauseIndex = 0;
  private estimateMm: number | null = null;
  private uncertaintyMm: number | null = null;
  private contactConfirmed = false;
  private trialsCompleted = 0;
  private declarations = 0;

  constructor(
    private readonly client: SessionCommands,
    created: SessionCreated,
    private readonly hooks: StepperHooks = {},
  ) {
    this.trial = created.trial;
    this.phase = this.startPhase();
    this.emit();
  }

  private startPhase(): StepperPhase {
    return this.trial.condition === "sensing" ? "need-reference" : "ready-to-advance";
  }

  private emit(): void {
    this.hooks.onUpdate?.(this.state());
  }

  state(): StepperState {
    return {
      phase: this.phase,
      trial: this.trial,
      pauseIndex: this.pauseIndex,
      estimateMm: this.estimateMm,
      uncertaintyMm: this.uncertaintyMm,
      contactConfirmed: this.contactConfirmed,
      trialsCompleted: this.trialsCompleted,
      declarations: this.declarations,
    };
  }

  currentTarget(): number | null {
    const target = PAUSE_TARGETS_MM[this.pauseIndex];
    return target === undefined ? null : target;
  }

  prompt(): string {
    switch (this.phase) {
      case "need-reference":
        return "Capture the baseline excitation before navigating.";
      case "ready-to-advance":
        return `Advance to an estimated ${this.currentTarget()} mm from the clot.`;
      case "awaiting-declaration":
        return "Pause: declare contact or no contact before moving on.";
      case "need-sense":
        return "Run the excitation sense at this pause.";
      case "trial-complete":
        return "Trial complete: continue to the next trial.";
      case "session-complete":
        return "All trials complete: close the session for the summary.";
    }
  }

  canAdvance(): boolean {
    return this.phase === "ready-to-advance";
  }

  canDeclare(): boolean {
    return this.phase === "awaiting-declaration";
  }

  /** Sense is hidden entirely outside the sensing condition. */
  senseVisible(): boolean {
    return this.trial.condition === "sensing";
  }

  canSense(): boolean {
    return this.senseVisible() && this.phase === "need-sense";
  }

  private blockUnless(allowed: boolean, explanation: string): void {
    if (!allowed) throw new StepperBlockedError(`${explanation} (phase: ${this.phase})`);
  }

  async captureReference(): Promise<void> {
    this.blockUnless(
      this.phase === "need-reference",
      "reference capture is only the first step of a sensing trial",
    );
    const captured = await this.client.captureReference();
    if (captured.trace) this.hooks.onTrace?.(captured.trace);
    this.phase = "ready-to-advance";
    this.emit();
  }

  /** Step toward the next scripted pause using the latest noisy estimate. */
  async advanceToNextPause(): Promise<void> {
    this.blockUnless(
      this.phase === "ready-to-advance",
      this.phase === "awaiting-declaration" || this.phase === "need-sense"
        ? "declare (and sense) at the current pause before advancing"
        : "advancing is not available right now",
    );
    const target = this.currentTarget();
    if (target === null) throw new StepperBlockedError("no pauses left in this trial");
    if (this.estimateMm === null) {
      const probe = await this.client.advance(0);
      this.estimateMm = probe.estimate.estimated_distance_mm;
      this.uncertaintyMm = probe.estimate.uncertainty_mm;
    }
    const result = await this.client.advance(this.estimateMm - target);
    this.estimateMm = result.estimate.estimated_distance_mm;
    this.uncertaintyMm = result.estimate.uncertainty_mm;
    this.phase = "awaiting-declaration";
    this.emit();
  }

  async declare(estimate: ContactEstimate): Promise<void> {
    this.blockUnless(this.canDeclare(), "reach a pause before declaring");
    await this.client.declare(estimate);
    this.declarations += 1;
    if (this.trial.condition === "sensing") {
      this.phase = "need-sense";
    } else {
      this.advancePause();
    }
    this.emit();
  }

  async sense(): Promise<SenseResult> {
    this.blockUnless(
      this.senseVisible(),
      "the sense trigger is unavailable in the control condition",
    );
    this.blockUnless(this.canSense(), "declare at the pause before sensing");
    const result = await this.client.sense();
    this.hooks.onTrace?.(result.trace);
    this.hooks.onVerdict?.(result);
    if (result.verdict === "contact") {
      // Contact confirmed: the detection loop is over for this trial.
      this.contactConfirmed = true;
      this.phase = "trial-complete";
    } else {
      this.advancePause();
    }
    this.emit();
    return result;
  }

  private advancePause(): void {
    this.pauseIndex += 1;
    this.phase = this.pauseIndex >= PAUSE_TARGETS_MM.length
      ? "trial-complete"
      : "ready-to-advance";
  }

  async nextTrial(): Promise<boolean> {
    this.blockUnless(
      this.phase === "trial-complete",
      "finish the scripted pauses before moving to the next trial",
    );
    const next = await this.client.nextTrial();
    this.trialsCompleted += 1;
    if (next.schema === "session.trials_exhausted@1") {
      this.phase = "session-complete";
      this.emit();
      return false;
    }
    this.trial = next.trial;
    this.pauseIndex = 0;
    this.estimateMm = null;
    this.uncertaintyMm = null;
    this.contactConfirmed = false;
    this.phase = this.startPhase();
    this.emit();
    return true;
  }
}
