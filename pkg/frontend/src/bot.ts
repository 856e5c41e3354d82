// Headless scripted operator: drives the stepper through a full study the
// same way the UI does, then verifies the revealed summary.

import { SessionClient } from "./client.js";
import { tallyRecords } from "./confusion.js";
import {
  GROUND_TRUTH_KEYS,
  scanForKeys,
  type CloseSummary,
  type ConfusionCells,
} from "./protocol.js";
import { ProtocolStepper } from "./stepper.js";

export interface BotReport {
  summary: CloseSummary;
  recomputed: Record<string, ConfusionCells>;
  /** Forbidden keys seen in any wire body before the close response. */
  leaks: string[];
  trialsCompleted: number;
  declarations: number;
}

/**
 * Run the 12-trial study: at each scripted pause declare contact only when
 * aiming for the 0 mm stop, and trigger the detector in sensing trials.
 */
export async function runScriptedStudy(
  baseUrl: string,
  seed: number,
): Promise<BotReport> {
  const client = new SessionClient(baseUrl);
  const created = await client.createSession({ mode: "study", seed });
  const stepper = new ProtocolStepper(client, created);

  let sessionDone = false;
  while (!sessionDone) {
    if (stepper.state().phase === "need-reference") {
      await stepper.captureReference();
    }
    while (stepper.state().phase !== "trial-complete") {
      await stepper.advanceToNextPause();
      const target = stepper.currentTarget();
      await stepper.declare(target === 0 ? "contact" : "no_contact");
      if (stepper.canSense()) {
        await stepper.sense(); // a contact verdict ends the trial early
      }
    }
    sessionDone = !(await stepper.nextTrial());
  }

  const beforeClose = client.wireLog.length;
  const summary = await client.close();
  const leaks = client.wireLog
    .slice(0, beforeClose)
    .flatMap((body) => scanForKeys(body, GROUND_TRUTH_KEYS));

  const state = stepper.state();
  return {
    summary,
    recomputed: tallyRecords(summary.records),
    leaks,
    trialsCompleted: state.trialsCompleted,
    declarations: state.declarations,
  };
}
