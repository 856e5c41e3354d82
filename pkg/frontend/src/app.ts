// Browser entry: wires the stepper, strip chart, vessel schematic, verdict
// banner, and the per-condition summary to the DOM.

import { VerdictSounder } from "./audio.js";
import { StripChart } from "./chart.js";
import { SessionClient, ServiceError } from "./client.js";
import { sameCells, tallyRecords } from "./confusion.js";
import type { SenseResult, StreamEvent } from "./protocol.js";
import { ProtocolStepper, type StepperState } from "./stepper.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const PATH_LENGTH_MM = 120;

function renderSchematic(state: StepperState): void {
  const marker = $("tip-marker");
  const band = $("uncertainty-band");
  if (state.estimateMm === null) {
    marker.style.display = "none";
    band.style.display = "none";
    return;
  }
  // Position is shown as distance-to-target along a stylized path; the
  // schematic has the clot at the right edge.
  const clamped = Math.max(0, Math.min(PATH_LENGTH_MM, state.estimateMm));
  const fraction = 1 - clamped / PATH_LENGTH_MM;
  marker.style.display = "block";
  marker.style.left = `${(fraction * 100).toFixed(1)}%`;
  const sigma = state.uncertaintyMm ?? 0;
  const width = (2 * sigma) / PATH_LENGTH_MM;
  band.style.display = "block";
  band.style.left = `${((fraction - width / 2) * 100).toFixed(1)}%`;
  band.style.width = `${(width * 100).toFixed(1)}%`;
}

function main(): void {
  const client = new SessionClient("");
  const sounder = new VerdictSounder();
  const chart = new StripChart($("chart") as HTMLCanvasElement, $("stale-badge"));
  let stepper: ProtocolStepper | null = null;
  let unsubscribe: (() => void) | null = null;

  const status = $("status");
  const prompt = $("prompt");
  const banner = $("verdict-banner");
  const eventLog = $("event-log");

  const showError = (error: unknown): void => {
    status.textContent = error instanceof Error ? error.message : String(error);
  };

  const onVerdict = (result: SenseResult): void => {
    banner.textContent =
      result.verdict === "contact"
        ? `CONTACT (score ${result.decision_score.toFixed(2)})`
        : `no contact (score ${result.decision_score.toFixed(2)})`;
    banner.className = result.verdict === "contact" ? "banner contact" : "banner clear";
    sounder.play(result.verdict);
  };

  const refresh = (state: StepperState): void => {
    prompt.textContent = stepper?.prompt() ?? "";
    $("trial-label").textContent =
      `trial ${state.trial.index + 1} - ${state.trial.condition}`;
    $("estimate-label").textContent =
      state.estimateMm === null
        ? "position estimate: (advance to measure)"
        : `position estimate: ${state.estimateMm.toFixed(1)} mm ` +
          `(+/- ${state.uncertaintyMm?.toFixed(0)} mm)`;
    ($("btn-reference") as HTMLButtonElement).disabled =
      state.phase !== "need-reference";
    ($("btn-advance") as HTMLButtonElement).disabled = !stepper?.canAdvance();
    ($("btn-declare-contact") as HTMLButtonElement).disabled = !stepper?.canDeclare();
    ($("btn-declare-clear") as HTMLButtonElement).disabled = !stepper?.canDeclare();
    const senseButton = $("btn-sense") as HTMLButtonElement;
    senseButton.hidden = !stepper?.senseVisible();
    senseButton.disabled = !stepper?.canSense();
    ($("btn-next") as HTMLButtonElement).disabled = state.phase !== "trial-complete";
    ($("btn-close") as HTMLButtonElement).disabled = state.phase !== "session-complete";
    renderSchematic(state);
  };

  const appendEvent = (event: StreamEvent): void => {
    const line = document.createElement("div");
    line.textContent = `#${event.seq} ${event.type} (trial ${event.trial})`;
    eventLog.prepend(line);
  };

  const guard = (action: () => Promise<unknown>) => (): void => {
    action().catch((error) => {
      if (error instanceof ServiceError || error instanceof Error) showError(error);
    });
  };

  $("btn-start").onclick = guard(async () => {
    const seed = Number(($("seed-input") as HTMLInputElement).value) || 0;
    const created = await client.createSession({ mode: "study", seed });
    status.textContent = `session ${created.session_id} (${created.trial_count} trials)`;
    stepper = new ProtocolStepper(client, created, {
      onUpdate: refresh,
      onTrace: (trace) => chart.push(trace),
      onVerdict,
    });
    unsubscribe?.();
    unsubscribe = client.subscribe(appendEvent);
  });

  $("btn-reference").onclick = guard(async () => stepper?.captureReference());
  $("btn-advance").onclick = guard(async () => stepper?.advanceToNextPause());
  $("btn-declare-contact").onclick = guard(async () => stepper?.declare("contact"));
  $("btn-declare-clear").onclick = guard(async () => stepper?.declare("no_contact"));
  $("btn-sense").onclick = guard(async () => stepper?.sense());
  $("btn-next").onclick = guard(async () => stepper?.nextTrial());

  $("btn-close").onclick = guard(async () => {
    const summary = await client.close();
    unsubscribe?.();
    const recomputed = tallyRecords(summary.records);
    const agrees = sameCells(recomputed, summary.confusion);
    const lines = Object.entries(summary.confusion).map(
      ([condition, c]) =>
        `${condition}: ${c.errors}/${c.total} errors ` +
        `(tp ${c.tp}, fp ${c.fp}, fn ${c.fn}, tn ${c.tn})`,
    );
    $("summary").textContent =
      lines.join("\n") + (agrees ? "\n(client tally agrees)" : "\n(TALLY MISMATCH)");
  });
}

window.addEventListener("load", main);
