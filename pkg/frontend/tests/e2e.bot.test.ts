// End-to-end: spawn the real session service, drive the full 12-trial study
// through the stepper with the headless bot, and verify the summary,
// determinism, and the absence of ground-truth leakage on the wire.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { runScriptedStudy } from "../src/bot.js";
import { sameCells } from "../src/confusion.js";

const PORT = 8731 + (process.pid % 200);
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess;
let dataDir: string;

async function waitForHealth(timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/v1/healthz`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("service did not become healthy in time");
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "vacusense-e2e-"));
  service = spawn(
    "python3",
    ["-m", "vacusense.cli", "serve", "--port", String(PORT), "--data-dir", dataDir],
    { stdio: "ignore" },
  );
  await waitForHealth();
});

afterAll(() => {
  service?.kill("SIGTERM");
  rmSync(dataDir, { recursive: true, force: true });
});

describe("scripted study against the live service", () => {
  it("completes 12 trials and matches the server-side confusion summary", async () => {
    const report = await runScriptedStudy(BASE, 2024);
    expect(report.trialsCompleted).toBe(12);
    expect(Object.keys(report.summary.ground_truth)).toHaveLength(12);
    expect(sameCells(report.recomputed, report.summary.confusion)).toBe(true);

    // Six control trials yield 3 declarations each.
    expect(report.summary.confusion.control?.total).toBe(18);
    expect(report.summary.confusion.declarative).toBeDefined();
    expect(report.summary.confusion.sensing).toBeDefined();
  });

  it("is deterministic for a fixed seed", async () => {
    const first = await runScriptedStudy(BASE, 777);
    const second = await runScriptedStudy(BASE, 777);
    expect(second.summary.confusion).toEqual(first.summary.confusion);
    expect(second.summary.records).toEqual(first.summary.records);
    const third = await runScriptedStudy(BASE, 778);
    expect(third.summary.records).not.toEqual(first.summary.records);
  });

  it("sees zero ground-truth leakage in captured wire traffic", async () => {
    const report = await runScriptedStudy(BASE, 31);
    expect(report.leaks).toEqual([]);
  });
});
