// Canvas strip chart for the excitation pressure. Displays mmHg with the
// latest raw pascal value as a tooltip, and flags a stale stream within 2 s.

import { paToMmhg, type TracePreview } from "./protocol.js";

export const STALE_AFTER_MS = 2000;

/** Liveness rule: a fed chart goes stale 2 s after its last update. */
export function isStale(lastUpdateMs: number, nowMs: number): boolean {
  return lastUpdateMs > 0 && nowMs - lastUpdateMs > STALE_AFTER_MS;
}

export class StripChart {
  private points: { t: number; mmhg: number }[] = [];
  private lastUpdate = 0;
  private staleTimer: ReturnType<typeof setInterval>;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly staleBadge: HTMLElement,
    private readonly windowSeconds = 10,
  ) {
    this.staleTimer = setInterval(() => this.refreshStaleBadge(), 500);
    this.draw();
  }

  dispose(): void {
    clearInterval(this.staleTimer);
  }

  push(trace: TracePreview): void {
    const t0 = this.points.length ? this.points[this.points.length - 1]!.t : 0;
    for (let i = 0; i < trace.pressure_pa.length; i++) {
      this.points.push({
        t: t0 + (trace.times_s[i] ?? 0),
        mmhg: paToMmhg(trace.pressure_pa[i] ?? 0),
      });
    }
    const latest = this.points[this.points.length - 1];
    if (latest !== undefined) {
      const lastPa = trace.pressure_pa[trace.pressure_pa.length - 1] ?? 0;
      this.canvas.title = `${lastPa.toFixed(1)} Pa`;
      const cutoff = latest.t - this.windowSeconds;
      this.points = this.points.filter((p) => p.t >= cutoff);
    }
    this.lastUpdate = Date.now();
    this.refreshStaleBadge();
    this.draw();
  }

  private refreshStaleBadge(): void {
    this.staleBadge.hidden = !isStale(this.lastUpdate, Date.now());
  }

  private draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.strokeStyle = "#2b3a55";
    ctx.strokeRect(0.5, 0.5, width - 1, height - 1);
    if (this.points.length < 2) return;

    const tMin = this.points[0]!.t;
    const tMax = this.points[this.points.length - 1]!.t;
    let lo = Infinity;
    let hi = -Infinity;
    for (const p of this.points) {
      lo = Math.min(lo, p.mmhg);
      hi = Math.max(hi, p.mmhg);
    }
    if (hi - lo < 1e-9) {
      lo -= 1;
      hi += 1;
    }
    const x = (t: number) => ((t - tMin) / Math.max(tMax - tMin, 1e-9)) * (width - 8) + 4;
    const y = (v: number) => height - 4 - ((v - lo) / (hi - lo)) * (height - 8);

    ctx.beginPath();
    ctx.strokeStyle = "#6fd08c";
    this.points.forEach((p, i) => {
      if (i === 0) ctx.moveTo(x(p.t), y(p.mmhg));
      else ctx.lineTo(x(p.t), y(p.mmhg));
    });
    ctx.stroke();

    ctx.fillStyle = "#9fb3d1";
    ctx.font = "10px sans-serif";
    ctx.fillText(`${hi.toFixed(0)} mmHg`, 6, 12);
    ctx.fillText(`${lo.toFixed(0)} mmHg`, 6, height - 6);
  }
}
