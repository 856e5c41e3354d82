// Audible verdict cues: distinct (configurable) tones for contact and
// no-contact, fired once per sense result.

export interface ToneConfig {
  contactHz: number;
  noContactHz: number;
  durationMs: number;
}

export const DEFAULT_TONES: ToneConfig = {
  contactHz: 880,
  noContactHz: 330,
  durationMs: 350,
};

export class VerdictSounder {
  private context: AudioContext | null = null;

  constructor(private readonly tones: ToneConfig = DEFAULT_TONES) {}

  play(verdict: "contact" | "no_contact"): void {
    try {
      this.context ??= new AudioContext();
      const osc = this.context.createOscillator();
      const gain = this.context.createGain();
      osc.frequency.value =
        verdict === "contact" ? this.tones.contactHz : this.tones.noContactHz;
      gain.gain.value = 0.12;
      osc.connect(gain).connect(this.context.destination);
      osc.start();
      osc.stop(this.context.currentTime + this.tones.durationMs / 1000);
    } catch {
      // No audio device (headless); the visual banner still fires.
    }
  }
}
