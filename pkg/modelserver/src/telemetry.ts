import * as fs from "node:fs";
import * as path from "node:path";

export interface TelemetrySample {
  t_ms: number;
  gpu_load_pct: number;
  vram_mb: number;
  device: string;
}

export interface SamplerConfig {
  telemetryDir: string;
  sampleIntervalMs: number;
  device?: string;
}

/** Synthetic load/VRAM curve: a ramp-up, a busy plateau with ripple, and a
 * tail-off, always clamped to the valid ranges. */
export function syntheticSample(tMs: number, durationMs: number, device: string): TelemetrySample {
  const phase = durationMs > 0 ? tMs / durationMs : 1;
  const ripple = 10 * Math.sin(tMs / 90);
  let load = phase < 0.15 ? 600 * phase : phase > 0.9 ? 90 * (1 - phase) * 10 : 85 + ripple;
  load = Math.min(100, Math.max(0, load));
  const vram = 1000 + 6000 * Math.min(1, phase * 1.5);
  return {
    t_ms: Math.round(tMs),
    gpu_load_pct: Number(load.toFixed(2)),
    vram_mb: Number(vram.toFixed(1)),
    device,
  };
}

/** Emits one JSONL file per job, one sample per interval, in the schema the
 * engine's telemetry parser expects. */
export class TelemetrySampler {
  private readonly cfg: Required<SamplerConfig>;

  constructor(cfg: SamplerConfig) {
    if (cfg.sampleIntervalMs < 10) {
      throw new Error(`sample interval must be >= 10 ms, got ${cfg.sampleIntervalMs}`);
    }
    this.cfg = { device: "synthetic0", ...cfg };
  }

  /** Synchronously write the samples a job of the given length would emit. */
  writeSyntheticRun(upscalerId: string, imageId: string, rep: number, durationMs: number): string {
    const dir = path.join(this.cfg.telemetryDir, upscalerId);
    fs.mkdirSync(dir, { recursive: true });
    const file = path.join(dir, `${imageId}.${rep}.jsonl`);
    const lines: string[] = [];
    for (let t = 0; t <= durationMs; t += this.cfg.sampleIntervalMs) {
      lines.push(JSON.stringify(syntheticSample(t, durationMs, this.cfg.device)));
    }
    fs.writeFileSync(file, lines.join("\n") + "\n");
    return file;
  }

  /** Start sampling an in-flight job; returns a stop function that flushes. */
  track(upscalerId: string, imageId: string, rep: number): () => string {
    const start = Date.now();
    const samples: TelemetrySample[] = [syntheticSample(0, 1, this.cfg.device)];
    const timer = setInterval(() => {
      const t = Date.now() - start;
      samples.push(syntheticSample(t, Math.max(t, 1), this.cfg.device));
    }, this.cfg.sampleIntervalMs);
    return () => {
      clearInterval(timer);
      const dir = path.join(this.cfg.telemetryDir, upscalerId);
      fs.mkdirSync(dir, { recursive: true });
      const file = path.join(dir, `${imageId}.${rep}.jsonl`);
      fs.writeFileSync(file, samples.map((s) => JSON.stringify(s)).join("\n") + "\n");
      return file;
    };
  }
}
