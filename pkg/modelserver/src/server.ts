import express, { type Express } from "express";
import { z } from "zod";

import { embedText } from "./embed.js";
import { decodePng, encodePng, seededNoise, upscaleNearest } from "./raster.js";

export interface BackendConfig {
  mode: "mock" | "real";
  device?: string;
  modelIds?: Partial<Record<"chat" | "embed" | "generate" | "upscale", string>>;
}

export const MIN_GEN_SIDE = 64;
export const MAX_GEN_SIDE = 2048;

const chatSchema = z.object({
  model: z.string(),
  messages: z
    .array(z.object({ role: z.enum(["system", "user", "assistant"]), content: z.string() }))
    .min(1),
  temperature: z.number().min(0).max(2).optional(),
  max_tokens: z.number().int().positive().optional(),
  seed: z.number().int().nonnegative().optional(),
});

const embedSchema = z.object({ texts: z.array(z.string()).min(1) });

const generateSchema = z.object({
  positive: z.string().min(1),
  negative: z.string(),
  width: z.number().int().min(MIN_GEN_SIDE).max(MAX_GEN_SIDE),
  height: z.number().int().min(MIN_GEN_SIDE).max(MAX_GEN_SIDE),
  seed: z.number().int().nonnegative(),
});

const upscaleSchema = z.object({
  png_b64: z.string().min(1),
  scale: z.number().positive(),
});

export function createApp(config: BackendConfig): Express {
  if (config.mode === "real" && !config.modelIds) {
    throw new Error("real mode requires model ids");
  }
  const app = express();
  app.use(express.json({ limit: "256mb" }));

  const notImplemented = (res: express.Response) =>
    res.status(501).json({ error: "real mode is not wired to models in this build" });

  app.post("/v1/chat", (req, res) => {
    const parsed = chatSchema.safeParse(req.body);
    if (!parsed.success) {
      return res.status(422).json({ error: parsed.error.message });
    }
    if (config.mode === "real") return notImplemented(res);
    // deterministic echo: last user message, or the last message at all
    const msgs = parsed.data.messages;
    const users = msgs.filter((m) => m.role === "user");
    const content = (users.length ? users[users.length - 1] : msgs[msgs.length - 1]).content;
    res.json({
      content,
      usage: { prompt_tokens: msgs.reduce((s, m) => s + m.content.length, 0), completion_tokens: content.length },
    });
  });

  app.post("/v1/embed", (req, res) => {
    const parsed = embedSchema.safeParse(req.body);
    if (!parsed.success) {
      return res.status(422).json({ error: parsed.error.message });
    }
    try {
      res.json({ vectors: parsed.data.texts.map((t) => embedText(t)) });
    } catch (err) {
      res.status(422).json({ error: String(err) });
    }
  });

  app.post("/generate", (req, res) => {
    const parsed = generateSchema.safeParse(req.body);
    if (!parsed.success) {
      return res.status(422).json({ error: parsed.error.message });
    }
    if (config.mode === "real") return notImplemented(res);
    const { width, height, seed } = parsed.data;
    const png = encodePng(seededNoise(width, height, seed));
    res.json({ png_b64: png.toString("base64"), model_id: "mock-generator" });
  });

  app.post("/upscale", (req, res) => {
    const parsed = upscaleSchema.safeParse(req.body);
    if (!parsed.success) {
      return res.status(422).json({ error: parsed.error.message });
    }
    if (config.mode === "real") return notImplemented(res);
    if (!Number.isInteger(parsed.data.scale)) {
      return res.status(422).json({ error: "mock upscaler supports integer scales only" });
    }
    let raster;
    try {
      raster = decodePng(Buffer.from(parsed.data.png_b64, "base64"));
    } catch (err) {
      return res.status(422).json({ error: `bad PNG: ${String(err)}` });
    }
    const out = upscaleNearest(raster, parsed.data.scale);
    res.json({ png_b64: encodePng(out).toString("base64"), model_id: "mock-nearest" });
  });

  app.get("/healthz", (_req, res) => {
    res.json({ ok: true, mode: config.mode });
  });

  return app;
}
