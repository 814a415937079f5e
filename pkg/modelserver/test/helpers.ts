import { execFile, execFileSync } from "node:child_process";
import { promisify } from "node:util";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import type { AddressInfo } from "node:net";
import type { Server } from "node:http";

import { createApp, type BackendConfig } from "../src/server.js";

export interface TestServer {
  url: string;
  close: () => Promise<void>;
}

export async function startServer(config: BackendConfig = { mode: "mock" }): Promise<TestServer> {
  const app = createApp(config);
  const server: Server = await new Promise((resolve) => {
    const s = app.listen(0, () => resolve(s));
  });
  const { port } = server.address() as AddressInfo;
  return {
    url: `http://127.0.0.1:${port}`,
    close: () => new Promise((resolve) => server.close(() => resolve())),
  };
}

export async function post(url: string, body: unknown): Promise<{ status: number; body: any }> {
  const res = await fetch(url, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  return { status: res.status, body: await res.json().catch(() => null) };
}

export function tmpDir(prefix: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix));
}

/** Run the engine's CLI; throws on nonzero exit. */
export function artpress(...args: string[]): string {
  return execFileSync("artpress", args, { encoding: "utf-8" });
}

/** Async variant: required when the CLI must call back into an in-process
 * server, which a sync spawn would deadlock by blocking the event loop. */
export async function artpressAsync(...args: string[]): Promise<string> {
  const { stdout } = await promisify(execFile)("artpress", args, { encoding: "utf-8" });
  return stdout;
}

export function python(code: string): string {
  return execFileSync("python3", ["-c", code], { encoding: "utf-8" });
}
