import { parseArgs } from "node:util";

import { createApp, type BackendConfig } from "./server.js";
import { TelemetrySampler } from "./telemetry.js";

function main(): void {
  const { values } = parseArgs({
    options: {
      mode: { type: "string", default: "mock" },
      port: { type: "string", default: "8077" },
      "telemetry-dir": { type: "string" },
      "sample-interval-ms": { type: "string", default: "100" },
    },
  });

  const mode = values.mode as BackendConfig["mode"];
  if (mode !== "mock" && mode !== "real") {
    console.error(`unknown mode ${JSON.stringify(values.mode)}`);
    process.exit(2);
  }
  let app;
  try {
    app = createApp({ mode });
  } catch (err) {
    console.error(String(err));
    process.exit(2);
  }
  if (values["telemetry-dir"]) {
    // constructed eagerly so a bad interval fails at startup
    new TelemetrySampler({
      telemetryDir: values["telemetry-dir"],
      sampleIntervalMs: Number(values["sample-interval-ms"]),
    });
  }
  const port = Number(values.port);
  const server = app.listen(port, () => {
    console.log(`modelserver (${mode}) listening on :${port}`);
  });
  server.on("error", (err) => {
    console.error(String(err));
    process.exit(1);
  });
}

main();
