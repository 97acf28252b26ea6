#!/usr/bin/env node
import { parseArgs } from "node:util";

import { prepare } from "./prepare.js";
import type { Backend, Pooling } from "./types.js";

const USAGE = `usage: dataprep prepare --source <path|auto> --out <dir>
                [--pool name1,name2,...] [--pooling mean|cls]
                [--backend distilbert|hashed] [--batch-size N] [--name base]

Reads a benchmark export (CSV or JSONL with per-model '<model>|total_cost'
and quality columns), embeds every prompt, and writes the canonical dataset
file plus pool manifest consumed by the routing engine.`;

async function main() {
  const [command, ...rest] = process.argv.slice(2);
  if (command !== "prepare") {
    console.error(USAGE);
    process.exit(command === "--help" || command === "-h" ? 0 : 2);
  }
  const { values } = parseArgs({
    args: rest,
    options: {
      source: { type: "string" },
      out: { type: "string" },
      pool: { type: "string" },
      pooling: { type: "string", default: "mean" },
      backend: { type: "string", default: "distilbert" },
      "batch-size": { type: "string", default: "32" },
      name: { type: "string", default: "routerbench" },
    },
  });
  if (!values.source || !values.out) {
    console.error(USAGE);
    process.exit(2);
  }
  if (values.pooling !== "mean" && values.pooling !== "cls") {
    console.error(`unknown pooling ${values.pooling}; expected mean or cls`);
    process.exit(2);
  }
  if (values.backend !== "distilbert" && values.backend !== "hashed") {
    console.error(`unknown backend ${values.backend}; expected distilbert or hashed`);
    process.exit(2);
  }
  await prepare({
    source: values.source,
    out: values.out,
    pool: values.pool ? values.pool.split(",").map((s) => s.trim()) : undefined,
    pooling: values.pooling as Pooling,
    backend: values.backend as Backend,
    batchSize: Number(values["batch-size"]),
    name: values.name,
  });
}

main().catch((err) => {
  console.error(`error: ${err instanceof Error ? err.message : err}`);
  process.exit(1);
});
