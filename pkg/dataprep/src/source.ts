import { readFileSync } from "node:fs";

import Papa from "papaparse";

import type { RawBenchRow } from "./types.js";

const COST_SUFFIX = "|total_cost";
const PERF_SUFFIX = "|performance";

/**
 * Read benchmark rows from a CSV or JSONL export.
 *
 * Expected columns/fields: `prompt`, `eval_name`, optional `sample_id`, and
 * per model either `<model>|performance` or a bare `<model>` column for the
 * normalized score, plus `<model>|total_cost` for the USD cost. The model
 * list is inferred from the `|total_cost` columns.
 */
export function readSource(path: string, pool?: string[]): RawBenchRow[] {
  if (path === "auto") {
    const url = process.env.DATAPREP_SOURCE_URL;
    if (!url) {
      throw new Error(
        "--source auto needs DATAPREP_SOURCE_URL set to a CSV/JSONL export; " +
          "offline, pass a local file instead (export the benchmark dataframe " +
          "to .csv or .jsonl first)",
      );
    }
    throw new Error(`download from ${url} not attempted: run with a local file in this environment`);
  }
  const text = readFileSync(path, "utf-8");
  const objects = path.endsWith(".csv") ? parseCsv(text) : parseJsonl(text);
  if (objects.length === 0) throw new Error(`no rows found in ${path}`);
  const models = detectModels(objects[0], pool);
  return objects.map((obj, idx) => toRow(obj, models, idx));
}

function parseCsv(text: string): Record<string, unknown>[] {
  const parsed = Papa.parse<Record<string, unknown>>(text.trim(), {
    header: true,
    dynamicTyping: false,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new Error(`CSV parse error at row ${e.row}: ${e.message}`);
  }
  return parsed.data;
}

function parseJsonl(text: string): Record<string, unknown>[] {
  return text
    .split("\n")
    .filter((line) => line.trim())
    .map((line, i) => {
      try {
        return JSON.parse(line);
      } catch (err) {
        throw new Error(`malformed JSON at line ${i + 1}: ${err}`);
      }
    });
}

function detectModels(first: Record<string, unknown>, pool?: string[]): string[] {
  const models = Object.keys(first)
    .filter((k) => k.endsWith(COST_SUFFIX))
    .map((k) => k.slice(0, -COST_SUFFIX.length))
    .sort();
  if (models.length === 0) {
    throw new Error(`no '<model>${COST_SUFFIX}' columns found; is this a benchmark export?`);
  }
  if (!pool) return models;
  const missing = pool.filter((m) => !models.includes(m));
  if (missing.length > 0) {
    throw new Error(`requested models not in source: ${missing.join(", ")} (have: ${models.join(", ")})`);
  }
  return pool;
}

function num(value: unknown, what: string, idx: number): number {
  const n = typeof value === "number" ? value : Number(value);
  if (value === undefined || value === null || value === "" || !Number.isFinite(n)) {
    throw new Error(`row ${idx + 1}: missing or non-numeric ${what}`);
  }
  return n;
}

function toRow(obj: Record<string, unknown>, models: string[], idx: number): RawBenchRow {
  const prompt = obj["prompt"];
  if (typeof prompt !== "string" || prompt.length === 0) {
    throw new Error(`row ${idx + 1}: missing prompt`);
  }
  const quality: Record<string, number> = {};
  const cost: Record<string, number> = {};
  for (const m of models) {
    const qKey = `${m}${PERF_SUFFIX}` in obj ? `${m}${PERF_SUFFIX}` : m;
    const q = num(obj[qKey], `quality for ${m}`, idx);
    if (q < 0 || q > 1) {
      throw new Error(`row ${idx + 1}: quality for ${m} out of [0, 1]: ${q}`);
    }
    const c = num(obj[`${m}${COST_SUFFIX}`], `cost for ${m}`, idx);
    if (c < 0) {
      throw new Error(`row ${idx + 1}: negative cost for ${m}: ${c}`);
    }
    quality[m] = q;
    cost[m] = c;
  }
  return {
    id: String(obj["sample_id"] ?? `row${idx}`),
    prompt,
    group: String(obj["eval_name"] ?? ""),
    quality,
    cost,
  };
}
