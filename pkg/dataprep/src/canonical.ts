import { mkdirSync, writeFileSync } from "node:fs";
import { dirname, join } from "node:path";

import type { CanonicalRecord } from "./types.js";

/**
 * Emit the canonical dataset: one JSON object per line plus a sidecar pool
 * manifest. JSON number serialization is shortest-round-trip, so consumers
 * recover the exact float64 values.
 */
export function writeCanonical(
  records: CanonicalRecord[],
  pool: string[],
  dim: number,
  outDir: string,
  name = "routerbench",
): { dataPath: string; manifestPath: string } {
  mkdirSync(outDir, { recursive: true });
  const dataPath = join(outDir, `${name}.jsonl`);
  const manifestPath = join(outDir, `${name}.manifest.json`);
  const lines = records.map((r) =>
    JSON.stringify({
      id: r.id,
      group: r.group,
      embedding: r.embedding,
      quality: orderKeys(r.quality, pool),
      cost: orderKeys(r.cost, pool),
    }),
  );
  writeFileSync(dataPath, lines.join("\n") + "\n", "utf-8");
  writeFileSync(
    manifestPath,
    JSON.stringify({ pool, embedding_dim: dim }, null, 2) + "\n",
    "utf-8",
  );
  return { dataPath, manifestPath };
}

function orderKeys(map: Record<string, number>, pool: string[]): Record<string, number> {
  const out: Record<string, number> = {};
  for (const m of pool) out[m] = map[m];
  return out;
}

export function validateRecords(records: CanonicalRecord[], pool: string[], dim: number): void {
  records.forEach((r, idx) => {
    if (r.embedding.length !== dim) {
      throw new Error(`record ${idx}: embedding has ${r.embedding.length} entries, expected ${dim}`);
    }
    if (!r.embedding.every(Number.isFinite)) {
      throw new Error(`record ${idx}: non-finite embedding entries`);
    }
    const norm = Math.sqrt(r.embedding.reduce((s, v) => s + v * v, 0));
    if (Math.abs(norm - 1) > 1e-6) {
      throw new Error(`record ${idx}: embedding norm ${norm} is not 1 within 1e-6`);
    }
    for (const m of pool) {
      const q = r.quality[m];
      const c = r.cost[m];
      if (!(Number.isFinite(q) && q >= 0 && q <= 1)) {
        throw new Error(`record ${idx}: quality out of range for ${m}`);
      }
      if (!(Number.isFinite(c) && c >= 0)) {
        throw new Error(`record ${idx}: invalid cost for ${m}`);
      }
    }
  });
}
