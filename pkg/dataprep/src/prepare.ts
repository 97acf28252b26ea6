import { embedUnique, makeEmbedder } from "./embed.js";
import { readSource } from "./source.js";
import { validateRecords, writeCanonical } from "./canonical.js";
import type { Backend, CanonicalRecord, Pooling } from "./types.js";

export interface PrepareOptions {
  source: string;
  out: string;
  pool?: string[];
  pooling?: Pooling;
  backend?: Backend;
  batchSize?: number;
  name?: string;
}

export async function prepare(opts: PrepareOptions) {
  const pooling = opts.pooling ?? "mean";
  const backend = opts.backend ?? "distilbert";
  const rows = readSource(opts.source, opts.pool);
  const pool = Object.keys(rows[0].quality).sort();
  console.error(`read ${rows.length} rows, ${pool.length} models: ${pool.join(", ")}`);

  const embedder = makeEmbedder(backend, pooling);
  const embeddings = await embedUnique(
    embedder,
    rows.map((r) => r.prompt),
    opts.batchSize ?? 32,
    (done, total) => {
      if (done % 512 < 32 || done === total) console.error(`embedded ${done}/${total} prompts`);
    },
  );

  const records: CanonicalRecord[] = rows.map((r, i) => ({
    id: r.id,
    group: r.group,
    embedding: embeddings[i],
    quality: r.quality,
    cost: r.cost,
  }));
  validateRecords(records, pool, embedder.dim);
  const paths = writeCanonical(records, pool, embedder.dim, opts.out, opts.name);
  console.error(`wrote ${paths.dataPath} and ${paths.manifestPath} (${embedder.name})`);
  return paths;
}
