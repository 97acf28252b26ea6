import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export const MODELS = ["gpt-4-1106-preview", "mistralai/mistral-7b-chat"];

export interface FixtureRow {
  sample_id: string;
  prompt: string;
  eval_name: string;
  quality: number[];
  cost: number[];
}

export const ROWS: FixtureRow[] = [
  { sample_id: "mmlu.0", prompt: "What is the capital of France?", eval_name: "mmlu", quality: [1, 0], cost: [0.012, 0.0002] },
  { sample_id: "mmlu.1", prompt: "Pick the largest prime below ten.", eval_name: "mmlu", quality: [1, 1], cost: [0.011, 0.00021] },
  { sample_id: "gsm8k.0", prompt: "Tom has 3 apples and buys 4 more. How many now?", eval_name: "gsm8k", quality: [1, 0.5], cost: [0.02, 0.0004] },
  { sample_id: "gsm8k.1", prompt: "What is the capital of France?", eval_name: "gsm8k", quality: [0, 1], cost: [0.018, 0.0003] },
];

export function csvFixture(rows: FixtureRow[] = ROWS): string {
  const dir = mkdtempSync(join(tmpdir(), "dataprep-"));
  const header = ["sample_id", "prompt", "eval_name"];
  for (const m of MODELS) header.push(`${m}|performance`, `${m}|total_cost`);
  const lines = [header.map(quote).join(",")];
  for (const r of rows) {
    const cells = [r.sample_id, r.prompt, r.eval_name];
    MODELS.forEach((_, i) => cells.push(String(r.quality[i]), String(r.cost[i])));
    lines.push(cells.map(quote).join(","));
  }
  const path = join(dir, "mini.csv");
  writeFileSync(path, lines.join("\n") + "\n");
  return path;
}

export function jsonlFixture(rows: FixtureRow[] = ROWS): string {
  const dir = mkdtempSync(join(tmpdir(), "dataprep-"));
  const lines = rows.map((r) => {
    const obj: Record<string, unknown> = {
      sample_id: r.sample_id,
      prompt: r.prompt,
      eval_name: r.eval_name,
    };
    MODELS.forEach((m, i) => {
      obj[m] = r.quality[i]; // bare quality column variant
      obj[`${m}|total_cost`] = r.cost[i];
    });
    return JSON.stringify(obj);
  });
  const path = join(dir, "mini.jsonl");
  writeFileSync(path, lines.join("\n") + "\n");
  return path;
}

function quote(cell: string): string {
  return /[",\n]/.test(cell) ? `"${cell.replace(/"/g, '""')}"` : cell;
}
