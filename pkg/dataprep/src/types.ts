export interface RawBenchRow {
  id: string;
  prompt: string;
  group: string; // source dataset tag, e.g. "mmlu"
  quality: Record<string, number>; // model -> score in [0, 1]
  cost: Record<string, number>; // model -> USD, >= 0
}

export interface CanonicalRecord {
  id: string;
  group: string;
  embedding: number[];
  quality: Record<string, number>;
  cost: Record<string, number>;
}

export type Pooling = "mean" | "cls";
export type Backend = "distilbert" | "hashed";

export interface Embedder {
  readonly dim: number;
  readonly name: string;
  embed(texts: string[]): Promise<number[][]>;
}
