/** Wire types mirroring the backend JSON contracts. */

export interface TableDoc {
  table_id?: string;
  columns: string[];
  rows: string[][];
}

export interface TopkEntry {
  token: string;
  probability: number;
}

export interface DisambiguationEntry {
  token: string;
  status: "in_vocab" | "mapped" | "dropped";
  mapped_to?: string;
  similarity?: number;
  best_similarity?: number | null;
}

export interface AskResponse {
  answer: string;
  confidence: number;
  distribution_topk: TopkEntry[];
  /** hops x slots; column i lines up with triples[i]. */
  attention: number[][];
  triples: string[][];
  disambiguation: DisambiguationEntry[];
}

export interface TestQuestionEntry {
  question: string;
  perturbation: string;
  expected: string;
  adequate: boolean;
  table: TableDoc;
}

export interface HealthInfo {
  status: string;
  model_version: string | null;
  vocab_size: number | null;
  hops: number | null;
}

export interface ApiErrorBody {
  error: { code: string; message: string };
}
