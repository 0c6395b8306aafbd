import { existsSync, mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

export interface StoredPayload {
  kind: string;
  heading_path: string[];
  heading_path_joined: string;
  source_file: string;
  start_line: number;
  end_line: number;
  labels: string[];
  markdown: string;
  metadata: Record<string, unknown>;
}

export interface StoredRecord {
  id: string;
  vector: number[];
  hash: string;
  payload: StoredPayload;
}

export interface Collection {
  embedder: string;
  dim: number;
  records: Record<string, StoredRecord>;
}

export function emptyCollection(embedder: string, dim: number): Collection {
  return { embedder, dim, records: {} };
}

export function loadCollection(path: string): Collection | null {
  if (!existsSync(path)) return null;
  const data = JSON.parse(readFileSync(path, "utf-8")) as Collection;
  if (!data || typeof data !== "object" || typeof data.records !== "object") {
    throw new Error(`not a collection file: ${path}`);
  }
  return data;
}

export function saveCollection(path: string, collection: Collection): void {
  const dir = dirname(path);
  if (dir && dir !== "." && !existsSync(dir)) mkdirSync(dir, { recursive: true });
  writeFileSync(path, JSON.stringify(collection), "utf-8");
}

export function recordCount(collection: Collection): number {
  return Object.keys(collection.records).length;
}
