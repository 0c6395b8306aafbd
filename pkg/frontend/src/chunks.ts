import { readFileSync } from "node:fs";

export interface ChunkRecord {
  id: string;
  kind: string;
  heading_path: string[];
  source_file: string;
  start_line: number;
  end_line: number;
  labels: string[];
  markdown: string;
  embedding_text: string;
  metadata: Record<string, unknown>;
}

export interface ChunkFile {
  chunks: ChunkRecord[];
  skipped: number;
}

export function parseChunkLine(line: string): ChunkRecord | null {
  let parsed: unknown;
  try {
    parsed = JSON.parse(line);
  } catch {
    return null;
  }
  const c = parsed as Partial<ChunkRecord>;
  if (
    typeof c.id !== "string" ||
    typeof c.kind !== "string" ||
    !Array.isArray(c.heading_path) ||
    typeof c.embedding_text !== "string" ||
    typeof c.markdown !== "string"
  ) {
    return null;
  }
  return {
    id: c.id,
    kind: c.kind,
    heading_path: c.heading_path.map(String),
    source_file: String(c.source_file ?? ""),
    start_line: Number(c.start_line ?? 0),
    end_line: Number(c.end_line ?? 0),
    labels: Array.isArray(c.labels) ? c.labels.map(String) : [],
    markdown: c.markdown,
    embedding_text: c.embedding_text,
    metadata: (c.metadata ?? {}) as Record<string, unknown>,
  };
}

/** Read a chunks.jsonl file, skipping (and counting) malformed lines. */
export function readChunksFile(path: string): ChunkFile {
  const chunks: ChunkRecord[] = [];
  let skipped = 0;
  const text = readFileSync(path, "utf-8");
  for (const line of text.split("\n")) {
    if (!line.trim()) continue;
    const chunk = parseChunkLine(line);
    if (chunk === null) {
      skipped += 1;
      console.error(`warning: skipping malformed chunk line (${line.slice(0, 60)}...)`);
      continue;
    }
    chunks.push(chunk);
  }
  return { chunks, skipped };
}
