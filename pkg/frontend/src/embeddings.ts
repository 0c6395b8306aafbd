export interface Embedder {
  readonly name: string;
  readonly dim: number;
  embed(texts: string[]): Promise<number[][]>;
}

function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

function tokenize(text: string): string[] {
  return text
    .toLowerCase()
    .split(/[^a-z0-9\\]+/)
    .filter((t) => t.length > 0);
}

/**
 * Deterministic local embedding: hashed bag of unigrams and bigrams with
 * log-scaled counts, L2-normalized. No model download, no network; good
 * enough for exact and near-exact retrieval on a single document base.
 */
export class LocalHashEmbedder implements Embedder {
  readonly name = "local-hash-v1";
  readonly dim: number;

  constructor(dim = 512) {
    this.dim = dim;
  }

  embedOne(text: string): number[] {
    const counts = new Map<number, number>();
    const tokens = tokenize(text);
    const add = (term: string) => {
      const h = fnv1a(term);
      const bucket = h % this.dim;
      const sign = (h & 0x80000000) !== 0 ? -1 : 1;
      counts.set(bucket, (counts.get(bucket) ?? 0) + sign);
    };
    for (let i = 0; i < tokens.length; i++) {
      add(tokens[i]);
      if (i + 1 < tokens.length) add(tokens[i] + " " + tokens[i + 1]);
    }
    const vector = new Array<number>(this.dim).fill(0);
    for (const [bucket, count] of counts) {
      const magnitude = Math.log1p(Math.abs(count));
      vector[bucket] = count >= 0 ? magnitude : -magnitude;
    }
    const norm = Math.sqrt(vector.reduce((s, v) => s + v * v, 0));
    if (norm > 0) {
      for (let i = 0; i < vector.length; i++) vector[i] /= norm;
    }
    return vector;
  }

  async embed(texts: string[]): Promise<number[][]> {
    return texts.map((t) => this.embedOne(t));
  }
}

/** Remote embeddings via the OpenAI API; requires OPENAI_API_KEY. */
export class OpenAIEmbedder implements Embedder {
  readonly name = "openai-text-embedding-3-small";
  readonly dim = 1536;
  private readonly model = "text-embedding-3-small";

  async embed(texts: string[]): Promise<number[][]> {
    const key = process.env.OPENAI_API_KEY;
    if (!key) {
      throw new Error("OPENAI_API_KEY is not set; cannot use --openai embeddings");
    }
    const response = await fetch("https://api.openai.com/v1/embeddings", {
      method: "POST",
      headers: {
        "Content-Type": "application/json",
        Authorization: `Bearer ${key}`,
      },
      body: JSON.stringify({ model: this.model, input: texts }),
    });
    if (!response.ok) {
      throw new Error(`embedding request failed: ${response.status} ${await response.text()}`);
    }
    const data = (await response.json()) as { data: { index: number; embedding: number[] }[] };
    return data.data.sort((a, b) => a.index - b.index).map((d) => d.embedding);
  }
}

export function cosineSimilarity(a: number[], b: number[]): number {
  let dot = 0;
  let na = 0;
  let nb = 0;
  const n = Math.min(a.length, b.length);
  for (let i = 0; i < n; i++) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na === 0 || nb === 0) return 0;
  return dot / (Math.sqrt(na) * Math.sqrt(nb));
}
