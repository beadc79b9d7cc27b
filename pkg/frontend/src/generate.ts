import fs from "node:fs/promises";
import path from "node:path";

import { BeirDataset, BeirDoc } from "./beir.js";
import { Embedder, normalizeVectors } from "./encoder.js";
import { ModelLoadFailure } from "./errors.js";
import { writeFvecs } from "./fvecs.js";
import { GenSpec } from "./spec.js";

export type Meta = {
  dataset: string;
  dataset_version: string;
  model: string;
  dim: number;
  normalized: boolean;
  corpus_count: number;
  query_count: number;
};

/** BEIR convention: a document encodes as its title and body joined by a space. */
export function docText(doc: BeirDoc): string {
  return doc.title ? `${doc.title} ${doc.text}` : doc.text;
}

async function encodeAll(
  embedder: Embedder,
  texts: string[],
  batchSize: number,
  log: (line: string) => void,
  label: string,
): Promise<Float32Array[]> {
  const vectors: Float32Array[] = [];
  for (let start = 0; start < texts.length; start += batchSize) {
    const batch = texts.slice(start, start + batchSize);
    const encoded = await embedder.encode(batch);
    if (encoded.length !== batch.length) {
      throw new ModelLoadFailure(
        `model returned ${encoded.length} vectors for a batch of ${batch.length}`,
      );
    }
    for (const vec of encoded) {
      if (vec.length !== embedder.dim) {
        throw new ModelLoadFailure(
          `model emitted a ${vec.length}-dim vector, declared width is ${embedder.dim}`,
        );
      }
      vectors.push(vec);
    }
    const done = Math.min(start + batchSize, texts.length);
    if (done === texts.length || (start / batchSize) % 20 === 0) {
      log(`  ${label}: ${done}/${texts.length}`);
    }
  }
  return vectors;
}

function qrelsTsv(dataset: BeirDataset): string {
  const rows = [...dataset.qrels].sort((a, b) =>
    a.queryId === b.queryId ? a.corpusId.localeCompare(b.corpusId) : a.queryId.localeCompare(b.queryId),
  );
  const lines = ["query-id\tcorpus-id\tscore"];
  for (const row of rows) lines.push(`${row.queryId}\t${row.corpusId}\t${row.score}`);
  return lines.map((line) => line + "\n").join("");
}

export async function generate(
  spec: GenSpec,
  dataset: BeirDataset,
  embedder: Embedder,
  log: (line: string) => void = () => {},
): Promise<Meta> {
  const judged = new Set(dataset.qrels.map((row) => row.queryId));
  const queries = dataset.queries.filter((query) => judged.has(query.id));

  log(`encoding ${dataset.corpus.length} documents with ${embedder.model} (dim ${embedder.dim})`);
  const corpusVectors = await encodeAll(
    embedder,
    dataset.corpus.map(docText),
    spec.batchSize,
    log,
    "corpus",
  );
  log(`encoding ${queries.length} judged queries`);
  const queryVectors = await encodeAll(
    embedder,
    queries.map((query) => query.text),
    spec.batchSize,
    log,
    "queries",
  );
  if (spec.normalize) {
    normalizeVectors(corpusVectors);
    normalizeVectors(queryVectors);
  }

  const out = spec.outDir;
  await fs.mkdir(out, { recursive: true });
  await writeFvecs(
    path.join(out, "corpus.fvecs"),
    path.join(out, "corpus.ids"),
    dataset.corpus.map((doc) => doc.id),
    corpusVectors,
    embedder.dim,
  );
  await writeFvecs(
    path.join(out, "queries.fvecs"),
    path.join(out, "queries.ids"),
    queries.map((query) => query.id),
    queryVectors,
    embedder.dim,
  );
  await fs.writeFile(path.join(out, "qrels.tsv"), qrelsTsv(dataset), "utf-8");

  const meta: Meta = {
    dataset: spec.dataset,
    dataset_version: dataset.version,
    model: embedder.model,
    dim: embedder.dim,
    normalized: spec.normalize,
    corpus_count: dataset.corpus.length,
    query_count: queries.length,
  };
  await fs.writeFile(path.join(out, "meta.json"), JSON.stringify(meta, null, 2) + "\n", "utf-8");
  log(`wrote ${out}/{corpus,queries}.{fvecs,ids}, qrels.tsv, meta.json`);
  return meta;
}
