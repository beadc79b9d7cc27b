import crypto from "node:crypto";
import fs from "node:fs/promises";
import os from "node:os";
import path from "node:path";

import { Embedder } from "../src/encoder.js";

/** Deterministic embedder: vector components derive from sha256(model|dim|text). */
export function fakeEmbedder(dim: number, model = "fake-hash-encoder"): Embedder {
  return {
    model,
    dim,
    async encode(texts: string[]): Promise<Float32Array[]> {
      return texts.map((text) => {
        const vec = new Float32Array(dim);
        for (let j = 0; j < dim; j += 1) {
          const digest = crypto.createHash("sha256").update(`${model}|${j}|${text}`).digest();
          vec[j] = digest.readUInt32LE(0) / 0xffffffff - 0.5;
        }
        return vec;
      });
    },
  };
}

export async function makeTmpDir(prefix: string): Promise<string> {
  return fs.mkdtemp(path.join(os.tmpdir(), prefix));
}

/** Write a five-document, four-query BEIR-layout fixture; three queries are judged. */
export async function writeBeirFixture(dir: string): Promise<void> {
  const corpus = [
    { _id: "doc1", title: "Alpha", text: "the first scientific abstract" },
    { _id: "doc2", title: "", text: "a second abstract with no title" },
    { _id: "doc3", title: "Gamma", text: "third text body" },
    { _id: "doc4", title: "Delta", text: "fourth text body" },
    { _id: "doc5", title: "Epsilon", text: "fifth text body" },
  ];
  const queries = [
    { _id: "q1", text: "first question" },
    { _id: "q2", text: "second question" },
    { _id: "q3", text: "unjudged question" },
    { _id: "q4", text: "fourth question" },
  ];
  const qrels = [
    "query-id\tcorpus-id\tscore",
    "q2\tdoc3\t1",
    "q1\tdoc1\t1",
    "q1\tdoc4\t2",
    "q4\tdoc5\t1",
  ];
  await fs.mkdir(path.join(dir, "qrels"), { recursive: true });
  await fs.writeFile(
    path.join(dir, "corpus.jsonl"),
    corpus.map((row) => JSON.stringify(row)).join("\n") + "\n",
  );
  await fs.writeFile(
    path.join(dir, "queries.jsonl"),
    queries.map((row) => JSON.stringify(row)).join("\n") + "\n",
  );
  await fs.writeFile(path.join(dir, "qrels", "test.tsv"), qrels.join("\n") + "\n");
}
