// BEIR dataset access: download + extract an official archive, or read an
// already-extracted directory (corpus.jsonl, queries.jsonl, qrels/test.tsv).

import fs from "node:fs/promises";
import path from "node:path";

import { DownloadFailure } from "./errors.js";

const BEIR_BASE_URL = "https://public.ukp.informatik.tu-darmstadt.de/thakur/BEIR/datasets";

export type BeirDoc = { id: string; title: string; text: string };
export type BeirQuery = { id: string; text: string };
export type QrelRow = { queryId: string; corpusId: string; score: number };

export type BeirDataset = {
  corpus: BeirDoc[];
  queries: BeirQuery[];
  qrels: QrelRow[];
  version: string;
};

function parseJsonlLines(raw: string, file: string): Record<string, unknown>[] {
  return raw
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line, index) => {
      try {
        return JSON.parse(line) as Record<string, unknown>;
      } catch {
        throw new DownloadFailure(`${file}: line ${index + 1} is not valid JSON`);
      }
    });
}

function asString(value: unknown): string {
  return typeof value === "string" ? value : value == null ? "" : String(value);
}

export async function loadBeirDir(dir: string, version: string): Promise<BeirDataset> {
  let corpusRaw: string;
  let queriesRaw: string;
  let qrelsRaw: string;
  try {
    corpusRaw = await fs.readFile(path.join(dir, "corpus.jsonl"), "utf-8");
    queriesRaw = await fs.readFile(path.join(dir, "queries.jsonl"), "utf-8");
    qrelsRaw = await fs.readFile(path.join(dir, "qrels", "test.tsv"), "utf-8");
  } catch (err) {
    throw new DownloadFailure(`not a BEIR dataset directory: ${dir} (${String(err)})`);
  }

  const corpus: BeirDoc[] = parseJsonlLines(corpusRaw, "corpus.jsonl").map((row) => ({
    id: asString(row._id),
    title: asString(row.title),
    text: asString(row.text),
  }));
  const queries: BeirQuery[] = parseJsonlLines(queriesRaw, "queries.jsonl").map((row) => ({
    id: asString(row._id),
    text: asString(row.text),
  }));

  const lines = qrelsRaw.split("\n").filter((line) => line.trim().length > 0);
  if (lines.length === 0 || lines[0].split("\t").slice(0, 2).join("\t") !== "query-id\tcorpus-id") {
    throw new DownloadFailure(`qrels/test.tsv in ${dir} lacks the BEIR header`);
  }
  const qrels: QrelRow[] = lines.slice(1).map((line, index) => {
    const fields = line.split("\t");
    const score = Number(fields[2]);
    if (fields.length !== 3 || !Number.isInteger(score)) {
      throw new DownloadFailure(`qrels/test.tsv: malformed line ${index + 2}`);
    }
    return { queryId: fields[0], corpusId: fields[1], score };
  });
  if (corpus.length === 0) throw new DownloadFailure(`corpus.jsonl in ${dir} is empty`);
  return { corpus, queries, qrels, version };
}

export async function downloadDataset(name: string, cacheDir: string): Promise<string> {
  const url = `${BEIR_BASE_URL}/${name}.zip`;
  const extracted = path.join(cacheDir, name);
  try {
    await fs.access(path.join(extracted, "corpus.jsonl"));
    return extracted; // already downloaded
  } catch {
    // fall through to fetch
  }
  let payload: ArrayBuffer;
  try {
    const response = await fetch(url);
    if (!response.ok) throw new Error(`HTTP ${response.status}`);
    payload = await response.arrayBuffer();
  } catch (err) {
    throw new DownloadFailure(`cannot download ${url}: ${String(err)}`);
  }
  const { default: AdmZip } = await import("adm-zip");
  await fs.mkdir(cacheDir, { recursive: true });
  try {
    new AdmZip(Buffer.from(payload)).extractAllTo(cacheDir, true);
    await fs.access(path.join(extracted, "corpus.jsonl"));
  } catch (err) {
    throw new DownloadFailure(`cannot extract ${url}: ${String(err)}`);
  }
  return extracted;
}

export function datasetUrl(name: string): string {
  return `${BEIR_BASE_URL}/${name}.zip`;
}
