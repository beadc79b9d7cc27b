#!/usr/bin/env node
import path from "node:path";

import { datasetUrl, downloadDataset, loadBeirDir } from "./beir.js";
import { loadTransformersEmbedder } from "./encoder.js";
import { DownloadFailure, ModelLoadFailure, UsageError } from "./errors.js";
import { generate } from "./generate.js";
import { parseFlags, USAGE } from "./spec.js";

export async function main(argv: string[]): Promise<number> {
  let spec;
  try {
    spec = parseFlags(argv);
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`embed-gen: ${err.message}`);
      console.error(USAGE);
      return 1;
    }
    throw err;
  }
  if (spec === "help") {
    console.log(USAGE);
    return 0;
  }

  try {
    let dir: string;
    let version: string;
    if (spec.datasetDir) {
      dir = spec.datasetDir;
      version = `local:${path.basename(spec.datasetDir)}`;
    } else {
      const cacheDir = spec.cacheDir ?? path.join(spec.outDir, "_download");
      console.log(`downloading ${datasetUrl(spec.dataset)}`);
      dir = await downloadDataset(spec.dataset, cacheDir);
      version = datasetUrl(spec.dataset);
    }
    const dataset = await loadBeirDir(dir, version);
    console.log(`loading model ${spec.model}`);
    const embedder = await loadTransformersEmbedder(spec.model);
    const meta = await generate(spec, dataset, embedder, console.log);
    console.log(
      `done: ${meta.corpus_count} documents, ${meta.query_count} queries, dim ${meta.dim}`,
    );
    return 0;
  } catch (err) {
    if (err instanceof DownloadFailure || err instanceof ModelLoadFailure) {
      console.error(`embed-gen: ${err.name}: ${err.message}`);
      return 2;
    }
    console.error(`embed-gen: unexpected failure: ${String(err)}`);
    return 3;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("embed-gen")) {
  // Broken optional natives (e.g. sharp) can throw again from detached
  // promises after the failure has already been reported; keep the
  // documented exit code instead of letting Node crash the process.
  const suppressLate = (err: unknown) => {
    const first = String(err instanceof Error ? err.message : err).split("\n", 1)[0];
    console.error(`embed-gen: suppressed late error from a dependency: ${first}`);
    if (process.exitCode === undefined || process.exitCode === 0) process.exitCode = 3;
  };
  process.on("uncaughtException", suppressLate);
  process.on("unhandledRejection", suppressLate);
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
