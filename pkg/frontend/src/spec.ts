import { UsageError } from "./errors.js";

export const DEFAULT_DATASET = "scifact";
export const DEFAULT_MODEL = "sentence-transformers/all-MiniLM-L6-v2";
export const DEFAULT_BATCH_SIZE = 32;

export type GenSpec = {
  dataset: string;
  model: string;
  outDir: string;
  batchSize: number;
  normalize: boolean;
  /** Use an already-extracted BEIR directory instead of downloading. */
  datasetDir?: string;
  /** Where downloaded archives are extracted (default: <outDir>/_download). */
  cacheDir?: string;
};

export const USAGE = `usage: embed-gen [options]

Download a BEIR dataset, encode its corpus and test queries with a
sentence-embedding model, and write corpus.fvecs/.ids, queries.fvecs/.ids,
qrels.tsv, and meta.json into the output directory.

options:
  --dataset NAME      BEIR dataset name (default: ${DEFAULT_DATASET})
  --model NAME        sentence-embedding model (default: ${DEFAULT_MODEL})
  --out DIR           output directory (default: embeddings)
  --batch-size N      texts encoded per model call (default: ${DEFAULT_BATCH_SIZE})
  --normalize         L2-normalize embeddings before writing (default: off)
  --dataset-dir DIR   use an extracted BEIR directory instead of downloading
  --cache-dir DIR     where downloads are extracted (default: <out>/_download)
  --help              show this message
`;

export function parseFlags(argv: string[]): GenSpec | "help" {
  const spec: GenSpec = {
    dataset: DEFAULT_DATASET,
    model: DEFAULT_MODEL,
    outDir: "embeddings",
    batchSize: DEFAULT_BATCH_SIZE,
    normalize: false,
  };
  let i = 0;
  const next = (flag: string): string => {
    if (i + 1 >= argv.length) throw new UsageError(`${flag} requires a value`);
    i += 1;
    return argv[i];
  };
  for (; i < argv.length; i += 1) {
    const arg = argv[i];
    switch (arg) {
      case "--dataset":
        spec.dataset = next(arg);
        break;
      case "--model":
        spec.model = next(arg);
        break;
      case "--out":
        spec.outDir = next(arg);
        break;
      case "--batch-size": {
        const raw = next(arg);
        const parsed = Number(raw);
        if (!Number.isInteger(parsed) || parsed < 1) {
          throw new UsageError(`--batch-size must be a positive integer, got ${raw}`);
        }
        spec.batchSize = parsed;
        break;
      }
      case "--normalize":
        spec.normalize = true;
        break;
      case "--dataset-dir":
        spec.datasetDir = next(arg);
        break;
      case "--cache-dir":
        spec.cacheDir = next(arg);
        break;
      case "--help":
      case "-h":
        return "help";
      default:
        throw new UsageError(`unknown argument: ${arg}`);
    }
  }
  if (!spec.dataset) throw new UsageError("--dataset must not be empty");
  if (!spec.model) throw new UsageError("--model must not be empty");
  if (!spec.outDir) throw new UsageError("--out must not be empty");
  return spec;
}
