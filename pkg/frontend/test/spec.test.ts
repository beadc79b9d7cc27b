import { describe, expect, it } from "vitest";

import { UsageError } from "../src/errors.js";
import { DEFAULT_BATCH_SIZE, DEFAULT_DATASET, DEFAULT_MODEL, parseFlags } from "../src/spec.js";

describe("parseFlags", () => {
  it("applies the documented defaults", () => {
    const spec = parseFlags([]);
    expect(spec).not.toBe("help");
    if (spec === "help") return;
    expect(spec.dataset).toBe(DEFAULT_DATASET);
    expect(spec.model).toBe(DEFAULT_MODEL);
    expect(spec.outDir).toBe("embeddings");
    expect(spec.batchSize).toBe(DEFAULT_BATCH_SIZE);
    expect(spec.normalize).toBe(false);
    expect(spec.datasetDir).toBeUndefined();
  });

  it("mirrors every GenSpec field", () => {
    const spec = parseFlags([
      "--dataset", "nfcorpus",
      "--model", "some/encoder",
      "--out", "vectors",
      "--batch-size", "64",
      "--normalize",
      "--dataset-dir", "/data/nfcorpus",
      "--cache-dir", "/tmp/cache",
    ]);
    expect(spec).toEqual({
      dataset: "nfcorpus",
      model: "some/encoder",
      outDir: "vectors",
      batchSize: 64,
      normalize: true,
      datasetDir: "/data/nfcorpus",
      cacheDir: "/tmp/cache",
    });
  });

  it("returns help for --help", () => {
    expect(parseFlags(["--help"])).toBe("help");
    expect(parseFlags(["-h"])).toBe("help");
  });

  it("rejects unknown flags and bad batch sizes", () => {
    expect(() => parseFlags(["--bogus"])).toThrow(UsageError);
    expect(() => parseFlags(["--batch-size", "0"])).toThrow(/positive integer/);
    expect(() => parseFlags(["--batch-size", "x"])).toThrow(/positive integer/);
    expect(() => parseFlags(["--model"])).toThrow(/requires a value/);
  });
});
