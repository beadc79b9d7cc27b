// Sentence-embedding backends. The transformers.js pipeline is imported
// lazily so that tests (and flag parsing) never touch the ONNX runtime.

import { ModelLoadFailure } from "./errors.js";

export interface Embedder {
  readonly model: string;
  readonly dim: number;
  encode(texts: string[]): Promise<Float32Array[]>;
}

type FeatureExtractor = (
  texts: string[],
  options: { pooling: "mean"; normalize: boolean },
) => Promise<{ data: Float32Array; dims: number[] }>;

export async function loadTransformersEmbedder(model: string): Promise<Embedder> {
  let extractor: FeatureExtractor;
  try {
    const { pipeline } = await import("@xenova/transformers");
    extractor = (await pipeline("feature-extraction", model, {
      quantized: false,
    })) as unknown as FeatureExtractor;
  } catch (err) {
    throw new ModelLoadFailure(`cannot load model ${model}: ${String(err)}`);
  }

  const run = async (texts: string[]): Promise<Float32Array[]> => {
    const output = await extractor(texts, { pooling: "mean", normalize: false });
    const [rows, dim] = output.dims;
    if (rows !== texts.length || !Number.isInteger(dim) || dim < 1) {
      throw new ModelLoadFailure(`model ${model} returned shape [${output.dims.join(", ")}]`);
    }
    const vectors: Float32Array[] = [];
    for (let row = 0; row < rows; row += 1) {
      vectors.push(output.data.slice(row * dim, (row + 1) * dim));
    }
    return vectors;
  };

  const probe = await run(["dimension probe"]);
  const dim = probe[0].length;
  return {
    model,
    dim,
    encode: run,
  };
}

/** L2-normalize in place; zero vectors are left untouched. */
export function normalizeVectors(vectors: Float32Array[]): void {
  for (const vec of vectors) {
    let sumSquares = 0;
    for (const component of vec) sumSquares += component * component;
    const norm = Math.sqrt(sumSquares);
    if (norm === 0) continue;
    for (let j = 0; j < vec.length; j += 1) vec[j] = Math.fround(vec[j] / norm);
  }
}
