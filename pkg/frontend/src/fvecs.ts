// fvecs + ids sidecar writers, byte-compatible with the vecpress loaders:
// each record is a little-endian int32 dimension followed by that many
// little-endian float32 components; the sidecar holds one id per line.

import fs from "node:fs/promises";
import path from "node:path";

export function checkIds(ids: string[]): void {
  const seen = new Set<string>();
  ids.forEach((id, row) => {
    if (!id || /\s/.test(id)) {
      throw new Error(`id at row ${row} is empty or contains whitespace: ${JSON.stringify(id)}`);
    }
    if (seen.has(id)) throw new Error(`duplicate id ${JSON.stringify(id)}`);
    seen.add(id);
  });
}

export function encodeFvecs(vectors: Float32Array[], dim: number): Buffer {
  const record = 4 * (dim + 1);
  const buf = Buffer.alloc(record * vectors.length);
  vectors.forEach((vec, row) => {
    if (vec.length !== dim) {
      throw new Error(`row ${row} has ${vec.length} components, expected ${dim}`);
    }
    let offset = record * row;
    offset = buf.writeInt32LE(dim, offset);
    for (const component of vec) offset = buf.writeFloatLE(component, offset);
  });
  return buf;
}

export async function writeFvecs(
  filePath: string,
  idsPath: string,
  ids: string[],
  vectors: Float32Array[],
  dim: number,
): Promise<void> {
  if (ids.length !== vectors.length) {
    throw new Error(`${ids.length} ids for ${vectors.length} vectors`);
  }
  checkIds(ids);
  await fs.mkdir(path.dirname(filePath), { recursive: true });
  if (vectors.length === 0) {
    await fs.writeFile(filePath, Buffer.alloc(0));
    await fs.writeFile(idsPath, "");
    return;
  }
  await fs.writeFile(filePath, encodeFvecs(vectors, dim));
  await fs.writeFile(idsPath, ids.join("\n") + "\n", "utf-8");
}

export function decodeFvecs(buf: Buffer): { dim: number; vectors: Float32Array[] } {
  if (buf.length === 0) return { dim: 0, vectors: [] };
  const dim = buf.readInt32LE(0);
  if (dim < 1) throw new Error(`corrupt fvecs: leading dimension ${dim}`);
  const record = 4 * (dim + 1);
  if (buf.length % record !== 0) {
    throw new Error(`corrupt fvecs: ${buf.length} bytes is not a multiple of ${record}`);
  }
  const vectors: Float32Array[] = [];
  for (let offset = 0; offset < buf.length; offset += record) {
    if (buf.readInt32LE(offset) !== dim) {
      throw new Error(`corrupt fvecs: inconsistent dimension at byte ${offset}`);
    }
    const vec = new Float32Array(dim);
    for (let j = 0; j < dim; j += 1) vec[j] = buf.readFloatLE(offset + 4 * (j + 1));
    vectors.push(vec);
  }
  return { dim, vectors };
}
