import fs from "node:fs/promises";
import path from "node:path";

import { describe, expect, it } from "vitest";

import { checkIds, decodeFvecs, encodeFvecs, writeFvecs } from "../src/fvecs.js";
import { makeTmpDir } from "./helpers.js";

describe("encodeFvecs", () => {
  it("lays out each record as LE int32 dim then LE float32 components", () => {
    const buf = encodeFvecs([new Float32Array([1.0, -2.0]), new Float32Array([0.5, 0.0])], 2);
    expect(buf.length).toBe(2 * 4 * 3);
    expect(buf.readInt32LE(0)).toBe(2);
    expect(buf.readFloatLE(4)).toBe(1.0);
    expect(buf.readFloatLE(8)).toBe(-2.0);
    expect(buf.readInt32LE(12)).toBe(2);
    expect(buf.readFloatLE(16)).toBe(0.5);
    expect(buf.readFloatLE(20)).toBe(0.0);
    // golden bytes for the first record: dim 2, then 1.0f and -2.0f
    expect(buf.subarray(0, 12).toString("hex")).toBe("020000000000803f000000c0");
  });

  it("rejects a row of the wrong width", () => {
    expect(() => encodeFvecs([new Float32Array([1, 2, 3])], 2)).toThrow(/expected 2/);
  });

  it("round-trips through decodeFvecs bit-exactly", () => {
    const vectors = [new Float32Array([0.1, -0.25, 3e7]), new Float32Array([1e-30, 2, -0])];
    const back = decodeFvecs(encodeFvecs(vectors, 3));
    expect(back.dim).toBe(3);
    expect(back.vectors.length).toBe(2);
    back.vectors.forEach((vec, row) => expect([...vec]).toEqual([...vectors[row]]));
  });
});

describe("checkIds", () => {
  it("rejects duplicates, empties, and whitespace", () => {
    expect(() => checkIds(["a", "a"])).toThrow(/duplicate/);
    expect(() => checkIds([""])).toThrow(/empty/);
    expect(() => checkIds(["has space"])).toThrow(/whitespace/);
    expect(() => checkIds(["ok", "also-ok"])).not.toThrow();
  });
});

describe("writeFvecs", () => {
  it("writes the sidecar with one id per line and a trailing newline", async () => {
    const dir = await makeTmpDir("fvecs-");
    await writeFvecs(
      path.join(dir, "v.fvecs"),
      path.join(dir, "v.ids"),
      ["a", "b"],
      [new Float32Array([1]), new Float32Array([2])],
      1,
    );
    expect(await fs.readFile(path.join(dir, "v.ids"), "utf-8")).toBe("a\nb\n");
    const raw = await fs.readFile(path.join(dir, "v.fvecs"));
    expect(decodeFvecs(raw).vectors.length).toBe(2);
  });

  it("writes empty files for an empty set", async () => {
    const dir = await makeTmpDir("fvecs-");
    await writeFvecs(path.join(dir, "v.fvecs"), path.join(dir, "v.ids"), [], [], 4);
    expect((await fs.readFile(path.join(dir, "v.fvecs"))).length).toBe(0);
    expect(await fs.readFile(path.join(dir, "v.ids"), "utf-8")).toBe("");
  });

  it("rejects mismatched id and vector counts", async () => {
    const dir = await makeTmpDir("fvecs-");
    await expect(
      writeFvecs(path.join(dir, "v.fvecs"), path.join(dir, "v.ids"), ["a"], [], 1),
    ).rejects.toThrow(/1 ids for 0 vectors/);
  });
});
