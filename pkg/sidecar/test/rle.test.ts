import { describe, expect, it } from "vitest";

import { decodeRle, encodeRle, popcount, tightBbox } from "../src/rle";

function bits(rows: number[][]): Uint8Array {
  return Uint8Array.from(rows.flat());
}

describe("encodeRle", () => {
  it("encodes a center pixel as [4,1,4]", () => {
    const bitmap = bits([
      [0, 0, 0],
      [0, 1, 0],
      [0, 0, 0],
    ]);
    expect(encodeRle(bitmap, 3, 3)).toEqual([4, 1, 4]);
  });

  it("encodes all-off as a single run", () => {
    expect(encodeRle(new Uint8Array(4), 2, 2)).toEqual([4]);
  });

  it("encodes all-on with a leading zero run", () => {
    expect(encodeRle(Uint8Array.from([1, 1, 1, 1]), 2, 2)).toEqual([0, 4]);
  });

  it("round-trips random bitmaps", () => {
    let seed = 12345;
    const next = () => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    for (let trial = 0; trial < 200; trial++) {
      const width = 1 + Math.floor(next() * 24);
      const height = 1 + Math.floor(next() * 24);
      const bitmap = new Uint8Array(width * height);
      const density = next();
      let expectedPop = 0;
      for (let i = 0; i < bitmap.length; i++) {
        bitmap[i] = next() < density ? 1 : 0;
        expectedPop += bitmap[i];
      }
      const rle = encodeRle(bitmap, width, height);
      expect(rle.reduce((a, b) => a + b, 0)).toBe(width * height);
      expect(rle.slice(1).every((r) => r > 0)).toBe(true);
      expect(popcount(rle)).toBe(expectedPop);
      expect(decodeRle({ width, height, rle })).toEqual(bitmap);
    }
  });
});

describe("decodeRle", () => {
  it("rejects run sums that do not cover the raster", () => {
    expect(() => decodeRle({ width: 3, height: 3, rle: [4] })).toThrow(/sum/);
  });
});

describe("tightBbox", () => {
  it("finds the minimal half-open box", () => {
    const bitmap = bits([
      [0, 0, 0, 0],
      [0, 1, 1, 0],
      [0, 0, 1, 0],
    ]);
    expect(tightBbox(bitmap, 4, 3)).toEqual({ x0: 1, y0: 1, x1: 3, y1: 3 });
  });

  it("returns null for an empty mask", () => {
    expect(tightBbox(new Uint8Array(12), 4, 3)).toBeNull();
  });
});
