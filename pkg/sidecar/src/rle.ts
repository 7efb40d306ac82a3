/**
 * Canonical run-length encoding of binary rasters.
 *
 * Row-major scan order, alternating runs of 0s then 1s, always starting
 * with the 0-run (which may be zero-length). Only the leading run may be
 * zero, so every bitmap has exactly one encoding.
 */

export interface MaskJson {
  width: number;
  height: number;
  rle: number[];
}

export interface Box {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export function encodeRle(bits: Uint8Array, width: number, height: number): number[] {
  if (bits.length !== width * height) {
    throw new Error(`bitmap length ${bits.length} != ${width}x${height}`);
  }
  const runs: number[] = [];
  let current = 0; // runs always start by counting 0s
  let length = 0;
  for (let i = 0; i < bits.length; i++) {
    const value = bits[i] ? 1 : 0;
    if (value === current) {
      length += 1;
    } else {
      runs.push(length);
      current = value;
      length = 1;
    }
  }
  runs.push(length);
  return runs;
}

export function decodeRle(mask: MaskJson): Uint8Array {
  const total = mask.width * mask.height;
  const out = new Uint8Array(total);
  let offset = 0;
  for (let i = 0; i < mask.rle.length; i++) {
    const run = mask.rle[i];
    if (run < 0) throw new Error("negative run length");
    const value = i % 2;
    if (value === 1) out.fill(1, offset, offset + run);
    offset += run;
  }
  if (offset !== total) {
    throw new Error(`run lengths sum to ${offset}, expected ${total}`);
  }
  return out;
}

export function popcount(rle: number[]): number {
  let total = 0;
  for (let i = 1; i < rle.length; i += 2) total += rle[i];
  return total;
}

/** Minimal half-open box covering all on-pixels; null for an empty mask. */
export function tightBbox(bits: Uint8Array, width: number, height: number): Box | null {
  let x0 = width;
  let y0 = height;
  let x1 = -1;
  let y1 = -1;
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      if (bits[y * width + x]) {
        if (x < x0) x0 = x;
        if (y < y0) y0 = y;
        if (x > x1) x1 = x;
        if (y > y1) y1 = y;
      }
    }
  }
  if (x1 < 0) return null;
  return { x0, y0, x1: x1 + 1, y1: y1 + 1 };
}
