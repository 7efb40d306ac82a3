/**
 * Deterministic classical proposal engine.
 *
 * Stand-in for GPU segmentation/detection models in environments without
 * their checkpoints: foreground is whatever deviates from the border-median
 * color, objects are connected components seeded by a regular point grid,
 * and prompt "detections" score components with simple color/size
 * heuristics. Every step is deterministic, so identical inputs give
 * byte-identical documents. Demo/contract grade, not model grade.
 */

import { Box, encodeRle, tightBbox } from "./rle";
import { ProposalsDocument, SidecarConfig } from "./schema";

export interface RgbImage {
  width: number;
  height: number;
  /** RGB triplets, row-major, 3 bytes per pixel. */
  pixels: Uint8Array;
}

export interface Component {
  bits: Uint8Array;
  area: number;
  bbox: Box;
  meanR: number;
  meanG: number;
  meanB: number;
}

const FOREGROUND_DISTANCE = 40;

function borderMedian(image: RgbImage): [number, number, number] {
  const channels: number[][] = [[], [], []];
  const { width, height, pixels } = image;
  const push = (x: number, y: number) => {
    const base = (y * width + x) * 3;
    channels[0].push(pixels[base]);
    channels[1].push(pixels[base + 1]);
    channels[2].push(pixels[base + 2]);
  };
  for (let x = 0; x < width; x++) {
    push(x, 0);
    if (height > 1) push(x, height - 1);
  }
  for (let y = 1; y < height - 1; y++) {
    push(0, y);
    if (width > 1) push(width - 1, y);
  }
  const median = (values: number[]) => {
    const sorted = [...values].sort((a, b) => a - b);
    return sorted[Math.floor(sorted.length / 2)];
  };
  return [median(channels[0]), median(channels[1]), median(channels[2])];
}

export function foregroundMap(image: RgbImage): Uint8Array {
  const [br, bg, bb] = borderMedian(image);
  const { width, height, pixels } = image;
  const out = new Uint8Array(width * height);
  for (let i = 0; i < width * height; i++) {
    const dr = pixels[i * 3] - br;
    const dg = pixels[i * 3 + 1] - bg;
    const db = pixels[i * 3 + 2] - bb;
    if (Math.sqrt(dr * dr + dg * dg + db * db) > FOREGROUND_DISTANCE) {
      out[i] = 1;
    }
  }
  return out;
}

/** 4-connected components in deterministic scan order. */
export function connectedComponents(
  foreground: Uint8Array,
  image: RgbImage,
): Component[] {
  const { width, height, pixels } = image;
  const labels = new Int32Array(width * height).fill(-1);
  const components: Component[] = [];
  const queue = new Int32Array(width * height);

  for (let start = 0; start < width * height; start++) {
    if (!foreground[start] || labels[start] !== -1) continue;
    const label = components.length;
    let head = 0;
    let tail = 0;
    queue[tail++] = start;
    labels[start] = label;
    const bits = new Uint8Array(width * height);
    let area = 0;
    let sumR = 0;
    let sumG = 0;
    let sumB = 0;
    while (head < tail) {
      const index = queue[head++];
      bits[index] = 1;
      area += 1;
      sumR += pixels[index * 3];
      sumG += pixels[index * 3 + 1];
      sumB += pixels[index * 3 + 2];
      const x = index % width;
      const y = (index - x) / width;
      const neighbours = [
        x > 0 ? index - 1 : -1,
        x < width - 1 ? index + 1 : -1,
        y > 0 ? index - width : -1,
        y < height - 1 ? index + width : -1,
      ];
      for (const n of neighbours) {
        if (n >= 0 && foreground[n] && labels[n] === -1) {
          labels[n] = label;
          queue[tail++] = n;
        }
      }
    }
    const bbox = tightBbox(bits, width, height);
    if (!bbox) continue;
    components.push({
      bits,
      area,
      bbox,
      meanR: sumR / area,
      meanG: sumG / area,
      meanB: sumB / area,
    });
  }
  return components;
}

/** A component survives only if a regular points_per_side grid point
 * lands inside it (the seed-point analogue of grid-prompted segmenters). */
export function hitBySeedGrid(
  component: Component,
  width: number,
  height: number,
  pointsPerSide: number,
): boolean {
  const n = Math.max(1, pointsPerSide);
  for (let gy = 0; gy < n; gy++) {
    const y = Math.min(height - 1, Math.floor(((gy + 0.5) * height) / n));
    if (y < component.bbox.y0 || y >= component.bbox.y1) continue;
    for (let gx = 0; gx < n; gx++) {
      const x = Math.min(width - 1, Math.floor(((gx + 0.5) * width) / n));
      if (component.bits[y * width + x]) return true;
    }
  }
  return false;
}

function fillRatio(component: Component): number {
  const { x0, y0, x1, y1 } = component.bbox;
  return component.area / ((x1 - x0) * (y1 - y0));
}

function interiorRatio(component: Component, width: number, height: number): number {
  let interior = 0;
  const bits = component.bits;
  for (let y = component.bbox.y0; y < component.bbox.y1; y++) {
    for (let x = component.bbox.x0; x < component.bbox.x1; x++) {
      const index = y * width + x;
      if (!bits[index]) continue;
      const inside =
        x > 0 && bits[index - 1] &&
        x < width - 1 && bits[index + 1] &&
        y > 0 && bits[index - width] &&
        y < height - 1 && bits[index + width];
      if (inside) interior += 1;
    }
  }
  return interior / component.area;
}

const BRIGHT_WORDS = ["bright", "glare", "white", "light", "shiny"];

/** Heuristic prompt affinity in [0, 1]; color words beat the size prior. */
export function promptScore(
  component: Component,
  promptText: string,
  maxArea: number,
): number {
  const text = promptText.toLowerCase();
  const luminance =
    (0.299 * component.meanR + 0.587 * component.meanG + 0.114 * component.meanB) /
    255;
  if (text.includes("dark") || text.includes("shadow")) return 1 - luminance;
  if (BRIGHT_WORDS.some((w) => text.includes(w))) return luminance;
  if (text.includes("red")) return component.meanR / 255;
  if (text.includes("green")) return component.meanG / 255;
  if (text.includes("blue")) return component.meanB / 255;
  return Math.sqrt(component.area / maxArea);
}

export function buildDocument(
  image: RgbImage,
  config: SidecarConfig,
  rawConfig: Record<string, unknown>,
): ProposalsDocument {
  const { width, height } = image;
  const foreground = foregroundMap(image);
  const all = connectedComponents(foreground, image);
  const seeded = all.filter((c) =>
    hitBySeedGrid(c, width, height, config.points_per_side),
  );

  const proposals = [];
  let id = 0;
  for (const component of seeded) {
    const predictedIou = fillRatio(component);
    if (predictedIou < config.pred_iou_thresh) continue;
    proposals.push({
      id: id++,
      mask: { width, height, rle: encodeRle(component.bits, width, height) },
      bbox: component.bbox,
      predicted_iou: predictedIou,
      stability_score: interiorRatio(component, width, height),
    });
  }

  const maxArea = seeded.reduce((m, c) => Math.max(m, c.area), 1);
  const detections = [];
  for (const prompt of config.prompts) {
    for (const component of seeded) {
      const score = promptScore(component, prompt.text, maxArea);
      // one affinity score serves as both box and text confidence
      if (score >= prompt.box_threshold && score >= prompt.text_threshold) {
        detections.push({
          bbox: component.bbox,
          phrase: prompt.text,
          confidence: Math.min(1, Math.max(0, score)),
        });
      }
    }
  }

  return {
    image: { width, height },
    proposals,
    detections,
    config_echo: rawConfig,
  };
}
