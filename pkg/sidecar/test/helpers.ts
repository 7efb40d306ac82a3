import { RgbImage } from "../src/engine";

/** Gray background with a bright and a dark rectangle. */
export function testImage(width = 64, height = 64): RgbImage {
  const pixels = new Uint8Array(width * height * 3).fill(90);
  const paint = (x0: number, y0: number, x1: number, y1: number, v: number) => {
    for (let y = y0; y < y1; y++) {
      for (let x = x0; x < x1; x++) {
        pixels.set([v, v, v], (y * width + x) * 3);
      }
    }
  };
  paint(8, 8, 24, 20, 210); // bright object
  paint(40, 36, 56, 52, 20); // dark object
  return { width, height, pixels };
}
