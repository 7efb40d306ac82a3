import * as fs from "fs";
import { PNG } from "pngjs";

import { RgbImage } from "./engine";

export function readPngRgb(path: string): RgbImage {
  const png = PNG.sync.read(fs.readFileSync(path));
  const pixels = new Uint8Array(png.width * png.height * 3);
  for (let i = 0; i < png.width * png.height; i++) {
    pixels[i * 3] = png.data[i * 4];
    pixels[i * 3 + 1] = png.data[i * 4 + 1];
    pixels[i * 3 + 2] = png.data[i * 4 + 2];
  }
  return { width: png.width, height: png.height, pixels };
}

export function writePngRgb(path: string, image: RgbImage): void {
  const png = new PNG({ width: image.width, height: image.height });
  for (let i = 0; i < image.width * image.height; i++) {
    png.data[i * 4] = image.pixels[i * 3];
    png.data[i * 4 + 1] = image.pixels[i * 3 + 1];
    png.data[i * 4 + 2] = image.pixels[i * 3 + 2];
    png.data[i * 4 + 3] = 255;
  }
  fs.writeFileSync(path, PNG.sync.write(png));
}
