#!/usr/bin/env node
/**
 * CLI contract: hsmask-sidecar --image composite.png --config cfg.json --out
 * proposals.json. Exit 0 on success, 4 on any failure.
 */

import * as fs from "fs";

import { buildDocument } from "./engine";
import { readPngRgb } from "./png";
import { DocumentSchema, SidecarConfigSchema } from "./schema";

function parseArgs(argv: string[]): { image: string; config: string; out: string } {
  const values: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new Error(`bad argument ${flag}; usage: --image I --config C --out O`);
    }
    values[flag.slice(2)] = value;
  }
  for (const key of ["image", "config", "out"]) {
    if (!values[key]) throw new Error(`missing required flag --${key}`);
  }
  return { image: values.image, config: values.config, out: values.out };
}

export function run(argv: string[]): void {
  const args = parseArgs(argv);

  const rawConfig = JSON.parse(fs.readFileSync(args.config, "utf-8"));
  if (typeof rawConfig !== "object" || rawConfig === null || Array.isArray(rawConfig)) {
    throw new Error("config must be a JSON object");
  }
  const config = SidecarConfigSchema.parse(rawConfig);

  if (config.checkpoints !== undefined) {
    // this build ships only the classical engine; configs that request
    // model checkpoints cannot be honoured
    for (const [name, path] of Object.entries(config.checkpoints)) {
      if (!fs.existsSync(path)) {
        throw new Error(`checkpoint missing: ${name} -> ${path}`);
      }
    }
    throw new Error(
      "model checkpoints requested but no model runtime is bundled; " +
        "remove 'checkpoints' to use the classical engine",
    );
  }

  const image = readPngRgb(args.image);
  const document = buildDocument(image, config, rawConfig);
  DocumentSchema.parse(document); // never emit a non-conformant file
  fs.writeFileSync(args.out, JSON.stringify(document, null, 2) + "\n");
}

if (require.main === module) {
  try {
    run(process.argv.slice(2));
  } catch (error) {
    const message = error instanceof Error ? error.message : String(error);
    process.stderr.write(`hsmask-sidecar: ${message}\n`);
    process.exit(4);
  }
}
