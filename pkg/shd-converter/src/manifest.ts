import * as fs from "fs";
import * as path from "path";

import { DataError } from "./errors.js";

export interface ManifestSample {
  path: string;
  label: number;
}

export interface Manifest {
  num_channels: number;
  split?: string;
  samples: ManifestSample[];
}

export function writeManifest(filePath: string, manifest: Manifest): void {
  fs.writeFileSync(filePath, JSON.stringify(manifest, null, 2) + "\n", "utf-8");
}

export function readManifest(filePath: string): Manifest {
  let doc: unknown;
  try {
    doc = JSON.parse(fs.readFileSync(filePath, "utf-8"));
  } catch (err) {
    throw new DataError(`cannot read manifest ${filePath}: ${err}`);
  }
  const manifest = doc as Manifest;
  if (typeof manifest.num_channels !== "number" || !Array.isArray(manifest.samples)) {
    throw new DataError(`manifest ${filePath} missing num_channels or samples`);
  }
  return manifest;
}

export function manifestPath(outDir: string): string {
  return path.join(outDir, "manifest.json");
}
