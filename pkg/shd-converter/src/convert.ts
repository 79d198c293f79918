import * as fs from "fs";
import * as path from "path";

import { Manifest, manifestPath, writeManifest } from "./manifest.js";
import { SHD_CHANNELS, ShdSample, readShdFile } from "./shd.js";
import { EventStream, writeSpke } from "./spke.js";

/** Canonical files store microsecond ticks. */
export const TIMESTAMP_UNIT_NS = 1000;

/**
 * Upstream times are float seconds; ticks are microseconds, truncated (not
 * rounded) so the conversion is bit-stable across platforms.
 */
export function secondsToTicks(seconds: number): bigint {
  return BigInt(Math.floor(seconds * 1e6));
}

export function sampleToStream(sample: ShdSample): EventStream {
  const count = sample.times.length;
  const order = Array.from({ length: count }, (_, i) => i);
  const ticks = new Array<bigint>(count);
  for (let i = 0; i < count; i++) {
    ticks[i] = secondsToTicks(sample.times[i]);
  }
  // stable sort by tick keeps same-time events in upstream order
  order.sort((a, b) => (ticks[a] < ticks[b] ? -1 : ticks[a] > ticks[b] ? 1 : a - b));
  const times = new BigUint64Array(count);
  const channels = new Uint32Array(count);
  for (let i = 0; i < count; i++) {
    times[i] = ticks[order[i]];
    channels[i] = sample.units[order[i]];
  }
  return { numChannels: SHD_CHANNELS, timestampUnitNs: TIMESTAMP_UNIT_NS, times, channels };
}

export function sampleFileName(index: number): string {
  return `sample_${index.toString().padStart(5, "0")}.spke`;
}

export interface ConvertResult {
  manifest: string;
  samples: number;
  events: number;
}

/** Convert one upstream HDF5 split into canonical files plus a manifest. */
export async function convertShd(
  h5Path: string,
  outDir: string,
  split?: string,
): Promise<ConvertResult> {
  const samples = await readShdFile(h5Path);
  fs.mkdirSync(outDir, { recursive: true });
  const manifest: Manifest = {
    num_channels: SHD_CHANNELS,
    split: split ?? path.basename(h5Path).replace(/\.h5$/, ""),
    samples: [],
  };
  let events = 0;
  samples.forEach((sample, index) => {
    const name = sampleFileName(index);
    fs.writeFileSync(path.join(outDir, name), writeSpke(sampleToStream(sample)));
    manifest.samples.push({ path: name, label: sample.label });
    events += sample.times.length;
  });
  writeManifest(manifestPath(outDir), manifest);
  return { manifest: manifestPath(outDir), samples: samples.length, events };
}
