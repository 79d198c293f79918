import * as fs from "fs";
import * as path from "path";

import { sampleFileName, sampleToStream } from "./convert.js";
import { manifestPath, readManifest } from "./manifest.js";
import { SHD_CHANNELS, SHD_CLASSES, readShdFile } from "./shd.js";
import { readSpke } from "./spke.js";

export interface VerifyReport {
  ok: boolean;
  samples: number;
  sourceEvents: number;
  convertedEvents: number;
  maxChannel: number;
  labelBins: number;
  labelHistogram: number[];
  firstDiff?: string;
}

/**
 * Re-read both sides and compare: per-sample event content, channel ranges,
 * and the label histogram. Stops at the first difference.
 */
export async function verify(outDir: string, h5Path: string): Promise<VerifyReport> {
  const source = await readShdFile(h5Path);
  const manifest = readManifest(manifestPath(outDir));
  const report: VerifyReport = {
    ok: true,
    samples: source.length,
    sourceEvents: 0,
    convertedEvents: 0,
    maxChannel: -1,
    labelBins: 0,
    labelHistogram: new Array(SHD_CLASSES).fill(0),
  };
  const fail = (message: string): VerifyReport => {
    report.ok = false;
    report.firstDiff = message;
    return report;
  };

  if (manifest.samples.length !== source.length) {
    return fail(
      `manifest lists ${manifest.samples.length} samples, source has ${source.length}`,
    );
  }
  if (manifest.num_channels !== SHD_CHANNELS) {
    return fail(`manifest declares ${manifest.num_channels} channels, expected ${SHD_CHANNELS}`);
  }
  for (let i = 0; i < source.length; i++) {
    const entry = manifest.samples[i];
    if (entry.path !== sampleFileName(i)) {
      return fail(`sample ${i}: unexpected path ${entry.path}`);
    }
    if (entry.label !== source[i].label) {
      return fail(`sample ${i}: label ${entry.label} != source ${source[i].label}`);
    }
    report.labelHistogram[entry.label] += 1;
    report.sourceEvents += source[i].times.length;

    let converted;
    try {
      converted = readSpke(fs.readFileSync(path.join(outDir, entry.path)));
    } catch (err) {
      return fail(`sample ${i}: ${err}`);
    }
    report.convertedEvents += converted.times.length;
    if (converted.times.length !== source[i].times.length) {
      return fail(
        `sample ${i}: ${converted.times.length} events, source has ${source[i].times.length}`,
      );
    }
    const expected = sampleToStream(source[i]);
    for (let j = 0; j < expected.times.length; j++) {
      if (converted.times[j] !== expected.times[j] ||
          converted.channels[j] !== expected.channels[j]) {
        return fail(
          `sample ${i}, event ${j}: (${converted.times[j]}, ${converted.channels[j]}) ` +
          `!= expected (${expected.times[j]}, ${expected.channels[j]})`,
        );
      }
      if (converted.channels[j] > report.maxChannel) {
        report.maxChannel = converted.channels[j];
      }
    }
  }
  if (report.maxChannel >= SHD_CHANNELS) {
    return fail(`channel ${report.maxChannel} outside [0, ${SHD_CHANNELS})`);
  }
  report.labelBins = report.labelHistogram.filter((n) => n > 0).length;
  return report;
}

export function formatReport(report: VerifyReport): string {
  const lines = [
    `samples:          ${report.samples}`,
    `source events:    ${report.sourceEvents}`,
    `converted events: ${report.convertedEvents}`,
    `max channel:      ${report.maxChannel} (limit ${SHD_CHANNELS - 1})`,
    `label classes:    ${report.labelBins} of ${SHD_CLASSES}`,
  ];
  if (report.ok) {
    lines.push("result:           OK");
  } else {
    lines.push(`result:           MISMATCH: ${report.firstDiff}`);
  }
  return lines.join("\n");
}
