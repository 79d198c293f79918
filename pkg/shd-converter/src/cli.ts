#!/usr/bin/env node
/**
 * Usage:
 *   shd-converter convert <shd_file.h5> <out_dir> [--split name]
 *   shd-converter verify <out_dir> <shd_file.h5> [--expect-samples N]
 *
 * --expect-samples pins the documented split size (8156 train / 2264 test
 * for the upstream distribution). Exit codes: 0 success, 1 usage error,
 * 2 conversion/verification failure.
 */

import { convertShd } from "./convert.js";
import { DataError, SchemaError } from "./errors.js";
import { formatReport, verify } from "./verify.js";

function usage(): never {
  console.error("usage: shd-converter convert <file.h5> <out_dir> [--split name]");
  console.error("       shd-converter verify <out_dir> <file.h5>");
  process.exit(1);
}

export async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  try {
    if (command === "convert") {
      const args = [...rest];
      let split: string | undefined;
      const splitIdx = args.indexOf("--split");
      if (splitIdx >= 0) {
        split = args[splitIdx + 1];
        if (split === undefined) usage();
        args.splice(splitIdx, 2);
      }
      if (args.length !== 2 || args.some((a) => a.startsWith("--"))) usage();
      const result = await convertShd(args[0], args[1], split);
      console.log(
        `converted ${result.samples} samples (${result.events} events) -> ${result.manifest}`,
      );
      return 0;
    }
    if (command === "verify") {
      const args = [...rest];
      let expectSamples: number | undefined;
      const expectIdx = args.indexOf("--expect-samples");
      if (expectIdx >= 0) {
        expectSamples = Number(args[expectIdx + 1]);
        if (!Number.isInteger(expectSamples)) usage();
        args.splice(expectIdx, 2);
      }
      if (args.length !== 2 || args.some((a) => a.startsWith("--"))) usage();
      const report = await verify(args[0], args[1]);
      console.log(formatReport(report));
      if (expectSamples !== undefined && report.samples !== expectSamples) {
        console.error(`split size ${report.samples} != expected ${expectSamples}`);
        return 2;
      }
      return report.ok ? 0 : 2;
    }
    usage();
  } catch (err) {
    if (err instanceof SchemaError || err instanceof DataError) {
      console.error(`${err.name}: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

const isDirectRun = process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (isDirectRun) {
  main(process.argv.slice(2)).then((code) => process.exit(code));
}
