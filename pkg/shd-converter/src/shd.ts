/**
 * Reader for the upstream Spiking Heidelberg Digits HDF5 schema:
 * spikes/times (ragged float64 seconds), spikes/units (ragged integer,
 * 0..699), labels (integer, 0..19).
 */

import h5wasm from "h5wasm/node";

import { DataError, SchemaError } from "./errors.js";

export const SHD_CHANNELS = 700;
export const SHD_CLASSES = 20;

export interface ShdSample {
  /** spike times in seconds, as stored upstream */
  times: Float64Array;
  /** unit (channel) indices */
  units: Uint32Array;
  label: number;
}

function toNumberArray(raw: ArrayLike<number | bigint>): Uint32Array {
  const out = new Uint32Array(raw.length);
  for (let i = 0; i < raw.length; i++) {
    out[i] = Number(raw[i]);
  }
  return out;
}

export async function readShdFile(h5Path: string): Promise<ShdSample[]> {
  const h5 = await h5wasm.ready.then(() => h5wasm);
  const file = new h5.File(h5Path, "r");
  try {
    const rootKeys = file.keys();
    if (!rootKeys.includes("spikes") || !rootKeys.includes("labels")) {
      throw new SchemaError(`${h5Path}: missing group "spikes" or dataset "labels"`);
    }
    const spikes = file.get("spikes");
    const spikeKeys = (spikes as { keys(): string[] }).keys();
    for (const name of ["times", "units"]) {
      if (!spikeKeys.includes(name)) {
        throw new SchemaError(`${h5Path}: missing dataset "spikes/${name}"`);
      }
    }
    const timesRaw = (file.get("spikes/times") as { value: ArrayLike<Float64Array> }).value;
    const unitsRaw = (file.get("spikes/units") as {
      value: ArrayLike<ArrayLike<number | bigint>>;
    }).value;
    const labelsRaw = (file.get("labels") as { value: ArrayLike<number | bigint> }).value;
    if (timesRaw.length !== unitsRaw.length || timesRaw.length !== labelsRaw.length) {
      throw new SchemaError(
        `${h5Path}: spikes/times (${timesRaw.length}), spikes/units ` +
        `(${unitsRaw.length}) and labels (${labelsRaw.length}) disagree in length`,
      );
    }
    const samples: ShdSample[] = [];
    for (let i = 0; i < timesRaw.length; i++) {
      const times = Float64Array.from(timesRaw[i]);
      const units = toNumberArray(unitsRaw[i]);
      if (times.length !== units.length) {
        throw new DataError(`sample ${i}: ${times.length} times vs ${units.length} units`);
      }
      for (let j = 0; j < units.length; j++) {
        if (units[j] >= SHD_CHANNELS) {
          throw new DataError(
            `sample ${i}: unit ${units[j]} outside [0, ${SHD_CHANNELS})`,
          );
        }
        if (times[j] < 0) {
          throw new DataError(`sample ${i}: negative spike time ${times[j]}`);
        }
      }
      const label = Number(labelsRaw[i]);
      if (label < 0 || label >= SHD_CLASSES) {
        throw new DataError(`sample ${i}: label ${label} outside [0, ${SHD_CLASSES})`);
      }
      samples.push({ times, units, label });
    }
    return samples;
  } finally {
    file.close();
  }
}
