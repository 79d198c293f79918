/**
 * Canonical spike-event file format (".spke"), shared with the training engine.
 *
 * Little-endian layout: magic "SPKE", u16 version = 1, u32 num_channels,
 * u32 timestamp_unit_ns, u64 event_count, then event_count records of
 * { u64 time, u32 channel }.
 */

import { DataError } from "./errors.js";

export const SPKE_MAGIC = "SPKE";
export const SPKE_VERSION = 1;
export const HEADER_BYTES = 4 + 2 + 4 + 4 + 8;
export const RECORD_BYTES = 8 + 4;

export interface EventStream {
  numChannels: number;
  timestampUnitNs: number;
  times: BigUint64Array;
  channels: Uint32Array;
}

export function writeSpke(stream: EventStream): Buffer {
  const count = stream.times.length;
  if (stream.channels.length !== count) {
    throw new DataError("times and channels must have equal length");
  }
  const buf = Buffer.alloc(HEADER_BYTES + count * RECORD_BYTES);
  buf.write(SPKE_MAGIC, 0, "ascii");
  buf.writeUInt16LE(SPKE_VERSION, 4);
  buf.writeUInt32LE(stream.numChannels, 6);
  buf.writeUInt32LE(stream.timestampUnitNs, 10);
  buf.writeBigUInt64LE(BigInt(count), 14);
  let offset = HEADER_BYTES;
  for (let i = 0; i < count; i++) {
    buf.writeBigUInt64LE(stream.times[i], offset);
    buf.writeUInt32LE(stream.channels[i], offset + 8);
    offset += RECORD_BYTES;
  }
  return buf;
}

export function readSpke(buf: Buffer): EventStream {
  if (buf.length < HEADER_BYTES) {
    throw new DataError("canonical stream shorter than header");
  }
  if (buf.toString("ascii", 0, 4) !== SPKE_MAGIC) {
    throw new DataError(`bad magic ${JSON.stringify(buf.toString("ascii", 0, 4))}`);
  }
  const version = buf.readUInt16LE(4);
  if (version !== SPKE_VERSION) {
    throw new DataError(`unsupported canonical version ${version}`);
  }
  const numChannels = buf.readUInt32LE(6);
  const timestampUnitNs = buf.readUInt32LE(10);
  const count = Number(buf.readBigUInt64LE(14));
  if (buf.length !== HEADER_BYTES + count * RECORD_BYTES) {
    throw new DataError(
      `declared ${count} events but payload holds ` +
      `${Math.floor((buf.length - HEADER_BYTES) / RECORD_BYTES)}`,
    );
  }
  const times = new BigUint64Array(count);
  const channels = new Uint32Array(count);
  let offset = HEADER_BYTES;
  let previous = -1n;
  for (let i = 0; i < count; i++) {
    times[i] = buf.readBigUInt64LE(offset);
    channels[i] = buf.readUInt32LE(offset + 8);
    if (channels[i] >= numChannels) {
      throw new DataError(`event ${i}: channel ${channels[i]} outside [0, ${numChannels})`);
    }
    if (times[i] < previous) {
      throw new DataError(`event ${i}: times not sorted`);
    }
    previous = times[i];
    offset += RECORD_BYTES;
  }
  return { numChannels, timestampUnitNs, times, channels };
}
