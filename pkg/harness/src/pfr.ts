/**
 * Reader/writer for the toolkit's PFR raster format.
 *
 * Layout (little-endian): magic "PFR1", dtype byte (0 = u8, 1 = f32,
 * 2 = complex64 stored as f32 re/im pairs), u32 height/width/channels,
 * then a row-major channel-interleaved payload. An optional
 * `<name>.meta.json` sidecar carries class/channel names and metadata.
 */

import * as fs from 'fs';
import * as path from 'path';

export const MAGIC = 'PFR1';
const HEADER_BYTES = 17;

export type PfrDtype = 'u8' | 'f32' | 'c64';

export interface Raster {
  height: number;
  width: number;
  channels: number;
  dtype: PfrDtype;
  /** u8 -> Uint8Array (h*w*c); f32 -> Float32Array (h*w*c);
   *  c64 -> Float32Array (h*w*c*2, interleaved re/im). */
  data: Uint8Array | Float32Array;
  meta: Record<string, unknown>;
}

const CODE_OF: Record<PfrDtype, number> = { u8: 0, f32: 1, c64: 2 };
const DTYPE_OF: Record<number, PfrDtype> = { 0: 'u8', 1: 'f32', 2: 'c64' };

export function sidecarPath(file: string): string {
  const parsed = path.parse(file);
  return path.join(parsed.dir, `${parsed.name}.meta.json`);
}

export function readRaster(file: string): Raster {
  const buf = fs.readFileSync(file);
  if (buf.length < HEADER_BYTES) {
    throw new Error(`${file}: truncated header (${buf.length} bytes)`);
  }
  const magic = buf.toString('latin1', 0, 4);
  if (magic !== MAGIC) {
    throw new Error(`${file}: bad magic ${JSON.stringify(magic)}, expected ${MAGIC}`);
  }
  const code = buf.readUInt8(4);
  const dtype = DTYPE_OF[code];
  if (dtype === undefined) {
    throw new Error(`${file}: unknown dtype code ${code}`);
  }
  const height = buf.readUInt32LE(5);
  const width = buf.readUInt32LE(9);
  const channels = buf.readUInt32LE(13);
  const values = height * width * channels * (dtype === 'c64' ? 2 : 1);
  const itemBytes = dtype === 'u8' ? 1 : 4;
  const expected = values * itemBytes;
  const payload = buf.subarray(HEADER_BYTES);
  if (payload.length !== expected) {
    throw new Error(
      `${file}: payload is ${payload.length} bytes, expected ${expected} ` +
      `for ${height}x${width}x${channels} ${dtype}`
    );
  }
  let data: Uint8Array | Float32Array;
  if (dtype === 'u8') {
    data = new Uint8Array(payload);
  } else {
    // copy to guarantee 4-byte alignment regardless of Buffer pooling
    const aligned = new ArrayBuffer(expected);
    new Uint8Array(aligned).set(payload);
    data = new Float32Array(aligned);
  }
  let meta: Record<string, unknown> = {};
  const sidecar = sidecarPath(file);
  if (fs.existsSync(sidecar)) {
    meta = JSON.parse(fs.readFileSync(sidecar, 'utf-8'));
  }
  return { height, width, channels, dtype, data, meta };
}

export function writeRaster(file: string, raster: Omit<Raster, 'meta'>, meta?: Record<string, unknown>): void {
  const { height, width, channels, dtype, data } = raster;
  const values = height * width * channels * (dtype === 'c64' ? 2 : 1);
  if (data.length !== values) {
    throw new Error(`payload length ${data.length} does not match ${height}x${width}x${channels} ${dtype}`);
  }
  const header = Buffer.alloc(HEADER_BYTES);
  header.write(MAGIC, 0, 'latin1');
  header.writeUInt8(CODE_OF[dtype], 4);
  header.writeUInt32LE(height, 5);
  header.writeUInt32LE(width, 9);
  header.writeUInt32LE(channels, 13);
  const payload = Buffer.from(data.buffer, data.byteOffset, data.byteLength);
  fs.writeFileSync(file, Buffer.concat([header, payload]));
  if (meta !== undefined) {
    fs.writeFileSync(sidecarPath(file), `${JSON.stringify(meta, Object.keys(meta).sort(), 2)}\n`);
  }
}

/** Write a label raster as the single-channel u8 class map the evaluator expects. */
export function writeClassMap(file: string, labels: Uint8Array, height: number, width: number, classNames: string[]): void {
  writeRaster(
    file,
    { height, width, channels: 1, dtype: 'u8', data: labels },
    { class_names: classNames }
  );
}
