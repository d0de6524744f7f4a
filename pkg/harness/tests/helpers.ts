import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';

import { writeRaster } from '../src/pfr';

export function tmpdir(prefix: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix));
}

/** Simple deterministic PRNG so fixtures never depend on Math.random. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface SyntheticOptions {
  trainCount: number;
  valCount: number;
  size: number;
  channels: number;
  classes: number;
  platformKind?: string;
  seed?: number;
  ignoreFraction?: number;
}

/**
 * Dataset directory whose labels are linearly separable from channel 0:
 * each patch splits into two half-plane regions with ch0 centered at -1
 * (class 0) or +1 (class 1) plus noise; extra channels are pure noise.
 */
export function writeSeparableDataset(dir: string, opts: SyntheticOptions): void {
  const rand = mulberry32(opts.seed ?? 1);
  const { size, channels, classes } = opts;
  fs.mkdirSync(dir, { recursive: true });

  const make = (count: number, name: 'train' | 'val') => {
    if (!count) return;
    const xs = new Float32Array(count * size * size * channels);
    const masks = new Uint8Array(count * size * size);
    for (let n = 0; n < count; n++) {
      const vertical = rand() < 0.5;
      const flip = rand() < 0.5 ? 1 : 0;
      for (let r = 0; r < size; r++) {
        for (let c = 0; c < size; c++) {
          const p = (n * size + r) * size + c;
          const half = (vertical ? c : r) < size / 2 ? 0 : 1;
          const label = half ^ flip;
          xs[p * channels] = (label * 2 - 1) + (rand() - 0.5) * 0.6;
          for (let k = 1; k < channels; k++) {
            xs[p * channels + k] = rand() * 2 - 1;
          }
          masks[p] = rand() < (opts.ignoreFraction ?? 0.05) ? 255 : label;
        }
      }
    }
    writeRaster(path.join(dir, `${name}.pfr`), {
      height: count * size, width: size, channels, dtype: 'f32', data: xs,
    });
    writeRaster(path.join(dir, `${name}_mask.pfr`), {
      height: count * size, width: size, channels: 1, dtype: 'u8', data: masks,
    });
  };
  make(opts.trainCount, 'train');
  make(opts.valCount, 'val');

  const manifest = {
    patch_size: size,
    channels,
    channel_names: Array.from({ length: channels }, (_, i) => `ch${i}`),
    class_names: Array.from({ length: classes }, (_, i) => `class${i}`),
    platform_kind: opts.platformKind ?? 'synthetic',
    mixed_platforms: false,
    counts: { train: opts.trainCount, val: opts.valCount },
    split: { seed: 0, val_ratio: opts.valCount / (opts.trainCount + opts.valCount || 1) },
  };
  fs.writeFileSync(
    path.join(dir, 'manifest.json'),
    `${JSON.stringify(manifest, null, 2)}\n`
  );
}
