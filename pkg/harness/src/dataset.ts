/**
 * Loader for exported dataset directories (manifest.json plus per-split
 * PFR tensors of shape (N*size, size, C) and u8 masks).
 */

import * as fs from 'fs';
import * as path from 'path';

import { readRaster } from './pfr';

export interface DatasetManifest {
  patch_size: number;
  channels: number;
  channel_names: string[];
  class_names: string[];
  platform_kind: string;
  mixed_platforms: boolean;
  counts: { train: number; val: number };
  split: { seed: number; val_ratio: number };
}

export interface SplitData {
  count: number;
  size: number;
  channels: number;
  /** (count, size, size, channels), row-major */
  xs: Float32Array;
  /** (count, size, size) */
  masks: Uint8Array;
}

export interface Dataset {
  manifest: DatasetManifest;
  train: SplitData | null;
  val: SplitData | null;
}

export const IGNORE_LABEL = 255;

function loadSplit(dir: string, name: 'train' | 'val', manifest: DatasetManifest): SplitData | null {
  const count = manifest.counts[name] ?? 0;
  if (!count) return null;
  const tensor = readRaster(path.join(dir, `${name}.pfr`));
  const masks = readRaster(path.join(dir, `${name}_mask.pfr`));
  const size = manifest.patch_size;
  if (tensor.dtype !== 'f32' || tensor.height !== count * size || tensor.width !== size) {
    throw new Error(`${name}.pfr does not match the manifest (${tensor.height}x${tensor.width} ${tensor.dtype})`);
  }
  if (masks.dtype !== 'u8' || masks.channels !== 1) {
    throw new Error(`${name}_mask.pfr must be single-channel u8`);
  }
  return {
    count,
    size,
    channels: tensor.channels,
    xs: tensor.data as Float32Array,
    masks: masks.data as Uint8Array,
  };
}

export function loadDataset(dir: string): Dataset {
  const manifest = JSON.parse(
    fs.readFileSync(path.join(dir, 'manifest.json'), 'utf-8')
  ) as DatasetManifest;
  return {
    manifest,
    train: loadSplit(dir, 'train', manifest),
    val: loadSplit(dir, 'val', manifest),
  };
}

/** Indices of the requested channel names within the manifest order. */
export function channelIndices(manifest: DatasetManifest, names: string[]): number[] {
  return names.map((name) => {
    const idx = manifest.channel_names.indexOf(name);
    if (idx < 0) {
      throw new Error(
        `channel ${JSON.stringify(name)} not in dataset (has ${manifest.channel_names.join(', ')})`
      );
    }
    return idx;
  });
}

/** Copy a channel subset out of an interleaved (n, size, size, C) tensor. */
export function sliceChannels(split: SplitData, indices: number[]): SplitData {
  const { count, size, channels, xs } = split;
  const pixels = count * size * size;
  const out = new Float32Array(pixels * indices.length);
  for (let p = 0; p < pixels; p++) {
    const src = p * channels;
    const dst = p * indices.length;
    for (let k = 0; k < indices.length; k++) {
      out[dst + k] = xs[src + indices[k]];
    }
  }
  return { ...split, channels: indices.length, xs: out };
}

/**
 * One-hot expand ordinal classified-map channels (value = level/(K-1))
 * into K indicator channels; plain channels pass through. `widths[c]`
 * gives the level count for channel c (1 = keep as-is). Indicator inputs
 * let the network key on cluster identity directly instead of slicing a
 * scalar into dozens of thresholds.
 */
export function expandOrdinalChannels(
  pixels: number,
  channels: number,
  xs: Float32Array,
  widths: number[]
): { xs: Float32Array; channels: number } {
  if (widths.length !== channels) {
    throw new Error(`expected ${channels} channel widths, got ${widths.length}`);
  }
  const total = widths.reduce((a, b) => a + b, 0);
  const out = new Float32Array(pixels * total);
  for (let p = 0; p < pixels; p++) {
    let dst = p * total;
    const src = p * channels;
    for (let c = 0; c < channels; c++) {
      const k = widths[c];
      if (k === 1) {
        out[dst++] = xs[src + c];
      } else {
        const level = Math.max(0, Math.min(k - 1, Math.round(xs[src + c] * (k - 1))));
        out[dst + level] = 1;
        dst += k;
      }
    }
  }
  return { xs: out, channels: total };
}

/** Per-channel expansion widths for a name->levels map (1 = untouched). */
export function expansionWidths(
  channelNames: string[],
  expand: Record<string, number> | undefined
): number[] {
  return channelNames.map((name) => {
    const k = expand?.[name] ?? 1;
    if (k < 1 || !Number.isInteger(k)) {
      throw new Error(`expansion width for ${name} must be a positive integer`);
    }
    return k;
  });
}

export function expandSplit(
  split: SplitData,
  channelNames: string[],
  expand: Record<string, number> | undefined
): SplitData {
  const widths = expansionWidths(channelNames, expand);
  if (widths.every((w) => w === 1)) return split;
  const pixels = split.count * split.size * split.size;
  const expanded = expandOrdinalChannels(pixels, split.channels, split.xs, widths);
  return { ...split, channels: expanded.channels, xs: expanded.xs };
}
