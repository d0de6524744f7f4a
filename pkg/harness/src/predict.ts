/**
 * Full-scene inference: tile the channel stack at the model's input size
 * with half-size stride, average class scores over the overlaps, then
 * argmax per pixel into a u8 class map the evaluator can score.
 */

import * as tf from '@tensorflow/tfjs';

import { expandOrdinalChannels, expansionWidths } from './dataset';
import { Raster, readRaster, writeClassMap } from './pfr';

export interface ChannelOptions {
  /** channel-name subset to feed the model, in order */
  channels?: string[];
  /** one-hot expansion levels per channel name (must match training) */
  expand?: Record<string, number>;
}

/** Apply the training-time channel selection/expansion to a scene stack. */
export function prepareStack(stack: Raster, options: ChannelOptions): Raster {
  let { channels } = stack;
  let data = stack.data as Float32Array;
  let names = (stack.meta['channel_names'] as string[] | undefined) ?? [];
  const pixels = stack.height * stack.width;

  if (options.channels) {
    if (!names.length) {
      throw new Error('stack sidecar lacks channel_names; cannot select channels');
    }
    const indices = options.channels.map((n) => {
      const i = names.indexOf(n);
      if (i < 0) throw new Error(`stack has no channel ${JSON.stringify(n)}`);
      return i;
    });
    const sliced = new Float32Array(pixels * indices.length);
    for (let p = 0; p < pixels; p++) {
      for (let k = 0; k < indices.length; k++) {
        sliced[p * indices.length + k] = data[p * channels + indices[k]];
      }
    }
    data = sliced;
    channels = indices.length;
    names = options.channels;
  }
  if (options.expand) {
    const widths = expansionWidths(names.length ? names : Array(channels).fill(''), options.expand);
    const expanded = expandOrdinalChannels(pixels, channels, data, widths);
    data = expanded.xs;
    channels = expanded.channels;
  }
  return { ...stack, channels, data };
}

function tileOrigins(extent: number, size: number, stride: number): number[] {
  const origins: number[] = [];
  for (let o = 0; o + size <= extent; o += stride) {
    origins.push(o);
  }
  const last = extent - size;
  if (origins[origins.length - 1] !== last) {
    origins.push(last);
  }
  return origins;
}

export interface PredictResult {
  labels: Uint8Array;
  height: number;
  width: number;
}

export async function predictScene(
  model: tf.LayersModel,
  stack: Raster,
  batchSize = 16
): Promise<PredictResult> {
  const shape = model.inputs[0].shape;
  const size = shape[1] as number;
  const inChannels = shape[3] as number;
  if (stack.dtype !== 'f32') {
    throw new Error(`scene stack must be f32, got ${stack.dtype}`);
  }
  if (stack.channels !== inChannels) {
    throw new Error(
      `scene stack has ${stack.channels} channels but the model expects ${inChannels}`
    );
  }
  const { height, width } = stack;
  if (height < size || width < size) {
    throw new Error(`scene ${height}x${width} is smaller than the ${size}px tile`);
  }
  const classes = model.outputs[0].shape[3] as number;
  const stride = Math.max(1, Math.floor(size / 2));
  const data = stack.data as Float32Array;

  const scores = new Float32Array(height * width * classes);
  const hits = new Float32Array(height * width);

  const origins: Array<[number, number]> = [];
  for (const r of tileOrigins(height, size, stride)) {
    for (const c of tileOrigins(width, size, stride)) {
      origins.push([r, c]);
    }
  }

  for (let start = 0; start < origins.length; start += batchSize) {
    const chunk = origins.slice(start, start + batchSize);
    const batch = new Float32Array(chunk.length * size * size * inChannels);
    chunk.forEach(([r0, c0], b) => {
      for (let r = 0; r < size; r++) {
        const srcRow = ((r0 + r) * width + c0) * inChannels;
        const dstRow = ((b * size + r) * size) * inChannels;
        batch.set(data.subarray(srcRow, srcRow + size * inChannels), dstRow);
      }
    });
    const out = tf.tidy(() =>
      model.predict(
        tf.tensor4d(batch, [chunk.length, size, size, inChannels])
      ) as tf.Tensor4D
    );
    const probs = (await out.data()) as Float32Array;
    out.dispose();
    chunk.forEach(([r0, c0], b) => {
      for (let r = 0; r < size; r++) {
        for (let c = 0; c < size; c++) {
          const src = ((b * size + r) * size + c) * classes;
          const px = (r0 + r) * width + (c0 + c);
          const dst = px * classes;
          for (let k = 0; k < classes; k++) {
            scores[dst + k] += probs[src + k];
          }
          hits[px] += 1;
        }
      }
    });
  }

  const labels = new Uint8Array(height * width);
  for (let px = 0; px < height * width; px++) {
    const base = px * classes;
    const inv = 1 / hits[px];
    let best = 0;
    let bestScore = -Infinity;
    for (let k = 0; k < classes; k++) {
      const s = scores[base + k] * inv;
      if (s > bestScore) {
        bestScore = s;
        best = k;
      }
    }
    labels[px] = best;
  }
  return { labels, height, width };
}

export async function predictToFile(
  model: tf.LayersModel,
  stackPath: string,
  outPath: string,
  classNames: string[],
  options: ChannelOptions = {}
): Promise<PredictResult> {
  const stack = prepareStack(readRaster(stackPath), options);
  const result = await predictScene(model, stack);
  writeClassMap(outPath, result.labels, result.height, result.width, classNames);
  return result;
}
