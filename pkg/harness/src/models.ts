/**
 * Toy encoder-decoder segmentation models (base width 16): a U-Net with
 * concatenated skips, a SegNet-style plain encoder-decoder, and a
 * LinkNet-style decoder with additive skips. All take (size, size, C)
 * inputs and emit per-pixel class scores normalized by softmax.
 *
 * Encoder (and bottleneck) layers carry the "enc"/"bott" name prefixes the
 * freeze switch keys on.
 */

import * as tf from '@tensorflow/tfjs';

export type ModelKind = 'segnet' | 'unet' | 'linknet';

export interface ModelConfig {
  kind: ModelKind;
  size: number;
  inChannels: number;
  classes: number;
  baseFilters?: number;
  seed?: number;
}

class SeedStream {
  private next: number;
  constructor(seed: number) {
    this.next = seed;
  }
  take(): number {
    this.next += 1;
    return this.next;
  }
}

function conv(
  x: tf.SymbolicTensor,
  filters: number,
  name: string,
  seeds: SeedStream
): tf.SymbolicTensor {
  return tf.layers
    .conv2d({
      filters,
      kernelSize: 3,
      padding: 'same',
      activation: 'relu',
      name,
      kernelInitializer: tf.initializers.glorotUniform({ seed: seeds.take() }),
    })
    .apply(x) as tf.SymbolicTensor;
}

function pool(x: tf.SymbolicTensor, name: string): tf.SymbolicTensor {
  return tf.layers.maxPooling2d({ poolSize: 2, name }).apply(x) as tf.SymbolicTensor;
}

function up(x: tf.SymbolicTensor, name: string): tf.SymbolicTensor {
  return tf.layers.upSampling2d({ size: [2, 2], name }).apply(x) as tf.SymbolicTensor;
}

function head(
  x: tf.SymbolicTensor,
  classes: number,
  seeds: SeedStream
): tf.SymbolicTensor {
  return tf.layers
    .conv2d({
      filters: classes,
      kernelSize: 1,
      padding: 'same',
      activation: 'softmax',
      name: 'class_scores',
      kernelInitializer: tf.initializers.glorotUniform({ seed: seeds.take() }),
    })
    .apply(x) as tf.SymbolicTensor;
}

export function buildModel(config: ModelConfig): tf.LayersModel {
  const { kind, size, inChannels, classes } = config;
  const base = config.baseFilters ?? 16;
  const seeds = new SeedStream(config.seed ?? 17);
  if (size % 4 !== 0) {
    throw new Error(`patch size ${size} must be divisible by 4 (two pooling stages)`);
  }

  const input = tf.input({ shape: [size, size, inChannels], name: 'patch' });
  let output: tf.SymbolicTensor;

  if (kind === 'unet') {
    const e1 = conv(conv(input, base, 'enc1a', seeds), base, 'enc1b', seeds);
    const e2 = conv(conv(pool(e1, 'enc1pool'), base * 2, 'enc2a', seeds), base * 2, 'enc2b', seeds);
    const b = conv(conv(pool(e2, 'enc2pool'), base * 4, 'bott_a', seeds), base * 4, 'bott_b', seeds);
    const d2in = tf.layers
      .concatenate({ name: 'skip2' })
      .apply([up(b, 'up2'), e2]) as tf.SymbolicTensor;
    const d2 = conv(conv(d2in, base * 2, 'dec2a', seeds), base * 2, 'dec2b', seeds);
    const d1in = tf.layers
      .concatenate({ name: 'skip1' })
      .apply([up(d2, 'up1'), e1]) as tf.SymbolicTensor;
    const d1 = conv(conv(d1in, base, 'dec1a', seeds), base, 'dec1b', seeds);
    output = head(d1, classes, seeds);
  } else if (kind === 'linknet') {
    const e1 = conv(conv(input, base, 'enc1a', seeds), base, 'enc1b', seeds);
    const e2 = conv(conv(pool(e1, 'enc1pool'), base * 2, 'enc2a', seeds), base * 2, 'enc2b', seeds);
    const b = conv(conv(pool(e2, 'enc2pool'), base * 4, 'bott_a', seeds), base * 4, 'bott_b', seeds);
    const d2pre = conv(up(b, 'up2'), base * 2, 'dec2a', seeds);
    const d2 = tf.layers.add({ name: 'skip2' }).apply([d2pre, e2]) as tf.SymbolicTensor;
    const d1pre = conv(up(conv(d2, base * 2, 'dec2b', seeds), 'up1'), base, 'dec1a', seeds);
    const d1 = tf.layers.add({ name: 'skip1' }).apply([d1pre, e1]) as tf.SymbolicTensor;
    output = head(conv(d1, base, 'dec1b', seeds), classes, seeds);
  } else {
    // segnet-style: symmetric encoder-decoder, no skip connections
    const e1 = conv(conv(input, base, 'enc1a', seeds), base, 'enc1b', seeds);
    const e2 = conv(conv(pool(e1, 'enc1pool'), base * 2, 'enc2a', seeds), base * 2, 'enc2b', seeds);
    const b = conv(conv(pool(e2, 'enc2pool'), base * 4, 'bott_a', seeds), base * 4, 'bott_b', seeds);
    const d2 = conv(conv(up(b, 'up2'), base * 2, 'dec2a', seeds), base * 2, 'dec2b', seeds);
    const d1 = conv(conv(up(d2, 'up1'), base, 'dec1a', seeds), base, 'dec1b', seeds);
    output = head(d1, classes, seeds);
  }

  return tf.model({ inputs: input, outputs: output, name: `${kind}_${size}_${inChannels}` });
}

/** Flip trainability of encoder + bottleneck layers (the transfer knob). */
export function setEncoderTrainable(model: tf.LayersModel, trainable: boolean): void {
  for (const layer of model.layers) {
    if (layer.name.startsWith('enc') || layer.name.startsWith('bott')) {
      layer.trainable = trainable;
    }
  }
}

export function encoderLayerNames(model: tf.LayersModel): string[] {
  return model.layers
    .filter((l) => l.name.startsWith('enc') || l.name.startsWith('bott'))
    .map((l) => l.name);
}
