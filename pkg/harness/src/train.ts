/**
 * Staged training on exported dataset directories.
 *
 * Stages run in order, each on its own dataset; later stages may freeze
 * the encoder (transfer-learning knob). The loss is per-pixel categorical
 * cross entropy with ignore-labeled pixels (255) excluded: their one-hot
 * rows are all zero, so they contribute nothing, and the normalizer counts
 * labeled pixels only.
 */

import * as fs from 'fs';
import * as path from 'path';

import * as tf from '@tensorflow/tfjs';

import {
  Dataset,
  IGNORE_LABEL,
  SplitData,
  channelIndices,
  expandSplit,
  loadDataset,
  sliceChannels,
} from './dataset';
import { enableFastConvGradients } from './fastconv';
import { ModelKind, buildModel, setEncoderTrainable } from './models';

export interface StageSpec {
  dataset: string;
  freeze_encoder?: boolean;
}

export interface TrainSpec {
  model: ModelKind;
  in_channels: number;
  classes: number;
  epochs: number;
  learning_rate?: number;
  batch_size?: number;
  stages: StageSpec[];
  /** optional channel-name subset sliced out of each dataset */
  channels?: string[];
  /** one-hot expansion levels per classified-map channel name */
  expand?: Record<string, number>;
  /** stop a stage early once validation OA reaches this value */
  target_val_oa?: number;
  /** allow mixing platform kinds across stages */
  force?: boolean;
  seed?: number;
  base_filters?: number;
}

export interface EpochLog {
  stage: number;
  epoch: number;
  loss: number;
  val_oa: number | null;
}

export interface TrainResult {
  model: tf.LayersModel;
  log: EpochLog[];
  spec: TrainSpec;
}

export function maskedCategoricalCrossentropy(
  yTrue: tf.Tensor,
  yPred: tf.Tensor
): tf.Tensor {
  return tf.tidy(() => {
    const logp = tf.log(tf.clipByValue(yPred, 1e-7, 1.0));
    const ce = tf.neg(tf.sum(tf.mul(yTrue, logp), -1));
    const labeled = tf.sum(yTrue, -1);
    const total = tf.sum(tf.mul(ce, labeled));
    return tf.div(total, tf.maximum(tf.sum(labeled), 1));
  });
}

/** One-hot masks with all-zero rows at ignore pixels. */
export function oneHotMasks(split: SplitData, classes: number): tf.Tensor4D {
  const { count, size, masks } = split;
  const out = new Float32Array(count * size * size * classes);
  for (let i = 0; i < masks.length; i++) {
    const label = masks[i];
    if (label !== IGNORE_LABEL) {
      out[i * classes + label] = 1;
    }
  }
  return tf.tensor4d(out, [count, size, size, classes]);
}

export function toInputTensor(split: SplitData): tf.Tensor4D {
  return tf.tensor4d(split.xs, [split.count, split.size, split.size, split.channels]);
}

/** Overall accuracy of argmax predictions against a mask split. */
export async function splitAccuracy(
  model: tf.LayersModel,
  split: SplitData,
  batchSize = 16
): Promise<number> {
  let correct = 0;
  let total = 0;
  for (let start = 0; start < split.count; start += batchSize) {
    const n = Math.min(batchSize, split.count - start);
    const pixels = split.size * split.size;
    const labels = tf.tidy(() => {
      const xs = tf.tensor4d(
        split.xs.subarray(
          start * pixels * split.channels,
          (start + n) * pixels * split.channels
        ),
        [n, split.size, split.size, split.channels]
      );
      return tf.argMax(model.predict(xs) as tf.Tensor4D, -1);
    });
    const pred = (await labels.data()) as Int32Array;
    labels.dispose();
    const maskOffset = start * pixels;
    for (let i = 0; i < n * pixels; i++) {
      const truth = split.masks[maskOffset + i];
      if (truth === IGNORE_LABEL) continue;
      total += 1;
      if (pred[i] === truth) correct += 1;
    }
  }
  return total ? correct / total : 0;
}

function prepared(dataset: Dataset, spec: TrainSpec): Dataset {
  const names = spec.channels ?? dataset.manifest.channel_names;
  let train = dataset.train;
  let val = dataset.val;
  if (spec.channels) {
    const indices = channelIndices(dataset.manifest, spec.channels);
    train = train ? sliceChannels(train, indices) : null;
    val = val ? sliceChannels(val, indices) : null;
  }
  if (spec.expand) {
    train = train ? expandSplit(train, names, spec.expand) : null;
    val = val ? expandSplit(val, names, spec.expand) : null;
  }
  return { manifest: dataset.manifest, train, val };
}

function validateStages(datasets: Dataset[], spec: TrainSpec): void {
  const kinds = new Set(datasets.map((d) => d.manifest.platform_kind));
  if (kinds.size > 1 && !spec.force) {
    throw new Error(
      `stages mix platform kinds (${[...kinds].join(', ')}); airborne and ` +
      'spaceborne data must not be combined (set force to override)'
    );
  }
  for (const d of datasets) {
    const channels = spec.channels ? spec.channels.length : d.manifest.channels;
    if (channels !== spec.in_channels) {
      throw new Error(
        `dataset provides ${channels} channels but the spec expects ${spec.in_channels}`
      );
    }
    if (d.manifest.patch_size !== datasets[0].manifest.patch_size) {
      throw new Error('stages use differing patch sizes');
    }
    if (!d.train) {
      throw new Error('every stage needs a train split');
    }
  }
}

export async function train(spec: TrainSpec): Promise<TrainResult> {
  if (!spec.stages.length) {
    throw new Error('at least one training stage is required');
  }
  enableFastConvGradients();
  const datasets = spec.stages.map((s) => prepared(loadDataset(s.dataset), spec));
  validateStages(datasets, spec);

  const size = datasets[0].manifest.patch_size;
  // one-hot expansion may widen the input beyond the dataset channel count
  const model = buildModel({
    kind: spec.model,
    size,
    inChannels: datasets[0].train!.channels,
    classes: spec.classes,
    baseFilters: spec.base_filters,
    seed: spec.seed ?? 17,
  });

  const log: EpochLog[] = [];
  for (let stageIdx = 0; stageIdx < spec.stages.length; stageIdx++) {
    const stage = spec.stages[stageIdx];
    const data = datasets[stageIdx];
    setEncoderTrainable(model, !stage.freeze_encoder);
    model.compile({
      optimizer: tf.train.adam(spec.learning_rate ?? 1e-3),
      loss: maskedCategoricalCrossentropy,
    });

    const xs = toInputTensor(data.train!);
    const ys = oneHotMasks(data.train!, spec.classes);
    try {
      for (let epoch = 1; epoch <= spec.epochs; epoch++) {
        const history = await model.fit(xs, ys, {
          batchSize: spec.batch_size ?? 16,
          epochs: 1,
          shuffle: true,
          verbose: 0,
        });
        const loss = Number(history.history['loss'][0]);
        const evalSplit = data.val ?? data.train!;
        const valOA = await splitAccuracy(model, evalSplit);
        log.push({ stage: stageIdx, epoch, loss, val_oa: valOA });
        if (spec.target_val_oa !== undefined && valOA >= spec.target_val_oa) {
          break;
        }
      }
    } finally {
      xs.dispose();
      ys.dispose();
    }
  }
  return { model, log, spec };
}

export async function saveCheckpoint(
  result: TrainResult,
  dir: string
): Promise<void> {
  fs.mkdirSync(dir, { recursive: true });
  await result.model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const weightData = Array.isArray(artifacts.weightData)
        ? Buffer.concat(artifacts.weightData.map((b) => Buffer.from(b)))
        : Buffer.from(artifacts.weightData as ArrayBuffer);
      fs.writeFileSync(
        path.join(dir, 'model.json'),
        JSON.stringify({
          modelTopology: artifacts.modelTopology,
          weightSpecs: artifacts.weightSpecs,
        })
      );
      fs.writeFileSync(path.join(dir, 'weights.bin'), weightData);
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: 'JSON' as const,
        },
      };
    })
  );
  fs.writeFileSync(
    path.join(dir, 'train_log.json'),
    `${JSON.stringify({ spec: result.spec, epochs: result.log }, null, 2)}\n`
  );
}

export async function loadCheckpoint(dir: string): Promise<tf.LayersModel> {
  const doc = JSON.parse(fs.readFileSync(path.join(dir, 'model.json'), 'utf-8'));
  const raw = fs.readFileSync(path.join(dir, 'weights.bin'));
  const weightData = raw.buffer.slice(raw.byteOffset, raw.byteOffset + raw.byteLength);
  return tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: doc.modelTopology,
      weightSpecs: doc.weightSpecs,
      weightData,
    })
  );
}
