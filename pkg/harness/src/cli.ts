/**
 * Harness CLI: train toy segmentation models on exported datasets,
 * predict full scenes, and run the two-configuration channel ablation.
 */

import * as fs from 'fs';
import * as path from 'path';

import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { channelIndices, loadDataset } from './dataset';

import { predictToFile } from './predict';
import { TrainSpec, loadCheckpoint, saveCheckpoint, train } from './train';

function readJson<T>(file: string): T {
  return JSON.parse(fs.readFileSync(file, 'utf-8')) as T;
}

async function cmdTrain(configPath: string, outDir: string): Promise<void> {
  const spec = readJson<TrainSpec>(configPath);
  const result = await train(spec);
  await saveCheckpoint(result, outDir);
  const last = result.log[result.log.length - 1];
  process.stdout.write(
    `${JSON.stringify({ epochs: result.log.length, final: last })}\n`
  );
}

async function cmdPredict(
  checkpoint: string,
  stack: string,
  out: string
): Promise<void> {
  const model = await loadCheckpoint(checkpoint);
  const logPath = path.join(checkpoint, 'train_log.json');
  let classNames: string[] = [];
  let options = {};
  if (fs.existsSync(logPath)) {
    const doc = readJson<{ spec: TrainSpec }>(logPath);
    options = { channels: doc.spec.channels, expand: doc.spec.expand };
    const ds = loadDataset(doc.spec.stages[0].dataset);
    classNames = ds.manifest.class_names;
  }
  const result = await predictToFile(model, stack, out, classNames, options);
  process.stdout.write(
    `${JSON.stringify({ height: result.height, width: result.width, out })}\n`
  );
}

interface AblationVariant {
  name: string;
  channels: string[];
  expand?: Record<string, number>;
}

interface AblationConfig extends Omit<TrainSpec, 'in_channels' | 'channels'> {
  /** primary pipeline output directory (dataset/, stack.pfr, truth.pfr) */
  run_dir: string;
  variants: AblationVariant[];
}

async function cmdAblation(configPath: string, outDir: string): Promise<void> {
  const cfg = readJson<AblationConfig>(configPath);
  fs.mkdirSync(outDir, { recursive: true });
  const datasetDir = path.join(cfg.run_dir, 'dataset');
  const summary: Record<string, unknown>[] = [];
  for (const variant of cfg.variants) {
    const spec: TrainSpec = {
      model: cfg.model,
      in_channels: variant.channels.length,
      classes: cfg.classes,
      epochs: cfg.epochs,
      learning_rate: cfg.learning_rate,
      batch_size: cfg.batch_size,
      stages: cfg.stages?.length
        ? cfg.stages
        : [{ dataset: datasetDir, freeze_encoder: false }],
      channels: variant.channels,
      expand: variant.expand,
      target_val_oa: cfg.target_val_oa,
      seed: cfg.seed,
      base_filters: cfg.base_filters,
    };
    const result = await train(spec);
    const ckpt = path.join(outDir, `checkpoint_${variant.name}`);
    await saveCheckpoint(result, ckpt);

    const ds = loadDataset(datasetDir);
    const predPath = path.join(outDir, `pred_${variant.name}.pfr`);
    await predictToFile(
      result.model,
      path.join(cfg.run_dir, 'stack.pfr'),
      predPath,
      ds.manifest.class_names,
      { channels: variant.channels, expand: variant.expand }
    );
    const last = result.log[result.log.length - 1];
    summary.push({
      variant: variant.name,
      channels: variant.channels,
      epochs: result.log.length,
      val_oa: last.val_oa,
      prediction: predPath,
    });
    result.model.dispose();
  }
  fs.writeFileSync(
    path.join(outDir, 'ablation.json'),
    `${JSON.stringify(summary, null, 2)}\n`
  );
  process.stdout.write(`${JSON.stringify(summary)}\n`);
}

export async function main(argv: string[]): Promise<number> {
  try {
    await yargs(argv)
      .scriptName('polsarkit-harness')
      .command(
        'train',
        'train a model per a TrainSpec JSON file',
        (y) =>
          y
            .option('config', { type: 'string', demandOption: true })
            .option('out', { type: 'string', demandOption: true }),
        async (args) => cmdTrain(args.config, args.out)
      )
      .command(
        'predict',
        'tile-and-stitch full-scene prediction',
        (y) =>
          y
            .option('checkpoint', { type: 'string', demandOption: true })
            .option('stack', { type: 'string', demandOption: true })
            .option('out', { type: 'string', demandOption: true }),
        async (args) => cmdPredict(args.checkpoint, args.stack, args.out)
      )
      .command(
        'ablation',
        'train all channel variants from one config',
        (y) =>
          y
            .option('config', { type: 'string', demandOption: true })
            .option('out', { type: 'string', demandOption: true }),
        async (args) => cmdAblation(args.config, args.out)
      )
      .demandCommand(1)
      .strict()
      .fail((msg, err) => {
        throw err ?? new Error(msg);
      })
      .parseAsync();
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

if (require.main === module) {
  void main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
