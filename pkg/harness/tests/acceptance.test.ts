/**
 * Release criteria for the training harness, driven end to end through the
 * toolkit CLI: the toy U-Net must track the Wishart baseline on a synthetic
 * scene, and the channel ablation must produce evaluator-comparable reports
 * for the intensity-only and intensity+classified configurations.
 */

import { execSync } from 'child_process';
import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';

import * as tf from '@tensorflow/tfjs';
import { beforeAll, describe, expect, it } from 'vitest';

import { main } from '../src/cli';
import { buildModel } from '../src/models';
import { predictToFile } from '../src/predict';
import { train } from '../src/train';

const EXPAND = { zones: 10, wishart: 27 };
const CHANNELS = ['hh_db', 'vv_db', 'zones', 'wishart'];

let work: string;
let runDir: string;
let wishartBaseline: number;

function sh(cmd: string): string {
  return execSync(cmd, { stdio: 'pipe' }).toString();
}

beforeAll(() => {
  work = fs.mkdtempSync(path.join(os.tmpdir(), 'harness-acceptance-'));
  runDir = path.join(work, 'run');
  const config = {
    scene: { height: 64, width: 64, classes: 'presets', layout: 'stripes', seed: 3 },
    window: 5,
    wishart: { max_iter: 10, change_tol: 0.001, span_bins: 3 },
    tile: { size: 8, stride: 8, min_labeled_fraction: 0.0 },
    split: { val_ratio: 0.25, seed: 1 },
  };
  const cfgPath = path.join(work, 'cfg.json');
  fs.writeFileSync(cfgPath, JSON.stringify(config));
  sh(`python3 -m polsarkit.cli pipeline --config ${cfgPath} --out ${runDir}`);
  const evalDoc = JSON.parse(fs.readFileSync(path.join(runDir, 'eval.json'), 'utf-8'));
  wishartBaseline = evalDoc.metrics.overall_accuracy;

  const manifest = JSON.parse(
    fs.readFileSync(path.join(runDir, 'dataset', 'manifest.json'), 'utf-8')
  );
  // 64 base patches augmented x6
  expect(manifest.counts.train + manifest.counts.val).toBe(384);
}, 120_000);

describe('toy U-Net vs the Wishart baseline', () => {
  it('reaches val OA within 0.05 of the baseline in <= 30 epochs', async () => {
    const target = wishartBaseline - 0.05;
    const result = await train({
      model: 'unet',
      in_channels: 4,
      classes: 5,
      epochs: 30,
      learning_rate: 3e-3,
      batch_size: 32,
      stages: [{ dataset: path.join(runDir, 'dataset') }],
      channels: CHANNELS,
      expand: EXPAND,
      target_val_oa: target + 0.01,
      seed: 7,
    });
    expect(result.log.length).toBeLessThanOrEqual(30);
    const best = Math.max(...result.log.map((e) => e.val_oa ?? 0));
    expect(best).toBeGreaterThanOrEqual(target);
    console.log(
      `[PASS] toy U-Net val OA ${best.toFixed(4)} vs Wishart baseline ` +
        `${wishartBaseline.toFixed(4)} in ${result.log.length} epochs`
    );

    // stitched full-scene prediction is evaluator-consumable
    const predPath = path.join(work, 'pred_unet.pfr');
    const pred = await predictToFile(
      result.model,
      path.join(runDir, 'stack.pfr'),
      predPath,
      ['water', 'roads', 'bare_soil', 'vegetation', 'built_up'],
      { channels: CHANNELS, expand: EXPAND }
    );
    expect([pred.height, pred.width]).toEqual([64, 64]);
    const report = sh(
      `python3 -m polsarkit.cli eval --pred ${predPath} --truth ${runDir}/truth.pfr`
    );
    expect(report).toContain('overall accuracy');
    result.model.dispose();
  }, 900_000);

  it('emits 256x256x5 softmax scores summing to one', () => {
    const model = buildModel({ kind: 'unet', size: 256, inChannels: 4, classes: 5 });
    const out = model.predict(tf.zeros([1, 256, 256, 4])) as tf.Tensor4D;
    expect(out.shape).toEqual([1, 256, 256, 5]);
    const sums = tf.tidy(() => tf.sum(out, -1)).dataSync();
    for (const s of sums) {
      expect(Math.abs(s - 1)).toBeLessThan(1e-5);
    }
    out.dispose();
    model.dispose();
    console.log('[PASS] output tensor shape 256x256x5, scores normalized to 1e-5');
  }, 300_000);
});

describe('channel ablation', () => {
  it('runs 2-channel and 4-channel configs from one switch with comparable reports', async () => {
    const ablationCfg = {
      run_dir: runDir,
      model: 'unet',
      classes: 5,
      epochs: 4,
      learning_rate: 3e-3,
      batch_size: 32,
      seed: 11,
      variants: [
        { name: 'intensity', channels: ['hh_db', 'vv_db'] },
        { name: 'intensity_classified', channels: CHANNELS, expand: EXPAND },
      ],
    };
    const cfgPath = path.join(work, 'ablation.json');
    fs.writeFileSync(cfgPath, JSON.stringify(ablationCfg));
    const outDir = path.join(work, 'ablation');
    const code = await main(['ablation', '--config', cfgPath, '--out', outDir]);
    expect(code).toBe(0);

    const reports: Record<string, number> = {};
    for (const name of ['intensity', 'intensity_classified']) {
      const pred = path.join(outDir, `pred_${name}.pfr`);
      expect(fs.existsSync(pred)).toBe(true);
      const reportPath = path.join(outDir, `report_${name}.json`);
      sh(
        `python3 -m polsarkit.cli eval --pred ${pred} ` +
          `--truth ${runDir}/truth.pfr --out ${reportPath}`
      );
      const doc = JSON.parse(fs.readFileSync(reportPath, 'utf-8'));
      reports[name] = doc.metrics.overall_accuracy;
      expect(doc.metrics.kappa).toBeTypeOf('number');
      expect(doc.class_names).toEqual(
        ['water', 'roads', 'bare_soil', 'vegetation', 'built_up']
      );
    }
    console.log(
      `[PASS] ablation reports: intensity OA ${reports.intensity.toFixed(4)}, ` +
        `intensity+classified OA ${reports.intensity_classified.toFixed(4)}`
    );
  }, 900_000);
});
