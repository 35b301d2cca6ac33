/** Training and cross-validated evaluation of sequence classifiers.
 *
 * Cross-entropy loss, adaptive-moment optimizer (lr 1e-3, batch 16 by
 * default), a fresh random window per sample per epoch, and minority
 * oversampling inside training folds only. Deterministic under the seed:
 * sampling uses our own RNG and all weights are seed-initialized.
 */

import * as tf from "@tensorflow/tfjs";
import {
  channelStats,
  oversample,
  randomWindowOffset,
  SequenceSample,
  standardize,
  stratifiedFolds,
  window,
} from "./data.js";
import { confusion, metricsFromConfusion, Report } from "./metrics.js";
import { Rng } from "./rng.js";
import { SequenceModel } from "./transformer.js";

export interface TrainOptions {
  epochs: number;
  seed: number;
  batchSize?: number;
  learningRate?: number;
  windowLength?: number;
  oversampleMinority?: boolean;
  /** Stop once training accuracy reaches this level (1.0 = never early). */
  targetAccuracy?: number;
}

export interface TrainResult {
  lossHistory: number[];
  trainAccuracy: number;
  epochsRun: number;
}

function toBatch(
  samples: SequenceSample[],
  indices: number[],
  windowLength: number,
  offsets: number[],
): { x: tf.Tensor3D; mask: tf.Tensor2D; y: tf.Tensor1D } {
  const B = indices.length;
  const xs = new Float32Array(B * windowLength * 3);
  const ms = new Uint8Array(B * windowLength);
  const ys = new Int32Array(B);
  indices.forEach((idx, b) => {
    const w = window(samples[idx], windowLength, offsets[b]);
    xs.set(w.features, b * windowLength * 3);
    ms.set(w.mask, b * windowLength);
    ys[b] = samples[idx].label;
  });
  return {
    x: tf.tensor3d(xs, [B, windowLength, 3]),
    mask: tf.tensor2d(Float32Array.from(ms), [B, windowLength]),
    y: tf.tensor1d(ys, "int32"),
  };
}

export function crossEntropy(logits: tf.Tensor2D, y: tf.Tensor1D): tf.Scalar {
  const oneHot = tf.oneHot(y, logits.shape[1]);
  return tf.losses.softmaxCrossEntropy(oneHot, logits) as tf.Scalar;
}

export function predictLabels(
  model: SequenceModel,
  samples: SequenceSample[],
  windowLength: number,
): number[] {
  const out: number[] = [];
  for (let i = 0; i < samples.length; i += 32) {
    const idx = samples.slice(i, i + 32).map((_, j) => i + j);
    const preds = tf.tidy(() => {
      const batch = toBatch(samples, idx, windowLength, idx.map(() => 0));
      const logits = model.forward(batch.x, batch.mask, false);
      return tf.argMax(logits, 1);
    });
    out.push(...Array.from(preds.dataSync()));
    preds.dispose();
  }
  return out;
}

export function trainModel(
  model: SequenceModel,
  samples: SequenceSample[],
  opts: TrainOptions,
): TrainResult {
  const {
    epochs,
    seed,
    batchSize = 16,
    learningRate = 1e-3,
    windowLength = 700,
    oversampleMinority = true,
    targetAccuracy = 1.0,
  } = opts;
  if (samples.length === 0) throw new Error("empty training set");
  const labels = samples.map((s) => s.label);
  if (new Set(labels).size < 2) throw new Error("training data has a single class");

  const rng = new Rng(seed);
  const optimizer = tf.train.adam(learningRate);
  const base = samples.map((_, i) => i);
  const lossHistory: number[] = [];
  let trainAccuracy = 0;
  let epochsRun = 0;

  for (let epoch = 0; epoch < epochs; epoch++) {
    const order = oversampleMinority ? oversample(base, labels, rng) : [...base];
    rng.shuffle(order);
    let epochLoss = 0;
    let nBatches = 0;
    for (let i = 0; i < order.length; i += batchSize) {
      const idx = order.slice(i, i + batchSize);
      const offsets = idx.map((j) => randomWindowOffset(samples[j], windowLength, rng));
      const batch = toBatch(samples, idx, windowLength, offsets);
      const cost = optimizer.minimize(
        () => crossEntropy(model.forward(batch.x, batch.mask, true), batch.y),
        true,
        model.variables,
      ) as tf.Scalar;
      epochLoss += cost.dataSync()[0];
      cost.dispose();
      nBatches++;
      batch.x.dispose();
      batch.mask.dispose();
      batch.y.dispose();
    }
    lossHistory.push(epochLoss / Math.max(nBatches, 1));
    epochsRun = epoch + 1;

    const preds = predictLabels(model, samples, windowLength);
    trainAccuracy =
      preds.filter((p, i) => p === labels[i]).length / labels.length;
    if (trainAccuracy >= targetAccuracy) break;
  }
  optimizer.dispose();
  return { lossHistory, trainAccuracy, epochsRun };
}

export interface CvOptions extends TrainOptions {
  folds?: number;
  nPermutations?: number;
  buildModel: (seed: number) => SequenceModel;
}

export interface CvResult {
  report: Report;
  foldIndices: number[][];
  trainIndices: number[][];
  predictions: number[];
}

function runFolds(
  samples: SequenceSample[],
  labels: number[],
  folds: number[][],
  opts: CvOptions,
  seedOffset: number,
): number[] {
  const predictions = new Array(samples.length).fill(-1);
  const windowLength = opts.windowLength ?? 700;
  folds.forEach((testIdx, f) => {
    const testSet = new Set(testIdx);
    const trainIdx = samples.map((_, i) => i).filter((i) => !testSet.has(i));
    if (trainIdx.some((i) => testSet.has(i))) throw new Error("fold leakage");
    const stats = channelStats(trainIdx.map((i) => samples[i]));
    const standardized = standardize(samples, stats);
    const trainSamples = trainIdx.map((i) => ({ ...standardized[i], label: labels[i] }));
    const model = opts.buildModel(opts.seed + 1000 * seedOffset + f);
    trainModel(model, trainSamples, { ...opts, seed: opts.seed + 1000 * seedOffset + f });
    const preds = predictLabels(model, testIdx.map((i) => standardized[i]), windowLength);
    testIdx.forEach((i, j) => (predictions[i] = preds[j]));
    model.variables.forEach((v) => v.dispose());
  });
  return predictions;
}

/** Stratified k-fold CV; oversampling happens inside trainModel on training
 * folds only, standardization statistics come from the training fold. */
export function crossValidate(samples: SequenceSample[], opts: CvOptions): CvResult {
  const labels = samples.map((s) => s.label);
  const k = opts.folds ?? 5;
  const rng = new Rng(opts.seed ^ 0x5f3759df);
  const folds = stratifiedFolds(labels, k, rng);

  const predictions = runFolds(samples, labels, folds, opts, 0);
  const observed = metricsFromConfusion(confusion(labels, predictions));

  let pValue: number | null = null;
  const P = opts.nPermutations ?? 0;
  if (P > 0) {
    let exceed = 0;
    for (let p = 0; p < P; p++) {
      const permuted = rng.shuffle(labels.map((y) => y));
      const permSamples = samples.map((s, i) => ({ ...s, label: permuted[i] }));
      const preds = runFolds(permSamples, permuted, folds, opts, 1 + p);
      const acc =
        preds.filter((yp, i) => yp === permuted[i]).length / permuted.length;
      if (acc >= observed.accuracy - 1e-12) exceed++;
    }
    pValue = (1 + exceed) / (P + 1);
  }

  const trainIndices = folds.map((testIdx) => {
    const testSet = new Set(testIdx);
    return samples.map((_, i) => i).filter((i) => !testSet.has(i));
  });
  return {
    report: { ...observed, p_value: pValue },
    foldIndices: folds,
    trainIndices,
    predictions,
  };
}
