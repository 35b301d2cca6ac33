import * as tf from "@tensorflow/tfjs";
import { describe, expect, it } from "vitest";
import { SequenceSample } from "../src/data.js";
import { Rng } from "../src/rng.js";
import { crossEntropy, crossValidate, trainModel } from "../src/train.js";
import { buildTransformer, DEFAULT_CONFIG, ModelConfig } from "../src/transformer.js";

const SMALL: ModelConfig = {
  ...DEFAULT_CONFIG,
  convChannels: 16,
  dModel: 14,
  numLayers: 2,
  dimFeedforward: 16,
};

const T = 64;

/** low = smooth slow drift, high = efficient directed motion */
function syntheticSample(videoId: string, label: number, rng: Rng): SequenceSample {
  const features = new Float32Array(T * 3);
  const mask = new Uint8Array(T).fill(1);
  let x = 0.3 + 0.4 * rng.next();
  let y = 0.3 + 0.4 * rng.next();
  const dirX = rng.next() < 0.5 ? -1 : 1;
  const dirY = rng.next() < 0.5 ? -1 : 1;
  for (let t = 0; t < T; t++) {
    if (label === 1) {
      x += dirX * 0.008 + 0.001 * rng.normal();
      y += dirY * 0.008 + 0.001 * rng.normal();
    } else {
      x += 0.0015 * rng.normal();
      y += 0.0015 * rng.normal();
    }
    features[3 * t] = x;
    features[3 * t + 1] = y;
    features[3 * t + 2] = 0.05 + 0.01 * Math.sin(t / 9);
  }
  return { videoId, features, mask, length: T, label };
}

function syntheticSet(n: number, seed: number): SequenceSample[] {
  const rng = new Rng(seed);
  return Array.from({ length: n }, (_, i) =>
    syntheticSample(`v${i}`, i % 2, rng),
  );
}

describe("training", () => {
  it("overfits 20 separable synthetic sequences within 200 epochs", () => {
    const samples = syntheticSet(20, 7);
    const model = buildTransformer(SMALL, 7);
    const result = trainModel(model, samples, {
      epochs: 200,
      seed: 7,
      batchSize: 20,
      windowLength: T,
      learningRate: 3e-3,
      targetAccuracy: 1.0,
    });
    expect(result.trainAccuracy).toBe(1.0);
    expect(result.epochsRun).toBeLessThanOrEqual(200);
  });

  it("matches finite-difference input gradients within 1e-3 relative", () => {
    const model = buildTransformer(SMALL, 11);
    const B = 2;
    const Tg = 32;
    const rng = new Rng(13);
    const xData = new Float32Array(B * Tg * 3);
    for (let i = 0; i < xData.length; i++) xData[i] = rng.normal();
    const maskArr = new Float32Array(B * Tg).fill(1);
    for (let t = 26; t < Tg; t++) maskArr[t] = 0; // some masking on sample 0
    const mask = tf.tensor2d(maskArr, [B, Tg]);
    const y = tf.tensor1d([0, 1], "int32");

    const lossOf = (data: Float32Array): number =>
      tf.tidy(() =>
        crossEntropy(
          model.forward(tf.tensor3d(data, [B, Tg, 3]), mask, true), y,
        ).dataSync()[0],
      );

    const grad = tf.tidy(() => {
      const g = tf.grad((xt: tf.Tensor3D) =>
        crossEntropy(model.forward(xt, mask, true), y),
      )(tf.tensor3d(xData, [B, Tg, 3]));
      return Float32Array.from(g.dataSync());
    });

    const centralDiff = (flat: number, h: number): number => {
      const plus = xData.slice();
      const minus = xData.slice();
      plus[flat] += h;
      minus[flat] -= h;
      return (lossOf(plus) - lossOf(minus)) / (2 * h);
    };

    const coordRng = new Rng(17);
    let checked = 0;
    while (checked < 10) {
      const b = coordRng.int(B);
      const t = coordRng.int(Tg);
      const c = coordRng.int(3);
      if (maskArr[b * Tg + t] === 0) continue; // masked coords have zero effect
      const flat = (b * Tg + t) * 3 + c;
      // Richardson extrapolation cancels the O(h^2) truncation term
      const d1 = centralDiff(flat, 0.08);
      const d2 = centralDiff(flat, 0.04);
      const fd = (4 * d2 - d1) / 3;
      const ad = grad[flat];
      const rel = Math.abs(fd - ad) / Math.max(Math.abs(fd), Math.abs(ad), 1e-4);
      expect(rel).toBeLessThan(1e-3);
      checked++;
    }
  });

  it("zeroes gradients at masked input positions", () => {
    const model = buildTransformer(SMALL, 19);
    const B = 1;
    const Tg = 16;
    const rng = new Rng(23);
    const xData = new Float32Array(B * Tg * 3);
    for (let i = 0; i < xData.length; i++) xData[i] = rng.normal();
    const maskArr = new Float32Array(Tg).fill(1);
    maskArr[5] = 0;
    maskArr[11] = 0;
    const mask = tf.tensor2d(maskArr, [B, Tg]);
    const y = tf.tensor1d([1], "int32");
    const grad = tf.tidy(() =>
      Array.from(
        tf.grad((xt: tf.Tensor3D) =>
          crossEntropy(model.forward(xt, mask, true), y),
        )(tf.tensor3d(xData, [B, Tg, 3])).dataSync(),
      ),
    );
    for (const t of [5, 11]) {
      for (let c = 0; c < 3; c++) {
        expect(Math.abs(grad[t * 3 + c])).toBe(0);
      }
    }
  });

  it("cross-validates with disjoint folds and high accuracy on separable data", () => {
    const samples = syntheticSet(20, 29);
    const cv = crossValidate(samples, {
      buildModel: (seed) => buildTransformer(SMALL, seed),
      epochs: 60,
      seed: 29,
      batchSize: 16,
      windowLength: T,
      learningRate: 3e-3,
      folds: 5,
      targetAccuracy: 1.0,
    });
    const n = samples.length;
    const seen: number[] = [];
    cv.foldIndices.forEach((test, f) => {
      const train = cv.trainIndices[f];
      expect(test.filter((i) => train.includes(i))).toEqual([]);
      seen.push(...test);
    });
    expect(seen.sort((a, b) => a - b)).toEqual([...Array(n).keys()]);
    expect(cv.report.accuracy).toBeGreaterThanOrEqual(0.8);
    expect(cv.report.kappa).toBeGreaterThan(0.5);
    expect(cv.report.p_value).toBeNull();
  });
});
