/** 1D multi-channel convolution baseline.
 *
 * Mirrors the reference image classifier's pre-inception stem and its first
 * inception block, with every 2D operation turned 1D: stem convs
 * 32-32-64 / pool / 80-192 / pool, then four parallel branches (1x1;
 * 1x1->5; 1x1->3->3; avgpool->1x1) concatenated to 256 channels, global
 * average pooling, and a zero-initialized 2-class head. Batch norm + ReLU
 * follow every convolution.
 */

import * as tf from "@tensorflow/tfjs";
import { BatchNorm, batchNorm, Conv1d, conv1d, countParams, dense } from "./layers.js";
import { Rng } from "./rng.js";
import { SequenceModel, ModelConfig, DEFAULT_CONFIG } from "./transformer.js";

interface ConvUnit {
  variables: tf.Variable[];
  apply(x: tf.Tensor3D, training: boolean): tf.Tensor3D;
}

function convUnit(rng: Rng, inC: number, outC: number, k: number, s = 1): ConvUnit {
  const conv: Conv1d = conv1d(rng, inC, outC, k, s);
  const bn: BatchNorm = batchNorm(outC);
  return {
    variables: [...conv.variables, ...bn.variables],
    apply: (x, training) => tf.relu(bn.apply(conv.apply(x), training)) as tf.Tensor3D,
  };
}

export function buildInception1d(
  config: ModelConfig = DEFAULT_CONFIG,
  seed = 0,
): SequenceModel {
  const rng = new Rng(seed);
  const stem = [
    convUnit(rng, config.inputDim, 32, 3, 2),
    convUnit(rng, 32, 32, 3, 1),
    convUnit(rng, 32, 64, 3, 1),
  ];
  const stem2 = [
    convUnit(rng, 64, 80, 1, 1),
    convUnit(rng, 80, 192, 3, 1),
  ];
  // inception block branches
  const b0 = convUnit(rng, 192, 64, 1);
  const b1a = convUnit(rng, 192, 48, 1);
  const b1b = convUnit(rng, 48, 64, 5);
  const b2a = convUnit(rng, 192, 64, 1);
  const b2b = convUnit(rng, 64, 96, 3);
  const b2c = convUnit(rng, 96, 96, 3);
  const b3 = convUnit(rng, 192, 32, 1);
  const head = dense(rng, 256, config.numClasses, true);

  const units = [...stem, ...stem2, b0, b1a, b1b, b2a, b2b, b2c, b3];
  const variables = [...units.flatMap((u) => u.variables), ...head.variables];

  const maxPool1d = (t: tf.Tensor3D): tf.Tensor3D =>
    tf.squeeze(
      tf.maxPool(tf.expandDims(t, 1) as tf.Tensor4D, [1, 3], [1, 2], "same"), [1],
    ) as tf.Tensor3D;
  const avgPool1d = (t: tf.Tensor3D): tf.Tensor3D =>
    tf.squeeze(
      tf.avgPool(tf.expandDims(t, 1) as tf.Tensor4D, [1, 3], [1, 1], "same"), [1],
    ) as tf.Tensor3D;

  const forward = (x: tf.Tensor3D, mask: tf.Tensor2D, training: boolean): tf.Tensor2D => {
    const maskF = tf.cast(mask, "float32");
    let h = tf.mul(x, tf.expandDims(maskF, 2)) as tf.Tensor3D;
    for (const u of stem) h = u.apply(h, training);
    h = maxPool1d(h);
    for (const u of stem2) h = u.apply(h, training);
    h = maxPool1d(h);

    const branch0 = b0.apply(h, training);
    const branch1 = b1b.apply(b1a.apply(h, training), training);
    const branch2 = b2c.apply(b2b.apply(b2a.apply(h, training), training), training);
    const branch3 = b3.apply(avgPool1d(h), training);
    const merged = tf.concat([branch0, branch1, branch2, branch3], 2);

    const global = tf.mean(merged, 1);
    return head.apply(global) as tf.Tensor2D;
  };

  return {
    config,
    variables,
    forward,
    countParams: () => countParams(variables),
    getWeights: () =>
      variables.map((v) => ({ shape: v.shape.slice(), data: Array.from(v.dataSync()) })),
    setWeights: (weights) => {
      if (weights.length !== variables.length) {
        throw new Error("checkpoint variable count mismatch");
      }
      weights.forEach((w, i) =>
        variables[i].assign(tf.tensor(w.data, w.shape as number[])),
      );
    },
  };
}
