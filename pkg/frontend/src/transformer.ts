/** Transformer sequence classifier with a convolutional front-end.
 *
 * Input (B, T, 3) plus a presence mask (B, T). Masked positions are zeroed
 * before the convolutions, the (stride-halved) mask removes their keys from
 * attention, and pooling averages unmasked token positions only, so values
 * at masked positions can never reach the logits.
 *
 * Conv stack: k=11 s=1 then k=3 s=2 (both 128 channels, each followed by
 * batch norm and ReLU), halving the sequence to ceil(T/2). The 128-channel
 * output is linearly projected to d_model=126 so the 7 attention heads
 * divide it evenly, then 2 encoder layers (dff=56) and a mean-pooled
 * zero-initialized 2-class head (chance-level initial loss = ln 2).
 */

import * as tf from "@tensorflow/tfjs";
import {
  batchNorm,
  conv1d,
  countParams,
  dense,
  encoderLayer,
  positionalEncoding,
} from "./layers.js";
import { Rng } from "./rng.js";

export interface ModelConfig {
  inputDim: number;
  convChannels: number;
  conv1Kernel: number;
  conv2Kernel: number;
  conv2Stride: number;
  dModel: number;
  numHeads: number;
  numLayers: number;
  dimFeedforward: number;
  numClasses: number;
}

export const DEFAULT_CONFIG: ModelConfig = {
  inputDim: 3,
  convChannels: 128,
  conv1Kernel: 11,
  conv2Kernel: 3,
  conv2Stride: 2,
  dModel: 126,
  numHeads: 7,
  numLayers: 2,
  dimFeedforward: 56,
  numClasses: 2,
};

export interface SequenceModel {
  config: ModelConfig;
  variables: tf.Variable[];
  /** x: (B, T, inputDim), mask: (B, T) of 0/1 -> logits (B, numClasses). */
  forward(x: tf.Tensor3D, mask: tf.Tensor2D, training: boolean): tf.Tensor2D;
  countParams(): number;
  getWeights(): { shape: number[]; data: number[] }[];
  setWeights(weights: { shape: number[]; data: number[] }[]): void;
}

export function downsampledLength(T: number, stride: number): number {
  return Math.ceil(T / stride);
}

export function buildTransformer(
  config: ModelConfig = DEFAULT_CONFIG,
  seed = 0,
): SequenceModel {
  if (config.dModel % config.numHeads !== 0) {
    throw new Error(
      `dModel ${config.dModel} must be divisible by numHeads ${config.numHeads}`,
    );
  }
  const rng = new Rng(seed);
  const c1 = conv1d(rng, config.inputDim, config.convChannels, config.conv1Kernel, 1);
  const bn1 = batchNorm(config.convChannels);
  const c2 = conv1d(
    rng, config.convChannels, config.convChannels, config.conv2Kernel, config.conv2Stride,
  );
  const bn2 = batchNorm(config.convChannels);
  const proj = dense(rng, config.convChannels, config.dModel);
  const layers = Array.from({ length: config.numLayers }, () =>
    encoderLayer(rng, config.dModel, config.numHeads, config.dimFeedforward),
  );
  const head = dense(rng, config.dModel, config.numClasses, true);

  const variables = [
    ...c1.variables, ...bn1.variables, ...c2.variables, ...bn2.variables,
    ...proj.variables, ...layers.flatMap((l) => l.variables), ...head.variables,
  ];

  // no tf.tidy here: callers scope memory (tf.tidy for inference,
  // variableGrads' own scope during training)
  const forward = (x: tf.Tensor3D, mask: tf.Tensor2D, training: boolean): tf.Tensor2D => {
    const [B, T] = [x.shape[0], x.shape[1]];
    const maskF = tf.cast(mask, "float32");
    let h: tf.Tensor3D = tf.mul(x, tf.expandDims(maskF, 2)) as tf.Tensor3D;
    h = tf.relu(bn1.apply(c1.apply(h), training)) as tf.Tensor3D;
    h = tf.relu(bn2.apply(c2.apply(h), training)) as tf.Tensor3D;

    const T2 = downsampledLength(T, config.conv2Stride);
    // conv output position t is centered on input position stride*t
    const idx = tf.tensor1d(
      Array.from({ length: T2 }, (_, t) => t * config.conv2Stride), "int32",
    );
    const maskDs = tf.gather(maskF, idx, 1) as tf.Tensor2D;

    let tokens = tf.reshape(
      proj.apply(tf.reshape(h, [B * T2, config.convChannels])),
      [B, T2, config.dModel],
    ) as tf.Tensor3D;
    tokens = tf.add(tokens, positionalEncoding(T2, config.dModel)) as tf.Tensor3D;
    for (const layer of layers) {
      tokens = layer.apply(tokens, maskDs, training);
    }

    const weights = tf.expandDims(maskDs, 2);
    const pooled = tf.div(
      tf.sum(tf.mul(tokens, weights), 1),
      tf.maximum(tf.sum(weights, 1), 1),
    );
    return head.apply(pooled) as tf.Tensor2D;
  };

  return {
    config,
    variables,
    forward,
    countParams: () => countParams(variables),
    getWeights: () =>
      variables.map((v) => ({
        shape: v.shape.slice(),
        data: Array.from(v.dataSync()),
      })),
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
