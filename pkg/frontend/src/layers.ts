/** Functional building blocks with seeded, explicitly-owned weights.
 *
 * Every block returns an apply function plus the tf.Variables it owns, so a
 * model is just a closure over deterministic weights; nothing depends on
 * tfjs's global RNG and two builds from the same seed are identical.
 */

import * as tf from "@tensorflow/tfjs";
import { Rng } from "./rng.js";

export interface Block {
  variables: tf.Variable[];
}

export function glorot(rng: Rng, shape: number[], fanIn: number, fanOut: number): tf.Tensor {
  const limit = Math.sqrt(6 / (fanIn + fanOut));
  const n = shape.reduce((a, b) => a * b, 1);
  const data = new Float32Array(n);
  for (let i = 0; i < n; i++) data[i] = (2 * rng.next() - 1) * limit;
  return tf.tensor(data, shape);
}

export interface Dense extends Block {
  apply(x: tf.Tensor): tf.Tensor;
}

export function dense(rng: Rng, inDim: number, units: number, zeroInit = false): Dense {
  const w = tf.variable(
    zeroInit ? tf.zeros([inDim, units]) : glorot(rng, [inDim, units], inDim, units),
  );
  const b = tf.variable(tf.zeros([units]));
  return {
    variables: [w, b],
    apply: (x) => tf.add(tf.matMul(x, w), b),
  };
}

export interface Conv1d extends Block {
  apply(x: tf.Tensor3D): tf.Tensor3D;
}

export function conv1d(
  rng: Rng,
  inChannels: number,
  outChannels: number,
  kernel: number,
  stride: number,
): Conv1d {
  const fanIn = kernel * inChannels;
  const w = tf.variable(
    glorot(rng, [kernel, inChannels, outChannels], fanIn, outChannels),
  ) as tf.Variable<tf.Rank.R3>;
  const b = tf.variable(tf.zeros([outChannels]));
  return {
    variables: [w, b],
    apply: (x) => tf.add(tf.conv1d(x, w, stride, "same"), b) as tf.Tensor3D,
  };
}

export interface BatchNorm extends Block {
  apply(x: tf.Tensor, training: boolean): tf.Tensor;
}

/** Batch normalization over all axes but the last (channel) axis. */
export function batchNorm(channels: number, momentum = 0.9): BatchNorm {
  const gamma = tf.variable(tf.ones([channels]));
  const beta = tf.variable(tf.zeros([channels]));
  const movingMean = tf.variable(tf.zeros([channels]), false);
  const movingVar = tf.variable(tf.ones([channels]), false);
  const eps = 1e-3;
  return {
    variables: [gamma, beta],
    apply: (x, training) => {
      if (!training) {
        return tf.batchNorm(x, movingMean, movingVar, beta, gamma, eps);
      }
      const axes = Array.from({ length: x.rank - 1 }, (_, i) => i);
      const { mean, variance } = tf.moments(x, axes);
      movingMean.assign(
        tf.add(tf.mul(movingMean, momentum), tf.mul(mean, 1 - momentum)),
      );
      movingVar.assign(
        tf.add(tf.mul(movingVar, momentum), tf.mul(variance, 1 - momentum)),
      );
      return tf.batchNorm(x, mean, variance, beta, gamma, eps);
    },
  };
}

export interface LayerNorm extends Block {
  apply(x: tf.Tensor): tf.Tensor;
}

export function layerNorm(dim: number): LayerNorm {
  const gamma = tf.variable(tf.ones([dim]));
  const beta = tf.variable(tf.zeros([dim]));
  return {
    variables: [gamma, beta],
    apply: (x) => {
      const { mean, variance } = tf.moments(x, -1, true);
      const normed = tf.div(tf.sub(x, mean), tf.sqrt(tf.add(variance, 1e-6)));
      return tf.add(tf.mul(normed, gamma), beta);
    },
  };
}

export interface Attention extends Block {
  apply(x: tf.Tensor3D, mask: tf.Tensor2D): tf.Tensor3D;
}

/** Multi-head self-attention; masked key positions get zero weight. */
export function multiHeadAttention(rng: Rng, dModel: number, numHeads: number): Attention {
  if (dModel % numHeads !== 0) {
    throw new Error(`dModel ${dModel} not divisible by numHeads ${numHeads}`);
  }
  const dHead = dModel / numHeads;
  const wq = dense(rng, dModel, dModel);
  const wk = dense(rng, dModel, dModel);
  const wv = dense(rng, dModel, dModel);
  const wo = dense(rng, dModel, dModel);

  const split = (t: tf.Tensor, B: number, T: number) =>
    tf.transpose(tf.reshape(t, [B, T, numHeads, dHead]), [0, 2, 1, 3]);

  return {
    variables: [...wq.variables, ...wk.variables, ...wv.variables, ...wo.variables],
    apply: (x, mask) => {
      const [B, T] = [x.shape[0], x.shape[1]];
      const q = split(wq.apply(tf.reshape(x, [B * T, dModel])), B, T);
      const k = split(wk.apply(tf.reshape(x, [B * T, dModel])), B, T);
      const v = split(wv.apply(tf.reshape(x, [B * T, dModel])), B, T);
      let scores = tf.div(tf.matMul(q, k, false, true), Math.sqrt(dHead));
      // additive -1e9 on masked keys -> softmax weight ~ 0
      const keyMask = tf.reshape(mask, [B, 1, 1, T]);
      scores = tf.add(scores, tf.mul(tf.sub(1, keyMask), -1e9));
      const weights = tf.softmax(scores, -1);
      const ctx = tf.matMul(weights, v); // [B, h, T, dHead]
      const merged = tf.reshape(tf.transpose(ctx, [0, 2, 1, 3]), [B * T, dModel]);
      return tf.reshape(wo.apply(merged), [B, T, dModel]) as tf.Tensor3D;
    },
  };
}

export interface EncoderLayer extends Block {
  apply(x: tf.Tensor3D, mask: tf.Tensor2D, training: boolean): tf.Tensor3D;
}

export function encoderLayer(
  rng: Rng,
  dModel: number,
  numHeads: number,
  dff: number,
): EncoderLayer {
  const attn = multiHeadAttention(rng, dModel, numHeads);
  const ff1 = dense(rng, dModel, dff);
  const ff2 = dense(rng, dff, dModel);
  const ln1 = layerNorm(dModel);
  const ln2 = layerNorm(dModel);
  return {
    variables: [
      ...attn.variables, ...ff1.variables, ...ff2.variables,
      ...ln1.variables, ...ln2.variables,
    ],
    apply: (x, mask, _training) => {
      const [B, T] = [x.shape[0], x.shape[1]];
      const attended = ln1.apply(tf.add(x, attn.apply(x, mask))) as tf.Tensor3D;
      const flat = tf.reshape(attended, [B * T, dModel]);
      const ffOut = ff2.apply(tf.relu(ff1.apply(flat)));
      const out = ln2.apply(tf.add(flat, ffOut));
      return tf.reshape(out, [B, T, dModel]) as tf.Tensor3D;
    },
  };
}

/** Fixed sinusoidal positions added after the projection. */
export function positionalEncoding(maxLen: number, dModel: number): tf.Tensor2D {
  const data = new Float32Array(maxLen * dModel);
  for (let pos = 0; pos < maxLen; pos++) {
    for (let i = 0; i < dModel; i++) {
      const angle = pos / Math.pow(10000, (2 * Math.floor(i / 2)) / dModel);
      data[pos * dModel + i] = i % 2 === 0 ? Math.sin(angle) : Math.cos(angle);
    }
  }
  return tf.tensor2d(data, [maxLen, dModel]);
}

export function countParams(variables: tf.Variable[]): number {
  return variables.reduce((n, v) => n + v.size, 0);
}
