import * as tf from "@tensorflow/tfjs";
import { describe, expect, it } from "vitest";
import { buildInception1d } from "../src/inception.js";
import { Rng } from "../src/rng.js";
import { DEFAULT_CONFIG } from "../src/transformer.js";

function randomBatch(B: number, T: number, seed = 1) {
  const rng = new Rng(seed);
  const x = new Float32Array(B * T * 3);
  for (let i = 0; i < x.length; i++) x[i] = rng.normal();
  return tf.tensor3d(x, [B, T, 3]);
}

describe("1D inception baseline", () => {
  it("maps (4, 700, 3) to (4, 2) logits", () => {
    const model = buildInception1d(DEFAULT_CONFIG, 0);
    const logits = tf.tidy(() =>
      model.forward(randomBatch(4, 700), tf.ones([4, 700]) as tf.Tensor2D, false),
    );
    expect(logits.shape).toEqual([4, 2]);
  });

  it("is deterministic under fixed weights", () => {
    const model = buildInception1d(DEFAULT_CONFIG, 1);
    const x = randomBatch(2, 256, 5);
    const mask = tf.ones([2, 256]) as tf.Tensor2D;
    const a = tf.tidy(() => model.forward(x, mask, false).arraySync());
    const b = tf.tidy(() => model.forward(x, mask, false).arraySync());
    expect(b).toEqual(a);
  });

  it("has a stable, pinned parameter count", () => {
    const a = buildInception1d(DEFAULT_CONFIG, 2);
    const b = buildInception1d(DEFAULT_CONFIG, 3);
    expect(a.countParams()).toBe(b.countParams());
    // per conv unit: kernel*in*out + bias(out) + BN gamma/beta (2*out);
    // stem 384 + 3168 + 6336 + 5360 + 46656, block 12480 + (9360 + 15552)
    // + (12480 + 18720 + 27936) + 6240, head 514
    expect(a.countParams()).toBe(165186);
  });
});
