import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import {
  channelStats,
  joinDataset,
  loadLabels,
  loadSequences,
  oversample,
  standardize,
  stratifiedFolds,
  window,
  SequenceSample,
} from "../src/data.js";
import { Rng } from "../src/rng.js";

function writeFixture(): { seq: string; lab: string } {
  const dir = mkdtempSync(join(tmpdir(), "ttfe-"));
  const rows = ["a", "b", "c"].map((vid, i) =>
    JSON.stringify({
      video_id: vid,
      fps: 25.0,
      x: [0.1 * i, 0.2, 0.3],
      y: [0.5, 0.5, 0.5],
      area: [0.01, 0.01, 0.02],
      present: [1, 0, 1],
    }),
  );
  const seq = join(dir, "sequences.jsonl");
  writeFileSync(seq, rows.join("\n") + "\n");
  const lab = join(dir, "labels.csv");
  writeFileSync(lab, "video_id,rater1,rater2\na,4,5\nb,2,2\nc,3,4\n");
  return { seq, lab };
}

function sample(videoId: string, label: number, length = 10): SequenceSample {
  const features = new Float32Array(length * 3).map((_, i) => (i % 3) + 0.1);
  return { videoId, features, mask: new Uint8Array(length).fill(1), length, label };
}

describe("data loading", () => {
  it("loads, binarizes at 3.5, and joins on video id", () => {
    const { seq, lab } = writeFixture();
    const ds = joinDataset(loadSequences(seq), loadLabels(lab));
    expect(ds.map((s) => s.videoId)).toEqual(["a", "b", "c"]);
    expect(ds.map((s) => s.label)).toEqual([1, 0, 1]); // 4.5, 2.0, 3.5(>=) -> high
    expect(ds[0].mask[1]).toBe(0);
  });

  it("rejects orphan video ids", () => {
    const { seq, lab } = writeFixture();
    const labels = loadLabels(lab);
    labels.delete("b");
    labels.set("zz", 1);
    expect(() => joinDataset(loadSequences(seq), labels)).toThrow(/zz/);
  });

  it("window crops and zero-pads with mask 0", () => {
    const s = sample("v", 1, 5);
    const w = window(s, 8, 0);
    expect(Array.from(w.mask)).toEqual([1, 1, 1, 1, 1, 0, 0, 0]);
    expect(w.features[3 * 7]).toBe(0);
    const crop = window(s, 3, 2);
    expect(crop.features[0]).toBe(s.features[6]);
  });

  it("stratified folds cover everything with balanced classes", () => {
    const labels = [...Array(9).fill(0), ...Array(6).fill(1)];
    const folds = stratifiedFolds(labels, 3, new Rng(0));
    const all = folds.flat().sort((a, b) => a - b);
    expect(all).toEqual([...Array(15).keys()]);
    for (const f of folds) {
      expect(f.filter((i) => labels[i] === 0).length).toBe(3);
      expect(f.filter((i) => labels[i] === 1).length).toBe(2);
    }
  });

  it("oversampling balances and only reuses training indices", () => {
    const labels = [0, 0, 0, 0, 0, 0, 1, 1];
    const idx = [...Array(8).keys()];
    const out = oversample(idx, labels, new Rng(1));
    const count1 = out.filter((i) => labels[i] === 1).length;
    const count0 = out.filter((i) => labels[i] === 0).length;
    expect(count1).toBe(count0);
    expect(new Set(out).size).toBeLessThanOrEqual(8);
  });

  it("standardizes with training statistics over unmasked positions", () => {
    const a = sample("a", 0);
    const b = sample("b", 1);
    const stats = channelStats([a]);
    const [sa] = standardize([a], stats);
    const vals = [] as number[];
    for (let t = 0; t < sa.length; t++) vals.push(sa.features[3 * t]);
    const mean = vals.reduce((u, v) => u + v, 0) / vals.length;
    expect(Math.abs(mean)).toBeLessThan(1e-5);
    const [sb] = standardize([b], stats); // same transform applied to b
    expect(sb.features[0]).toBeCloseTo(sa.features[0], 6);
  });
});
