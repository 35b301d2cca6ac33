/** Loading and sampling of motion sequences exported by the tracking pipeline.
 *
 * sequences.jsonl rows: {"video_id", "fps", "x": [...], "y": [...],
 * "area": [...], "present": [0/1 ...]} with coordinates already normalized
 * by image size. labels.csv: video_id,rater1,rater2 (1-5 each); the mean is
 * binarized at 3.5, >= 3.5 meaning class 1 (high efficiency).
 */

import { readFileSync } from "node:fs";
import { Rng } from "./rng.js";

export interface SequenceSample {
  videoId: string;
  /** T x 3 row-major (x, y, area). */
  features: Float32Array;
  mask: Uint8Array;
  length: number;
  label: number;
}

export const BINARY_CUTOFF = 3.5;

export function loadSequences(path: string): Map<string, Omit<SequenceSample, "label">> {
  const out = new Map<string, Omit<SequenceSample, "label">>();
  const lines = readFileSync(path, "utf-8").split("\n").filter(Boolean);
  for (const line of lines) {
    const row = JSON.parse(line);
    const T = row.x.length;
    if (row.y.length !== T || row.area.length !== T || row.present.length !== T) {
      throw new Error(`${row.video_id}: series arrays disagree on length`);
    }
    const features = new Float32Array(T * 3);
    const mask = new Uint8Array(T);
    for (let t = 0; t < T; t++) {
      features[3 * t] = row.x[t];
      features[3 * t + 1] = row.y[t];
      features[3 * t + 2] = row.area[t];
      mask[t] = row.present[t] ? 1 : 0;
    }
    out.set(row.video_id, { videoId: row.video_id, features, mask, length: T });
  }
  return out;
}

export function loadLabels(path: string): Map<string, number> {
  const lines = readFileSync(path, "utf-8").split("\n").filter(Boolean);
  if (lines[0].replace(/\s/g, "") !== "video_id,rater1,rater2") {
    throw new Error(`${path}: expected header video_id,rater1,rater2`);
  }
  const out = new Map<string, number>();
  for (const line of lines.slice(1)) {
    const [vid, r1, r2] = line.split(",");
    const mean = (parseInt(r1, 10) + parseInt(r2, 10)) / 2;
    out.set(vid, mean >= BINARY_CUTOFF ? 1 : 0);
  }
  return out;
}

export function joinDataset(
  sequences: Map<string, Omit<SequenceSample, "label">>,
  labels: Map<string, number>,
): SequenceSample[] {
  const missingLabels = [...sequences.keys()].filter((v) => !labels.has(v));
  const missingSequences = [...labels.keys()].filter((v) => !sequences.has(v));
  if (missingLabels.length || missingSequences.length) {
    throw new Error(
      `video ids do not line up; sequences without labels: [${missingLabels}]; ` +
        `labels without sequences: [${missingSequences}]`,
    );
  }
  return [...sequences.values()]
    .sort((a, b) => a.videoId.localeCompare(b.videoId))
    .map((s) => ({ ...s, label: labels.get(s.videoId)! }));
}

/** Crop (or zero-pad, mask 0) one sample to a fixed window length. */
export function window(
  s: SequenceSample,
  length: number,
  offset: number,
): { features: Float32Array; mask: Uint8Array } {
  const features = new Float32Array(length * 3);
  const mask = new Uint8Array(length);
  for (let t = 0; t < length; t++) {
    const src = offset + t;
    if (src < s.length) {
      features[3 * t] = s.features[3 * src];
      features[3 * t + 1] = s.features[3 * src + 1];
      features[3 * t + 2] = s.features[3 * src + 2];
      mask[t] = s.mask[src];
    }
  }
  return { features, mask };
}

export function randomWindowOffset(s: SequenceSample, length: number, rng: Rng): number {
  return s.length > length ? rng.int(s.length - length + 1) : 0;
}

/** Stratified k folds: per-class shuffle then round-robin deal. */
export function stratifiedFolds(labels: number[], k: number, rng: Rng): number[][] {
  const folds: number[][] = Array.from({ length: k }, () => []);
  for (const cls of [0, 1]) {
    const idx = labels.map((y, i) => [y, i]).filter(([y]) => y === cls).map(([, i]) => i);
    rng.shuffle(idx);
    idx.forEach((sample, pos) => folds[pos % k].push(sample));
  }
  return folds.map((f) => f.sort((a, b) => a - b));
}

/** Balance classes by re-drawing minority indices with replacement. */
export function oversample(indices: number[], labels: number[], rng: Rng): number[] {
  const by: number[][] = [[], []];
  for (const i of indices) by[labels[i]].push(i);
  if (by[0].length === 0 || by[1].length === 0 || by[0].length === by[1].length) {
    return [...indices];
  }
  const minority = by[0].length < by[1].length ? by[0] : by[1];
  const deficit = Math.abs(by[0].length - by[1].length);
  const extra = Array.from({ length: deficit }, () => minority[rng.int(minority.length)]);
  return [...indices, ...extra];
}

/** Per-channel mean/std over unmasked positions of the given samples. */
export function channelStats(samples: SequenceSample[]): { mean: number[]; std: number[] } {
  const sum = [0, 0, 0];
  const sumSq = [0, 0, 0];
  let n = 0;
  for (const s of samples) {
    for (let t = 0; t < s.length; t++) {
      if (!s.mask[t]) continue;
      n++;
      for (let c = 0; c < 3; c++) {
        const v = s.features[3 * t + c];
        sum[c] += v;
        sumSq[c] += v * v;
      }
    }
  }
  if (n === 0) throw new Error("no unmasked samples to standardize on");
  const mean = sum.map((v) => v / n);
  const std = sumSq.map((v, c) => Math.sqrt(Math.max(v / n - mean[c] * mean[c], 1e-12)));
  return { mean, std };
}

/** Standardize a copy of each sample with training-fold statistics. */
export function standardize(
  samples: SequenceSample[],
  stats: { mean: number[]; std: number[] },
): SequenceSample[] {
  return samples.map((s) => {
    const features = new Float32Array(s.features.length);
    for (let t = 0; t < s.length; t++) {
      for (let c = 0; c < 3; c++) {
        features[3 * t + c] = s.mask[t]
          ? (s.features[3 * t + c] - stats.mean[c]) / stats.std[c]
          : 0;
      }
    }
    return { ...s, features };
  });
}
