import { execFileSync } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { Rng } from "../src/rng.js";

const T = 64;

function writeDataset(dir: string, n = 12): { seq: string; lab: string } {
  const rng = new Rng(3);
  const rows: string[] = [];
  const labels = ["video_id,rater1,rater2"];
  for (let i = 0; i < n; i++) {
    const high = i % 2 === 0;
    const x: number[] = [];
    const y: number[] = [];
    const area: number[] = [];
    const present: number[] = [];
    let px = 0.5;
    let py = 0.5;
    for (let t = 0; t < T; t++) {
      px += high ? 0.006 : 0.001 * rng.normal();
      py += high ? 0.004 : 0.001 * rng.normal();
      x.push(px);
      y.push(py);
      area.push(0.05);
      present.push(t % 13 === 0 ? 0 : 1);
    }
    const vid = `v${String(i).padStart(2, "0")}`;
    rows.push(JSON.stringify({ video_id: vid, fps: 25.0, x, y, area, present }));
    labels.push(`${vid},${high ? 4 : 2},${high ? 5 : 2}`);
  }
  const seq = join(dir, "sequences.jsonl");
  const lab = join(dir, "labels.csv");
  writeFileSync(seq, rows.join("\n") + "\n");
  writeFileSync(lab, labels.join("\n") + "\n");
  return { seq, lab };
}

function runCli(args: string[]): { code: number; stdout: string } {
  try {
    const stdout = execFileSync("npx", ["tsx", "src/cli.ts", ...args], {
      encoding: "utf-8",
      stdio: ["ignore", "pipe", "pipe"],
    });
    return { code: 0, stdout };
  } catch (e: any) {
    return { code: e.status ?? 1, stdout: e.stdout ?? "" };
  }
}

describe("frontend cli", () => {
  it("trains on exported sequences and writes report + checkpoint", () => {
    const dir = mkdtempSync(join(tmpdir(), "ttfe-cli-"));
    const { seq, lab } = writeDataset(dir);
    const report = join(dir, "report.json");
    const ckpt = join(dir, "ckpt.json");
    const { code, stdout } = runCli([
      "--sequences", seq, "--labels", lab, "--epochs", "2", "--folds", "3",
      "--window", String(T), "--seed", "1", "--out", report, "--checkpoint", ckpt,
    ]);
    expect(code).toBe(0);
    const payload = JSON.parse(stdout);
    expect(Object.keys(payload.report).sort()).toEqual(
      ["accuracy", "kappa", "p_value", "precision", "recall"],
    );
    expect(payload.config.num_heads ?? payload.config.numHeads).toBe(7);
    expect(payload.config.dModel).toBe(126);
    expect(existsSync(report)).toBe(true);
    const saved = JSON.parse(readFileSync(ckpt, "utf-8"));
    expect(saved.model).toBe("transformer");
    expect(saved.weights.length).toBeGreaterThan(10);
  });

  it("exits nonzero when video ids do not line up", () => {
    const dir = mkdtempSync(join(tmpdir(), "ttfe-cli-"));
    const { seq, lab } = writeDataset(dir, 6);
    const mangled = readFileSync(lab, "utf-8").replace("v05", "v99");
    writeFileSync(lab, mangled);
    const { code } = runCli([
      "--sequences", seq, "--labels", lab, "--epochs", "1", "--window", String(T),
    ]);
    expect(code).toBe(4);
  });
});
