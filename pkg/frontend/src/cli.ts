/** Train/evaluate a sequence classifier on tooltrack exports.
 *
 * Usage:
 *   npm run train -- --sequences sequences.jsonl --labels labels.csv \
 *     [--model transformer|inception] [--epochs 60] [--folds 5] [--seed 0] \
 *     [--window 700] [--permutations 0] [--out report.json] [--checkpoint w.json]
 *
 * Prints one JSON report (the five evaluation metrics plus the config echo)
 * to stdout; progress goes to stderr.
 */

import { writeFileSync } from "node:fs";
import { joinDataset, loadLabels, loadSequences } from "./data.js";
import { buildInception1d } from "./inception.js";
import { crossValidate, trainModel } from "./train.js";
import { buildTransformer, DEFAULT_CONFIG } from "./transformer.js";

function parseArgs(argv: string[]): Map<string, string> {
  const out = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`bad argument: ${argv[i]}`);
    }
    out.set(argv[i].slice(2), argv[i + 1]);
  }
  return out;
}

function main(argv: string[]): number {
  let args: Map<string, string>;
  try {
    args = parseArgs(argv);
  } catch (e) {
    console.error(String(e));
    return 2;
  }
  const seqPath = args.get("sequences");
  const labPath = args.get("labels");
  if (!seqPath || !labPath) {
    console.error("required: --sequences PATH --labels PATH");
    return 2;
  }
  const modelKind = args.get("model") ?? "transformer";
  const epochs = parseInt(args.get("epochs") ?? "60", 10);
  const folds = parseInt(args.get("folds") ?? "5", 10);
  const seed = parseInt(args.get("seed") ?? "0", 10);
  const windowLength = parseInt(args.get("window") ?? "700", 10);
  const nPermutations = parseInt(args.get("permutations") ?? "0", 10);

  let samples;
  try {
    samples = joinDataset(loadSequences(seqPath), loadLabels(labPath));
  } catch (e) {
    console.error(String(e));
    return 4;
  }
  console.error(`loaded ${samples.length} labeled sequences`);

  const buildModel = (s: number) =>
    modelKind === "inception"
      ? buildInception1d(DEFAULT_CONFIG, s)
      : buildTransformer(DEFAULT_CONFIG, s);

  const cv = crossValidate(samples, {
    buildModel,
    epochs,
    seed,
    folds,
    windowLength,
    nPermutations,
  });
  console.error("cross-validation done; fitting final model on all data");

  const finalModel = buildModel(seed);
  const fit = trainModel(finalModel, samples, { epochs, seed, windowLength });

  const checkpoint = args.get("checkpoint");
  if (checkpoint) {
    writeFileSync(
      checkpoint,
      JSON.stringify({ model: modelKind, config: finalModel.config,
                       weights: finalModel.getWeights() }),
    );
    console.error(`checkpoint written to ${checkpoint}`);
  }

  const result = {
    report: cv.report,
    train_accuracy: fit.trainAccuracy,
    epochs_run: fit.epochsRun,
    n_videos: samples.length,
    config: {
      model: modelKind, epochs, folds, seed, window: windowLength,
      permutations: nPermutations, optimizer: "adam", learning_rate: 1e-3,
      batch_size: 16, ...finalModel.config,
    },
  };
  const payload = JSON.stringify(result);
  const outPath = args.get("out");
  if (outPath) writeFileSync(outPath, payload + "\n");
  console.log(payload);
  return 0;
}

process.exit(main(process.argv.slice(2)));
