/** Pooled binary classification metrics; class 1 ("high") is positive. */

export interface Confusion {
  tp: number;
  fn: number;
  fp: number;
  tn: number;
}

export interface Report {
  precision: number;
  recall: number;
  accuracy: number;
  kappa: number;
  p_value: number | null;
}

export function confusion(yTrue: number[], yPred: number[]): Confusion {
  if (yTrue.length !== yPred.length) {
    throw new Error("prediction/label length mismatch");
  }
  const c = { tp: 0, fn: 0, fp: 0, tn: 0 };
  for (let i = 0; i < yTrue.length; i++) {
    if (yTrue[i] === 1) {
      yPred[i] === 1 ? c.tp++ : c.fn++;
    } else {
      yPred[i] === 1 ? c.fp++ : c.tn++;
    }
  }
  return c;
}

export function metricsFromConfusion(c: Confusion): Omit<Report, "p_value"> {
  const n = c.tp + c.fn + c.fp + c.tn;
  if (n === 0) throw new Error("empty confusion matrix");
  const accuracy = (c.tp + c.tn) / n;
  const precision = c.tp + c.fp > 0 ? c.tp / (c.tp + c.fp) : 0;
  const recall = c.tp + c.fn > 0 ? c.tp / (c.tp + c.fn) : 0;
  // Cohen's kappa with marginal-based expected agreement
  const pe =
    ((c.tp + c.fn) * (c.tp + c.fp) + (c.tn + c.fp) * (c.tn + c.fn)) / (n * n);
  const kappa = 1 - pe > 1e-12 ? (accuracy - pe) / (1 - pe) : 0;
  return { precision, recall, accuracy, kappa };
}
