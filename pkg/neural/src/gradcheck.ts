/**
 * Float64 gradient arithmetic for the linear head.
 *
 * The head maps a frozen anchor vector T_i to a score T_i . w + b, trained
 * with mean block MSE. These helpers compute that loss and its analytic
 * gradient in plain float64, independent of the tensor library, so the
 * analytic form can be compared against central finite differences.
 */

export interface FrozenBlock {
  /** Anchor vectors, one row per sentence. */
  vectors: number[][];
  targets: number[];
}

export interface HeadGradient {
  loss: number;
  dw: number[];
  db: number;
}

export function headLoss(blocks: FrozenBlock[], w: number[], b: number): number {
  let total = 0;
  for (const block of blocks) {
    let mse = 0;
    for (let i = 0; i < block.vectors.length; i++) {
      let y = b;
      for (let j = 0; j < w.length; j++) {
        y += block.vectors[i][j] * w[j];
      }
      const residual = y - block.targets[i];
      mse += residual * residual;
    }
    total += mse / block.vectors.length;
  }
  return total / blocks.length;
}

export function headGradient(blocks: FrozenBlock[], w: number[], b: number): HeadGradient {
  const dw = new Array<number>(w.length).fill(0);
  let db = 0;
  let total = 0;
  for (const block of blocks) {
    const n = block.vectors.length;
    let mse = 0;
    for (let i = 0; i < n; i++) {
      let y = b;
      for (let j = 0; j < w.length; j++) {
        y += block.vectors[i][j] * w[j];
      }
      const residual = y - block.targets[i];
      mse += residual * residual;
      const scale = (2 * residual) / (n * blocks.length);
      for (let j = 0; j < w.length; j++) {
        dw[j] += scale * block.vectors[i][j];
      }
      db += scale;
    }
    total += mse / n;
  }
  return { loss: total / blocks.length, dw, db };
}

export function finiteDifferenceGradient(
  blocks: FrozenBlock[],
  w: number[],
  b: number,
  h = 1e-6
): HeadGradient {
  const dw = new Array<number>(w.length).fill(0);
  for (let j = 0; j < w.length; j++) {
    const plus = w.slice();
    const minus = w.slice();
    plus[j] += h;
    minus[j] -= h;
    dw[j] = (headLoss(blocks, plus, b) - headLoss(blocks, minus, b)) / (2 * h);
  }
  const db = (headLoss(blocks, w, b + h) - headLoss(blocks, w, b - h)) / (2 * h);
  return { loss: headLoss(blocks, w, b), dw, db };
}
