/**
 * Full-batch training loop for the block scorer.
 *
 * Every epoch evaluates the mean block MSE over the whole dataset and takes
 * one Adam step. The logged loss is the value before the step, so entry 0
 * is the loss of the initialized model and a zero-epoch run logs nothing.
 * The padded batch is encoded once and reused for every epoch; only the
 * weights change between steps.
 */

import tf from './tf';
import { LabeledBlock, Model } from './model';

export function trainModel(
  model: Model,
  blocks: LabeledBlock[],
  epochs: number,
  learningRate: number,
  onEpoch?: (epoch: number, loss: number) => void
): number[] {
  if (blocks.length === 0) {
    throw new Error('no labeled blocks to train on');
  }
  const batch = model.prepare(blocks.map((b) => b.sentences));
  const targets = tf.tensor1d(blocks.flatMap((b) => b.targets), 'float32');
  const weights = tf.tensor1d(
    blocks.flatMap((b) => b.targets.map(() => 1 / (blocks.length * b.targets.length))),
    'float32'
  );
  const optimizer = tf.train.adam(learningRate);
  const losses: number[] = [];
  try {
    for (let epoch = 0; epoch < epochs; epoch++) {
      const cost = optimizer.minimize(
        () => model.batchLoss(batch, targets, weights),
        true,
        model.variables
      );
      if (cost === null) {
        throw new Error('optimizer returned no cost');
      }
      const loss = cost.dataSync()[0];
      cost.dispose();
      losses.push(loss);
      if (onEpoch !== undefined) {
        onEpoch(epoch, loss);
      }
    }
  } finally {
    optimizer.dispose();
    batch.dispose();
    targets.dispose();
    weights.dispose();
  }
  return losses;
}

export function formatLossLog(losses: number[]): string {
  const lines = ['epoch\tloss'];
  for (let i = 0; i < losses.length; i++) {
    lines.push(`${i}\t${losses[i]}`);
  }
  return lines.join('\n') + '\n';
}
