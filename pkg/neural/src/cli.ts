#!/usr/bin/env node
/**
 * Command line entry points.
 *
 *   serve --checkpoint PATH
 *   train --data PATH --epochs N --lr F --seed N --out PATH
 *
 * train writes the checkpoint to --out and the per-epoch loss log next to
 * it at --out + '.losses.tsv'. serve speaks the scorer/1 protocol on
 * stdin/stdout until the peer closes the pipe.
 */

import fs from 'fs';
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { readBlocksJsonl } from './blocks';
import { DEFAULT_CONFIG, Model } from './model';
import { serve } from './server';
import { ready } from './tf';
import { formatLossLog, trainModel } from './train';

function fail(message: string): never {
  process.stderr.write(`neural-scorer: ${message}\n`);
  process.exit(1);
}

async function runServe(checkpoint: string): Promise<never> {
  // nothing a dependency logs may contaminate the protocol stream
  console.log = console.error;
  console.info = console.error;
  console.warn = console.error;
  await ready();
  let model: Model;
  try {
    model = Model.fromJSON(fs.readFileSync(checkpoint, 'utf8'));
  } catch (err) {
    fail(err instanceof Error ? err.message : String(err));
  }
  const code = await serve(
    (sentences) => model.scoreSentences(sentences),
    model.config.maxBlock,
    process.stdin,
    process.stdout
  );
  process.exit(code);
}

async function runTrain(
  data: string,
  epochs: number,
  lr: number,
  seed: number,
  out: string
): Promise<never> {
  if (!Number.isInteger(epochs) || epochs < 0) {
    fail(`epochs must be a nonnegative integer, got ${epochs}`);
  }
  if (!(lr > 0)) {
    fail(`learning rate must be positive, got ${lr}`);
  }
  if (!Number.isInteger(seed)) {
    fail(`seed must be an integer, got ${seed}`);
  }
  let blocks;
  try {
    blocks = readBlocksJsonl(data);
  } catch (err) {
    fail(err instanceof Error ? err.message : String(err));
  }
  if (blocks.length === 0) {
    fail(`no labeled blocks in ${data}`);
  }
  await ready();
  const model = new Model({ ...DEFAULT_CONFIG, seed });
  const losses = trainModel(model, blocks, epochs, lr);
  fs.writeFileSync(out, model.toJSON());
  fs.writeFileSync(out + '.losses.tsv', formatLossLog(losses));
  const final = losses.length > 0 ? `, final loss ${losses[losses.length - 1]}` : '';
  process.stdout.write(
    `trained ${epochs} epochs on ${blocks.length} blocks${final}; checkpoint ${out}\n`
  );
  process.exit(0);
}

yargs(hideBin(process.argv))
  .scriptName('neural-scorer')
  .command(
    'serve',
    'serve a checkpoint over the scorer protocol on stdio',
    (y) =>
      y.option('checkpoint', {
        type: 'string',
        demandOption: true,
        describe: 'model checkpoint JSON',
      }),
    (argv) => {
      void runServe(argv.checkpoint);
    }
  )
  .command(
    'train',
    'fit the scorer on labeled blocks',
    (y) =>
      y
        .option('data', { type: 'string', demandOption: true, describe: 'labeled-block JSONL' })
        .option('epochs', { type: 'number', demandOption: true, describe: 'training epochs' })
        .option('lr', { type: 'number', demandOption: true, describe: 'Adam learning rate' })
        .option('seed', { type: 'number', demandOption: true, describe: 'initialization seed' })
        .option('out', { type: 'string', demandOption: true, describe: 'checkpoint output path' }),
    (argv) => {
      void runTrain(argv.data, argv.epochs, argv.lr, argv.seed, argv.out);
    }
  )
  .demandCommand(1, 'specify a command: serve or train')
  .strict()
  .parse();
