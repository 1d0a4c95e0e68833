/**
 * Tiny transformer encoder with a linear scoring head.
 *
 * A block of sentences is encoded with per-sentence anchor tags, run through
 * a stack of self-attention layers, and the hidden vector at each anchor
 * position is mapped to one score by the head. Blocks are padded into one
 * batch and pad positions are masked out of attention, so a whole training
 * set moves through the backend as a handful of tensor ops per layer.
 * Weights are float32 tfjs variables; initialization is driven entirely by
 * the seeded Rng so a given (config, seed) pair always produces the same
 * checkpoint bytes.
 */

import type { Scalar, Tensor, Variable } from '@tensorflow/tfjs';

import tf from './tf';
import { Rng } from './rng';
import {
  DEFAULT_ENCODER,
  EncodedBlock,
  EncoderConfig,
  PAD_ID,
  encodeBlock,
} from './encoder';

export interface ModelConfig extends EncoderConfig {
  dim: number;
  layers: number;
  ffDim: number;
  seed: number;
}

export const DEFAULT_CONFIG: ModelConfig = {
  ...DEFAULT_ENCODER,
  dim: 32,
  layers: 2,
  ffDim: 64,
  seed: 0,
};

export interface LabeledBlock {
  pmid: string;
  start: number;
  sentences: string[];
  targets: number[];
}

const CHECKPOINT_FORMAT = 'neural-scorer/1';
const LN_EPSILON = 1e-5;
const INIT_STD = 0.02;
const MASK_OFF = -1e9;

interface SavedWeight {
  shape: number[];
  values: number[];
}

/**
 * Padded batch of encoded blocks, reusable across epochs.
 *
 * Token, segment, position, and anchor lookups are stored as constant
 * one-hot selection matrices so every trainable read is a matmul. That
 * keeps the differentiable graph inside the kernel set every backend
 * implements; plain gather has no wasm gradient.
 */
export class PreparedBatch {
  readonly rows: number;
  readonly len: number;
  /** Sentence count per block, in batch order. */
  readonly counts: number[];
  readonly tokSelect: Tensor;
  readonly segSelect: Tensor;
  readonly posSelect: Tensor;
  readonly anchorSelect: Tensor;
  readonly maskAdd: Tensor;

  constructor(blocks: EncodedBlock[], vocab: number, maxLen: number) {
    this.rows = blocks.length;
    this.len = Math.max(...blocks.map((b) => b.ids.length));
    this.counts = blocks.map((b) => b.anchors.length);
    const flat = this.rows * this.len;
    const tok = new Float32Array(flat * vocab);
    const seg = new Float32Array(flat * 2);
    const maskAdd = new Float32Array(flat);
    const flatAnchors: number[] = [];
    for (let r = 0; r < this.rows; r++) {
      const block = blocks[r];
      const base = r * this.len;
      for (let j = 0; j < this.len; j++) {
        const id = j < block.ids.length ? block.ids[j] : PAD_ID;
        tok[(base + j) * vocab + id] = 1;
        seg[(base + j) * 2 + (j < block.ids.length ? block.segments[j] : 0)] = 1;
      }
      for (let j = block.ids.length; j < this.len; j++) {
        maskAdd[base + j] = MASK_OFF;
      }
      for (const a of block.anchors) {
        flatAnchors.push(base + a);
      }
    }
    const pos = new Float32Array(this.len * maxLen);
    for (let i = 0; i < this.len; i++) {
      pos[i * maxLen + i] = 1;
    }
    const anchors = new Float32Array(flatAnchors.length * flat);
    for (let i = 0; i < flatAnchors.length; i++) {
      anchors[i * flat + flatAnchors[i]] = 1;
    }
    this.tokSelect = tf.tensor2d(tok, [flat, vocab]);
    this.segSelect = tf.tensor2d(seg, [flat, 2]);
    this.posSelect = tf.tensor2d(pos, [this.len, maxLen]);
    this.anchorSelect = tf.tensor2d(anchors, [flatAnchors.length, flat]);
    this.maskAdd = tf.tensor3d(maskAdd, [this.rows, 1, this.len]);
  }

  dispose(): void {
    this.tokSelect.dispose();
    this.segSelect.dispose();
    this.posSelect.dispose();
    this.anchorSelect.dispose();
    this.maskAdd.dispose();
  }
}

export class Model {
  readonly config: ModelConfig;
  private weights: Map<string, Variable>;

  constructor(config: ModelConfig = DEFAULT_CONFIG) {
    this.config = { ...config };
    this.weights = new Map();
    const rng = new Rng(config.seed);
    // creation order fixes the rng draw order; changing it invalidates
    // nothing at runtime but breaks checkpoint reproducibility tests
    this.addNormal(rng, 'tok', [config.vocab, config.dim]);
    this.addNormal(rng, 'pos', [config.maxLen, config.dim]);
    this.addNormal(rng, 'seg', [2, config.dim]);
    for (let l = 0; l < config.layers; l++) {
      const p = `L${l}.`;
      for (const name of ['wq', 'wk', 'wv', 'wo']) {
        this.addNormal(rng, p + name, [config.dim, config.dim]);
      }
      for (const name of ['bq', 'bk', 'bv', 'bo']) {
        this.addConstant(p + name, [config.dim], 0);
      }
      this.addConstant(p + 'ln1g', [config.dim], 1);
      this.addConstant(p + 'ln1b', [config.dim], 0);
      this.addNormal(rng, p + 'w1', [config.dim, config.ffDim]);
      this.addConstant(p + 'b1', [config.ffDim], 0);
      this.addNormal(rng, p + 'w2', [config.ffDim, config.dim]);
      this.addConstant(p + 'b2', [config.dim], 0);
      this.addConstant(p + 'ln2g', [config.dim], 1);
      this.addConstant(p + 'ln2b', [config.dim], 0);
    }
    this.addNormal(rng, 'head.w', [config.dim, 1]);
    this.addConstant('head.b', [1], 0);
  }

  // variables stay anonymous in the engine: registering tfjs names would
  // make two live models collide on them
  private addNormal(rng: Rng, name: string, shape: number[]): void {
    const size = shape.reduce((a, b) => a * b, 1);
    const values = new Float32Array(size);
    for (let i = 0; i < size; i++) {
      values[i] = rng.normal(INIT_STD);
    }
    this.weights.set(name, tf.variable(tf.tensor(values, shape), true));
  }

  private addConstant(name: string, shape: number[], fill: number): void {
    const size = shape.reduce((a, b) => a * b, 1);
    const values = new Float32Array(size).fill(fill);
    this.weights.set(name, tf.variable(tf.tensor(values, shape), true));
  }

  get variables(): Variable[] {
    return [...this.weights.values()];
  }

  private w(name: string): Variable {
    const v = this.weights.get(name);
    if (v === undefined) {
      throw new Error(`unknown weight ${name}`);
    }
    return v;
  }

  /** Right-multiply the flattened positions of x by a [dim, dim'] matrix. */
  private project(x: Tensor, rows: number, len: number, name: string): Tensor {
    const w = this.w(name);
    const [inDim, outDim] = w.shape as [number, number];
    return x
      .reshape([rows * len, inDim])
      .matMul(w)
      .add(this.w(name.replace('.w', '.b')))
      .reshape([rows, len, outDim]);
  }

  private layerNorm(x: Tensor, gamma: Tensor, beta: Tensor): Tensor {
    const mu = x.mean(-1, true);
    const centered = x.sub(mu);
    const variance = centered.square().mean(-1, true);
    return centered.div(variance.add(LN_EPSILON).sqrt()).mul(gamma).add(beta);
  }

  private encoderLayer(layer: number, x: Tensor, batch: PreparedBatch): Tensor {
    const p = `L${layer}.`;
    const { rows, len } = batch;
    // single attention head; at dim=32 splitting heads buys nothing
    const q = this.project(x, rows, len, p + 'wq');
    const k = this.project(x, rows, len, p + 'wk');
    const v = this.project(x, rows, len, p + 'wv');
    const logits = q
      .matMul(k, false, true)
      .div(Math.sqrt(this.config.dim))
      .add(batch.maskAdd);
    const mixed = this.project(tf.softmax(logits, -1).matMul(v), rows, len, p + 'wo');
    const h = this.layerNorm(x.add(mixed), this.w(p + 'ln1g'), this.w(p + 'ln1b'));
    const ff = this.project(
      tf.relu(this.project(h, rows, len, p + 'w1')),
      rows,
      len,
      p + 'w2'
    );
    return this.layerNorm(h.add(ff), this.w(p + 'ln2g'), this.w(p + 'ln2b'));
  }

  /** Hidden vectors at all anchor positions, one row per sentence. */
  private encode(batch: PreparedBatch): Tensor {
    const { dim } = this.config;
    const embedded = batch.tokSelect
      .matMul(this.w('tok'))
      .add(batch.segSelect.matMul(this.w('seg')))
      .reshape([batch.rows, batch.len, dim]);
    let x = embedded.add(batch.posSelect.matMul(this.w('pos')));
    for (let l = 0; l < this.config.layers; l++) {
      x = this.encoderLayer(l, x, batch);
    }
    return batch.anchorSelect.matMul(x.reshape([batch.rows * batch.len, dim]));
  }

  /** Scores for every sentence in the batch, block order preserved. */
  forward(batch: PreparedBatch): Tensor {
    return this.encode(batch).matMul(this.w('head.w')).add(this.w('head.b')).squeeze([1]);
  }

  prepare(blocks: string[][]): PreparedBatch {
    return new PreparedBatch(
      blocks.map((s) => encodeBlock(s, this.config)),
      this.config.vocab,
      this.config.maxLen
    );
  }

  scoreSentences(sentences: string[]): number[] {
    const batch = this.prepare([sentences]);
    const scores = tf.tidy(() => this.forward(batch));
    const out = Array.from(scores.dataSync());
    scores.dispose();
    batch.dispose();
    return out;
  }

  /** Anchor vectors as plain arrays, for head-only gradient checks. */
  anchorVectors(sentences: string[]): number[][] {
    const batch = this.prepare([sentences]);
    const anchored = tf.tidy(() => this.encode(batch));
    const flat = anchored.dataSync();
    anchored.dispose();
    batch.dispose();
    const rows: number[][] = [];
    for (let i = 0; i < sentences.length; i++) {
      rows.push(Array.from(flat.subarray(i * this.config.dim, (i + 1) * this.config.dim)));
    }
    return rows;
  }

  /** Current head parameters as plain arrays. */
  head(): { w: number[]; b: number } {
    return {
      w: Array.from(this.w('head.w').dataSync()),
      b: this.w('head.b').dataSync()[0],
    };
  }

  /**
   * Mean over blocks of the per-block sentence MSE, as a weighted sum with
   * per-sentence weight 1 / (blocks * block sentences).
   */
  batchLoss(batch: PreparedBatch, targets: Tensor, sentenceWeights: Tensor): Scalar {
    const scores = this.forward(batch);
    return scores.sub(targets).square().mul(sentenceWeights).sum() as Scalar;
  }

  meanLoss(blocks: LabeledBlock[]): Scalar {
    const batch = this.prepare(blocks.map((b) => b.sentences));
    const targets = tf.tensor1d(blocks.flatMap((b) => b.targets), 'float32');
    const weights = tf.tensor1d(
      blocks.flatMap((b) => b.targets.map(() => 1 / (blocks.length * b.targets.length))),
      'float32'
    );
    const loss = this.batchLoss(batch, targets, weights);
    batch.dispose();
    targets.dispose();
    weights.dispose();
    return loss;
  }

  lossOn(blocks: LabeledBlock[]): number {
    const loss = tf.tidy(() => this.meanLoss(blocks));
    const value = loss.dataSync()[0];
    loss.dispose();
    return value;
  }

  toJSON(): string {
    const { vocab, maxLen, maxBlock, dim, layers, ffDim, seed } = this.config;
    const weights: Record<string, SavedWeight> = {};
    for (const name of [...this.weights.keys()].sort()) {
      const v = this.w(name);
      weights[name] = { shape: v.shape.slice(), values: Array.from(v.dataSync()) };
    }
    return JSON.stringify({
      format: CHECKPOINT_FORMAT,
      config: { vocab, maxLen, maxBlock, dim, layers, ffDim, seed },
      weights,
    });
  }

  static fromJSON(text: string): Model {
    let parsed: unknown;
    try {
      parsed = JSON.parse(text);
    } catch (err) {
      throw new Error(`checkpoint is not valid JSON: ${err}`);
    }
    const entry = parsed as {
      format?: unknown;
      config?: Partial<ModelConfig>;
      weights?: Record<string, SavedWeight>;
    };
    if (entry.format !== CHECKPOINT_FORMAT) {
      throw new Error(`unsupported checkpoint format ${JSON.stringify(entry.format)}`);
    }
    if (entry.config === undefined || entry.weights === undefined) {
      throw new Error('checkpoint is missing config or weights');
    }
    const model = new Model({ ...DEFAULT_CONFIG, ...entry.config });
    for (const [name, variable] of model.weights) {
      const saved = entry.weights[name];
      if (saved === undefined) {
        throw new Error(`checkpoint is missing weight ${name}`);
      }
      if (saved.shape.join(',') !== variable.shape.join(',')) {
        throw new Error(
          `weight ${name} has shape [${saved.shape}]; expected [${variable.shape}]`
        );
      }
      variable.assign(tf.tensor(new Float32Array(saved.values), saved.shape));
    }
    return model;
  }

  dispose(): void {
    for (const v of this.weights.values()) {
      v.dispose();
    }
    this.weights.clear();
  }
}
