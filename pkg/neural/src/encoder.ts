/**
 * Sentence-block encoding: token ids, per-sentence anchor tags, and
 * alternating segment ids.
 *
 * Each sentence is prefixed with an anchor token and suffixed with a
 * separator. The hidden vector at each anchor position is the sentence
 * representation the scoring head reads. Tokens are mapped into a fixed
 * hashing vocabulary, so there is no tokenizer state to ship alongside
 * the model weights.
 */

export const PAD_ID = 0;
export const ANCHOR_ID = 1;
export const SEP_ID = 2;
const RESERVED = 3;

export interface EncoderConfig {
  vocab: number;
  maxLen: number;
  maxBlock: number;
}

export const DEFAULT_ENCODER: EncoderConfig = {
  vocab: 512,
  maxLen: 128,
  maxBlock: 10,
};

export interface EncodedBlock {
  /** Token ids, anchor and separator tags included. */
  ids: number[];
  /** Position of each sentence's anchor token; one entry per sentence. */
  anchors: number[];
  /** Segment id per token, alternating 0/1 by sentence. */
  segments: number[];
}

export function tokenize(text: string): string[] {
  return text
    .toLowerCase()
    .split(/[^\p{L}\p{N}]+/u)
    .filter((t) => t.length > 0);
}

/** FNV-1a hash of a token, folded into the non-reserved id range. */
export function tokenId(token: string, vocab: number): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < token.length; i++) {
    h ^= token.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return RESERVED + (h % (vocab - RESERVED));
}

/**
 * Encode a block of sentences.
 *
 * Sentences are truncated individually before assembly: each gets an equal
 * share of the length budget, so a single overlong sentence cannot crowd
 * the others out of the block or drop their anchors.
 */
export function encodeBlock(sentences: string[], cfg: EncoderConfig = DEFAULT_ENCODER): EncodedBlock {
  if (sentences.length < 1 || sentences.length > cfg.maxBlock) {
    throw new RangeError(`block has ${sentences.length} sentences; limit is ${cfg.maxBlock}`);
  }
  // anchor + separator claim two slots of each sentence's share
  const budget = Math.floor(cfg.maxLen / cfg.maxBlock) - 2;
  const ids: number[] = [];
  const anchors: number[] = [];
  const segments: number[] = [];
  for (let i = 0; i < sentences.length; i++) {
    const seg = i % 2;
    anchors.push(ids.length);
    ids.push(ANCHOR_ID);
    segments.push(seg);
    const tokens = tokenize(sentences[i]).slice(0, budget);
    for (const token of tokens) {
      ids.push(tokenId(token, cfg.vocab));
      segments.push(seg);
    }
    ids.push(SEP_ID);
    segments.push(seg);
  }
  return { ids, anchors, segments };
}
