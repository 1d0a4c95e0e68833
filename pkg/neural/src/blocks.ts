/**
 * Labeled-block JSONL reader.
 *
 * One JSON object per line: {"pmid": str, "start": int, "sentences": [str],
 * "targets": [float]}, the training format produced by the pipeline's
 * labeling stage. Blank lines are skipped; anything else malformed is a
 * hard error with the offending line number.
 */

import fs from 'fs';
import { z } from 'zod';

import { LabeledBlock } from './model';

const BlockSchema = z
  .object({
    pmid: z.string(),
    start: z.number().int().nonnegative(),
    sentences: z.array(z.string()).min(1),
    targets: z.array(z.number()),
  })
  .refine((b) => b.targets.length === b.sentences.length, {
    message: 'targets length must equal sentences length',
  });

export function parseBlocksJsonl(text: string, source: string): LabeledBlock[] {
  const blocks: LabeledBlock[] = [];
  const lines = text.split('\n');
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) {
      continue;
    }
    let parsed: unknown;
    try {
      parsed = JSON.parse(line);
    } catch (err) {
      throw new Error(`${source}:${i + 1}: invalid JSON: ${err}`);
    }
    const result = BlockSchema.safeParse(parsed);
    if (!result.success) {
      throw new Error(`${source}:${i + 1}: ${result.error.issues[0].message}`);
    }
    blocks.push(result.data);
  }
  return blocks;
}

export function readBlocksJsonl(path: string): LabeledBlock[] {
  return parseBlocksJsonl(fs.readFileSync(path, 'utf8'), path);
}
