/**
 * scorer/1 stdio server.
 *
 * Line-delimited JSON over stdin/stdout. The first line out is the
 * handshake {"protocol": "scorer/1", "max_block": N}; after that each
 * request {"id": int, "sentences": [str]} is answered in arrival order
 * with {"id": int, "scores": [float]}. Requests are handled strictly
 * sequentially. Any malformed or oversize request aborts the session
 * with a message on stderr and a nonzero exit, mirroring the protocol
 * rule that a malformed line ends the conversation.
 */

import { createInterface } from 'readline';
import { z } from 'zod';

const RequestSchema = z.object({
  id: z.number().int(),
  sentences: z.array(z.string()),
});

export type ScoreFn = (sentences: string[]) => number[];

export function serve(
  score: ScoreFn,
  maxBlock: number,
  input: NodeJS.ReadableStream,
  output: NodeJS.WritableStream
): Promise<number> {
  output.write(JSON.stringify({ protocol: 'scorer/1', max_block: maxBlock }) + '\n');
  const reader = createInterface({ input, terminal: false });
  return new Promise((resolve) => {
    let done = false;
    const finish = (code: number) => {
      if (!done) {
        done = true;
        reader.close();
        resolve(code);
      }
    };
    const abort = (message: string) => {
      process.stderr.write(`neural-scorer: malformed request: ${message}\n`);
      finish(1);
    };
    reader.on('line', (raw) => {
      if (done) {
        return;
      }
      const line = raw.trim();
      if (!line) {
        return;
      }
      let parsed: unknown;
      try {
        parsed = JSON.parse(line);
      } catch (err) {
        abort(String(err));
        return;
      }
      const request = RequestSchema.safeParse(parsed);
      if (!request.success) {
        abort(request.error.issues[0].message);
        return;
      }
      const { id, sentences } = request.data;
      if (sentences.length > maxBlock) {
        abort(`block has ${sentences.length} sentences; limit is ${maxBlock}`);
        return;
      }
      const scores = sentences.length === 0 ? [] : score(sentences);
      if (scores.some((s) => !Number.isFinite(s))) {
        abort('model produced a non-finite score');
        return;
      }
      output.write(JSON.stringify({ id, scores }) + '\n');
    });
    reader.on('close', () => finish(0));
  });
}
