/** Shared fixtures: paths, a seeded word sampler, and a protocol client. */

import { ChildProcess, spawn, spawnSync } from 'child_process';
import { createInterface, Interface } from 'readline';
import fs from 'fs';
import os from 'os';
import path from 'path';

import { Rng } from '../src/rng';

export const ROOT = path.resolve(__dirname, '..');
export const CLI = path.join(ROOT, 'dist', 'cli.js');
export const TESTDATA = path.join(ROOT, 'testdata', 'blocks.jsonl');

export function tmpdir(prefix: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix));
}

export interface RunResult {
  status: number | null;
  stdout: string;
  stderr: string;
}

export function runCli(args: string[]): RunResult {
  const result = spawnSync(process.execPath, [CLI, ...args], { encoding: 'utf8' });
  return { status: result.status, stdout: result.stdout, stderr: result.stderr };
}

/** Train a checkpoint for tests; throws if the CLI fails. */
export function trainCheckpoint(
  dir: string,
  name: string,
  args: { epochs: number; seed: number; lr?: number; data?: string }
): string {
  const out = path.join(dir, name);
  const result = runCli([
    'train',
    '--data',
    args.data ?? TESTDATA,
    '--epochs',
    String(args.epochs),
    '--lr',
    String(args.lr ?? 0.01),
    '--seed',
    String(args.seed),
    '--out',
    out,
  ]);
  if (result.status !== 0) {
    throw new Error(`train failed: ${result.stderr}`);
  }
  return out;
}

const WORDS = [
  'amyloid', 'tau', 'cohort', 'biomarker', 'plaque', 'hippocampus',
  'dementia', 'clinical', 'sample', 'elevated', 'signal', 'receptor',
  'protein', 'pathway', 'neuron', 'imaging',
];

export function randomSentence(rng: Rng): string {
  const n = 3 + rng.int(9);
  const words: string[] = [];
  for (let i = 0; i < n; i++) {
    words.push(WORDS[rng.int(WORDS.length)]);
  }
  return words.join(' ');
}

export function randomBlock(rng: Rng, maxBlock: number): string[] {
  const n = 1 + rng.int(maxBlock);
  const sentences: string[] = [];
  for (let i = 0; i < n; i++) {
    sentences.push(randomSentence(rng));
  }
  return sentences;
}

/** One scorer server session over child-process stdio. */
export class ScorerClient {
  readonly child: ChildProcess;
  readonly exited: Promise<number | null>;
  stderr = '';
  private reader: Interface;
  private lines: string[] = [];
  private waiters: Array<(line: string) => void> = [];

  constructor(checkpoint: string) {
    this.child = spawn(process.execPath, [CLI, 'serve', '--checkpoint', checkpoint], {
      stdio: ['pipe', 'pipe', 'pipe'],
    });
    this.child.stderr!.on('data', (chunk: Buffer) => {
      this.stderr += chunk.toString();
    });
    this.reader = createInterface({ input: this.child.stdout!, terminal: false });
    this.reader.on('line', (line) => {
      const waiter = this.waiters.shift();
      if (waiter !== undefined) {
        waiter(line);
      } else {
        this.lines.push(line);
      }
    });
    this.exited = new Promise((resolve) => {
      this.child.on('exit', (code) => resolve(code));
    });
  }

  nextLine(): Promise<string> {
    const buffered = this.lines.shift();
    if (buffered !== undefined) {
      return Promise.resolve(buffered);
    }
    return new Promise((resolve) => this.waiters.push(resolve));
  }

  send(raw: string): void {
    this.child.stdin!.write(raw + '\n');
  }

  async request(id: number, sentences: string[]): Promise<{ id: number; scores: number[] }> {
    this.send(JSON.stringify({ id, sentences }));
    return JSON.parse(await this.nextLine());
  }

  close(): void {
    this.child.stdin!.end();
  }

  kill(): void {
    this.child.kill();
  }
}
