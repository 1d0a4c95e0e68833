/**
 * Loads tfjs with its startup banner redirected to stderr and selects the
 * compute backend.
 *
 * The scorer protocol reserves stdout for line-delimited JSON, and the
 * client treats any unexpected first line as a malformed handshake, so
 * nothing the library prints at import time may reach stdout.
 *
 * The wasm backend carries the hot kernels; the pure-JS cpu backend is the
 * fallback when the wasm build cannot load, or when NEURAL_SCORER_BACKEND=cpu
 * forces it. Threads are pinned to one so reductions accumulate in a fixed
 * order and repeated runs stay bit-identical.
 */

const originalLog = console.log;
console.log = (...args: unknown[]) => {
  process.stderr.write(args.map(String).join(' ') + '\n');
};
// eslint-disable-next-line @typescript-eslint/no-var-requires
const tf = require('@tensorflow/tfjs') as typeof import('@tensorflow/tfjs');

let requested = 'cpu';
if (process.env.NEURAL_SCORER_BACKEND !== 'cpu') {
  try {
    // eslint-disable-next-line @typescript-eslint/no-var-requires
    const wasm = require('@tensorflow/tfjs-backend-wasm');
    wasm.setThreadsCount(1);
    requested = 'wasm';
  } catch {
    // wasm build unavailable; stay on the pure-JS backend
  }
}
console.log = originalLog;

let activeBackend: string | null = null;

/**
 * Finish backend selection. Must complete before any tensor is created;
 * every entry point awaits this first.
 */
export async function ready(): Promise<string> {
  if (activeBackend !== null) {
    return activeBackend;
  }
  const saved = console.log;
  console.log = (...args: unknown[]) => {
    process.stderr.write(args.map(String).join(' ') + '\n');
  };
  try {
    if (requested === 'wasm') {
      try {
        await tf.setBackend('wasm');
      } catch {
        requested = 'cpu';
      }
    }
    if (requested === 'cpu') {
      await tf.setBackend('cpu');
    }
    await tf.ready();
  } finally {
    console.log = saved;
  }
  activeBackend = tf.getBackend();
  return activeBackend;
}

export default tf;
