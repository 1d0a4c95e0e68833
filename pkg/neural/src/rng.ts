/**
 * Seeded pseudo-random generator for reproducible weight initialization.
 *
 * mulberry32 core with a Box-Muller transform on top. Checkpoints written
 * from the same seed must be byte-identical, so initialization cannot rely
 * on Math.random or on library RNGs whose draw order may change between
 * versions.
 */

export class Rng {
  private state: number;

  constructor(seed: number) {
    this.state = seed >>> 0;
  }

  /** Uniform draw in [0, 1). */
  next(): number {
    this.state = (this.state + 0x6d2b79f5) >>> 0;
    let t = this.state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  }

  /** Standard normal draw scaled by std. Consumes two uniforms per call. */
  normal(std: number): number {
    const u = Math.max(this.next(), 1e-12);
    const v = this.next();
    return std * Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
  }

  /** Integer draw in [0, bound). */
  int(bound: number): number {
    return Math.floor(this.next() * bound);
  }
}
