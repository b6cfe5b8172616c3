/**
 * Pluggable frozen encoders.
 *
 * An Encoder maps texts and image files to unit-norm embedding rows. The
 * built-in `hash-<dim>` family is a deterministic feature-hashing encoder:
 * no weights, no I/O, byte-identical output on every run. It stands in for
 * a real vision-language backbone in tests and smoke pipelines; production
 * bundles plug in an encoder that shells out to one.
 */

export interface Encoder {
  /** Identifier recorded in run summaries, e.g. "hash-512". */
  readonly id: string;
  readonly dim: number;
  /** One unit-norm row for the given text. */
  encodeText(text: string): Float64Array;
  /** One unit-norm row for the given image file contents. */
  encodeImage(bytes: Uint8Array): Float64Array;
}

const FNV_OFFSET = 0x811c9dc5;
const FNV_PRIME = 0x01000193;

function fnv1a(seed: number, byte: number): number {
  let h = seed ^ (byte & 0xff);
  h = Math.imul(h, FNV_PRIME);
  return h >>> 0;
}

function hashString(s: string, seed = FNV_OFFSET): number {
  let h = seed;
  for (let i = 0; i < s.length; i++) {
    const code = s.charCodeAt(i);
    h = fnv1a(h, code & 0xff);
    h = fnv1a(h, code >>> 8);
  }
  return h;
}

function addToken(acc: Float64Array, hash: number, weight: number): void {
  const bucket = hash % acc.length;
  const sign = (hash & 0x80000000) === 0 ? 1 : -1;
  acc[bucket] += sign * weight;
}

function normalized(acc: Float64Array, what: string): Float64Array {
  let sq = 0;
  for (let i = 0; i < acc.length; i++) sq += acc[i] * acc[i];
  const norm = Math.sqrt(sq);
  if (norm === 0) throw new Error(`cannot encode ${what}: empty feature vector`);
  const out = new Float64Array(acc.length);
  for (let i = 0; i < acc.length; i++) out[i] = acc[i] / norm;
  return out;
}

class HashEncoder implements Encoder {
  readonly id: string;
  readonly dim: number;

  constructor(dim: number) {
    if (!Number.isInteger(dim) || dim <= 0) {
      throw new Error(`encoder dimension must be a positive integer, got ${dim}`);
    }
    this.id = `hash-${dim}`;
    this.dim = dim;
  }

  encodeText(text: string): Float64Array {
    const acc = new Float64Array(this.dim);
    const words = text.toLowerCase().split(/[^a-z0-9{}]+/).filter(w => w.length > 0);
    for (let i = 0; i < words.length; i++) {
      addToken(acc, hashString(words[i]), 1.0);
      if (i + 1 < words.length) {
        addToken(acc, hashString(`${words[i]} ${words[i + 1]}`), 0.5);
      }
    }
    return normalized(acc, `text ${JSON.stringify(text)}`);
  }

  encodeImage(bytes: Uint8Array): Float64Array {
    if (bytes.length === 0) throw new Error('cannot encode an empty image file');
    const acc = new Float64Array(this.dim);
    // Rolling 4-byte window so the embedding depends on local byte order,
    // not just the histogram.
    let h = FNV_OFFSET;
    for (let i = 0; i < bytes.length; i++) {
      h = fnv1a(h, bytes[i]);
      if (i >= 3) {
        addToken(acc, h, 1.0);
        h = fnv1a(FNV_OFFSET, bytes[i - 2]);
        h = fnv1a(h, bytes[i - 1]);
        h = fnv1a(h, bytes[i]);
      }
    }
    addToken(acc, hashString(`len:${bytes.length}`), 1.0);
    return normalized(acc, 'image bytes');
  }
}

/** Resolve an encoder identifier. Supported: hash-<dim>. */
export function createEncoder(id: string): Encoder {
  const m = /^hash-(\d+)$/.exec(id);
  if (m) return new HashEncoder(Number(m[1]));
  throw new Error(`unknown encoder ${JSON.stringify(id)}; supported: hash-<dim>`);
}
