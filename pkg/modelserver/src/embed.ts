/** Hashed bag-of-words embeddings matching the engine's default provider:
 * lowercase, split on non-alphanumeric runs, FNV-1a 64-bit bucket mod D,
 * term counts, L2-normalized. */

export const DIM = 256;

const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;
const MASK64 = 0xffffffffffffffffn;

export function fnv1a64(token: string): bigint {
  let h = FNV_OFFSET;
  for (const byte of Buffer.from(token, "utf-8")) {
    h = ((h ^ BigInt(byte)) * FNV_PRIME) & MASK64;
  }
  return h;
}

export function tokenize(text: string): string[] {
  return text.toLowerCase().split(/[^0-9a-z]+/).filter((t) => t.length > 0);
}

export function embedText(text: string, dim: number = DIM): number[] {
  const tokens = tokenize(text);
  if (tokens.length === 0) {
    throw new Error(`no tokens in ${JSON.stringify(text)}`);
  }
  const vec = new Array<number>(dim).fill(0);
  for (const tok of tokens) {
    vec[Number(fnv1a64(tok) % BigInt(dim))] += 1;
  }
  const norm = Math.sqrt(vec.reduce((s, x) => s + x * x, 0));
  return vec.map((x) => x / norm);
}
