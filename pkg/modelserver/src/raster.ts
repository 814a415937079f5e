import { PNG } from "pngjs";

/** Row-major RGB8 raster. */
export interface Raster {
  width: number;
  height: number;
  /** length = width * height * 3 */
  pixels: Buffer;
}

/** Decode PNG bytes to RGB, compositing alpha over white. */
export function decodePng(data: Buffer): Raster {
  const png = PNG.sync.read(data);
  const n = png.width * png.height;
  const pixels = Buffer.alloc(n * 3);
  for (let i = 0; i < n; i++) {
    const a = png.data[i * 4 + 3] / 255;
    for (let c = 0; c < 3; c++) {
      const v = png.data[i * 4 + c] * a + 255 * (1 - a);
      pixels[i * 3 + c] = Math.round(v);
    }
  }
  return { width: png.width, height: png.height, pixels };
}

export function encodePng(raster: Raster): Buffer {
  const png = new PNG({ width: raster.width, height: raster.height });
  const n = raster.width * raster.height;
  for (let i = 0; i < n; i++) {
    png.data[i * 4] = raster.pixels[i * 3];
    png.data[i * 4 + 1] = raster.pixels[i * 3 + 1];
    png.data[i * 4 + 2] = raster.pixels[i * 3 + 2];
    png.data[i * 4 + 3] = 255;
  }
  return PNG.sync.write(png);
}

/** Nearest-neighbor upscale: out(i, j) = src(floor(i/f), floor(j/f)). */
export function upscaleNearest(src: Raster, factor: number): Raster {
  if (!Number.isInteger(factor) || factor < 1) {
    throw new Error(`factor must be an integer >= 1, got ${factor}`);
  }
  const w = src.width * factor;
  const h = src.height * factor;
  const pixels = Buffer.alloc(w * h * 3);
  for (let i = 0; i < h; i++) {
    const si = Math.floor(i / factor);
    for (let j = 0; j < w; j++) {
      const sj = Math.floor(j / factor);
      const so = (si * src.width + sj) * 3;
      const oo = (i * w + j) * 3;
      pixels[oo] = src.pixels[so];
      pixels[oo + 1] = src.pixels[so + 1];
      pixels[oo + 2] = src.pixels[so + 2];
    }
  }
  return { width: w, height: h, pixels };
}

/** splitmix64-based deterministic byte stream for seeded-noise images. */
export function seededNoise(width: number, height: number, seed: number): Raster {
  const pixels = Buffer.alloc(width * height * 3);
  let state = BigInt(seed) & 0xffffffffffffffffn;
  const mask = 0xffffffffffffffffn;
  let i = 0;
  while (i < pixels.length) {
    state = (state + 0x9e3779b97f4a7c15n) & mask;
    let z = state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & mask;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & mask;
    z = z ^ (z >> 31n);
    for (let b = 0; b < 8 && i < pixels.length; b++, i++) {
      pixels[i] = Number((z >> BigInt(b * 8)) & 0xffn);
    }
  }
  return { width, height, pixels };
}
