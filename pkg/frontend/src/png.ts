/** Minimal 8-bit grayscale PNG codec.
 *
 * The encoder emits a standard PNG whose zlib stream uses stored
 * (uncompressed) deflate blocks, so any conforming reader can decode
 * it; the decoder reads back exactly that subset and is used by the
 * tests to prove the bytes sent over the wire match the drawn mask.
 */

const SIGNATURE = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];
const MAX_STORED_BLOCK = 0xffff;

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(bytes: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < bytes.length; i++) {
    c = CRC_TABLE[(c ^ bytes[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function adler32(bytes: Uint8Array): number {
  let a = 1;
  let b = 0;
  for (let i = 0; i < bytes.length; i++) {
    a = (a + bytes[i]) % 65521;
    b = (b + a) % 65521;
  }
  return ((b << 16) | a) >>> 0;
}

function u32be(value: number): number[] {
  return [(value >>> 24) & 0xff, (value >>> 16) & 0xff, (value >>> 8) & 0xff, value & 0xff];
}

function chunk(type: string, data: Uint8Array): Uint8Array {
  const typed = new Uint8Array(4 + data.length);
  for (let i = 0; i < 4; i++) typed[i] = type.charCodeAt(i);
  typed.set(data, 4);
  const out = new Uint8Array(12 + data.length);
  out.set(u32be(data.length), 0);
  out.set(typed, 4);
  out.set(u32be(crc32(typed)), 8 + data.length);
  return out;
}

/** Wrap raw bytes in a zlib stream of stored deflate blocks. */
function zlibStored(raw: Uint8Array): Uint8Array {
  const blocks = Math.max(1, Math.ceil(raw.length / MAX_STORED_BLOCK));
  const out = new Uint8Array(2 + raw.length + blocks * 5 + 4);
  out[0] = 0x78; // CM=8, 32K window
  out[1] = 0x01; // no dict, fastest flevel; (0x7801 % 31) === 0
  let pos = 2;
  for (let i = 0; i < blocks; i++) {
    const start = i * MAX_STORED_BLOCK;
    const piece = raw.subarray(start, Math.min(start + MAX_STORED_BLOCK, raw.length));
    out[pos++] = i === blocks - 1 ? 1 : 0; // BFINAL, BTYPE=00
    out[pos++] = piece.length & 0xff;
    out[pos++] = (piece.length >>> 8) & 0xff;
    out[pos++] = ~piece.length & 0xff;
    out[pos++] = (~piece.length >>> 8) & 0xff;
    out.set(piece, pos);
    pos += piece.length;
  }
  out.set(u32be(adler32(raw)), pos);
  return out;
}

/** Encode a width*height byte buffer as an 8-bit grayscale PNG. */
export function encodeGray8Png(data: Uint8Array, width: number, height: number): Uint8Array {
  if (width < 1 || height < 1 || data.length !== width * height) {
    throw new Error(`gray8 buffer of ${data.length} bytes does not match ${width}x${height}`);
  }
  const ihdr = new Uint8Array(13);
  ihdr.set(u32be(width), 0);
  ihdr.set(u32be(height), 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 0; // color type: grayscale
  // compression 0, filter 0, interlace 0

  const raw = new Uint8Array((width + 1) * height);
  for (let y = 0; y < height; y++) {
    raw[y * (width + 1)] = 0; // filter: none
    raw.set(data.subarray(y * width, (y + 1) * width), y * (width + 1) + 1);
  }

  const parts = [
    new Uint8Array(SIGNATURE),
    chunk("IHDR", ihdr),
    chunk("IDAT", zlibStored(raw)),
    chunk("IEND", new Uint8Array(0)),
  ];
  const total = parts.reduce((n, p) => n + p.length, 0);
  const out = new Uint8Array(total);
  let pos = 0;
  for (const p of parts) {
    out.set(p, pos);
    pos += p.length;
  }
  return out;
}

export interface Gray8Image {
  width: number;
  height: number;
  data: Uint8Array;
}

/** Decode a gray8 PNG written by encodeGray8Png (stored blocks, filter 0 only). */
export function decodeGray8Png(bytes: Uint8Array): Gray8Image {
  for (let i = 0; i < 8; i++) {
    if (bytes[i] !== SIGNATURE[i]) throw new Error("not a PNG: bad signature");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let pos = 8;
  let width = 0;
  let height = 0;
  let sawIhdr = false;
  const idat: Uint8Array[] = [];
  while (pos + 12 <= bytes.length) {
    const length = view.getUint32(pos);
    const type = String.fromCharCode(bytes[pos + 4], bytes[pos + 5], bytes[pos + 6], bytes[pos + 7]);
    const data = bytes.subarray(pos + 8, pos + 8 + length);
    const stored = view.getUint32(pos + 8 + length);
    if (crc32(bytes.subarray(pos + 4, pos + 8 + length)) !== stored) {
      throw new Error(`crc mismatch in ${type} chunk`);
    }
    if (type === "IHDR") {
      width = view.getUint32(pos + 8);
      height = view.getUint32(pos + 12);
      if (data[8] !== 8 || data[9] !== 0) {
        throw new Error("unsupported PNG: expected 8-bit grayscale");
      }
      if (data[12] !== 0) throw new Error("unsupported PNG: interlaced");
      sawIhdr = true;
    } else if (type === "IDAT") {
      idat.push(data);
    } else if (type === "IEND") {
      break;
    }
    pos += 12 + length;
  }
  if (!sawIhdr) throw new Error("not a PNG: missing IHDR");

  const zlen = idat.reduce((n, p) => n + p.length, 0);
  const z = new Uint8Array(zlen);
  let zpos = 0;
  for (const p of idat) {
    z.set(p, zpos);
    zpos += p.length;
  }
  if (zlen < 6 || (z[0] & 0x0f) !== 8) throw new Error("bad zlib header");

  const raw = new Uint8Array((width + 1) * height);
  let rpos = 0;
  let ipos = 2;
  for (;;) {
    const header = z[ipos];
    if ((header & 0x06) !== 0) throw new Error("unsupported deflate: compressed block");
    const len = z[ipos + 1] | (z[ipos + 2] << 8);
    const nlen = z[ipos + 3] | (z[ipos + 4] << 8);
    if ((len ^ nlen) !== 0xffff) throw new Error("bad stored block length");
    raw.set(z.subarray(ipos + 5, ipos + 5 + len), rpos);
    rpos += len;
    ipos += 5 + len;
    if (header & 1) break;
  }
  if (rpos !== raw.length) throw new Error(`scanline bytes: got ${rpos}, want ${raw.length}`);
  const checksum = new DataView(z.buffer, z.byteOffset + ipos, 4).getUint32(0);
  if (checksum !== adler32(raw)) throw new Error("adler32 mismatch");

  const data = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    if (raw[y * (width + 1)] !== 0) throw new Error("unsupported PNG filter");
    data.set(raw.subarray(y * (width + 1) + 1, (y + 1) * (width + 1)), y * width);
  }
  return { width, height, data };
}
