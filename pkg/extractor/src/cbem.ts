/**
 * CBEM blob serialization.
 *
 * Layout: 4-byte magic "CBEM", then three little-endian uint32 words
 * (format version, rows, cols), then rows*cols IEEE-754 floats,
 * little-endian, row-major. Version 1 carries float32 payloads; version 2
 * carries float64 and is reserved for trained checkpoints, so this tool
 * only ever writes version 1.
 */
import { readFileSync, writeFileSync } from 'node:fs';

export const MAGIC = 'CBEM';
export const BLOB_F32 = 1;
export const BLOB_F64 = 2;
const HEADER_BYTES = 16;

export interface Matrix {
  rows: number;
  cols: number;
  /** Row-major values, length rows*cols. */
  data: Float64Array;
}

export class BlobFormatError extends Error {}

export function encodeBlob(matrix: Matrix): Buffer {
  const { rows, cols, data } = matrix;
  if (!Number.isInteger(rows) || !Number.isInteger(cols) || rows < 0 || cols < 0) {
    throw new BlobFormatError(`invalid blob shape ${rows}x${cols}`);
  }
  if (data.length !== rows * cols) {
    throw new BlobFormatError(
      `payload has ${data.length} values, shape ${rows}x${cols} needs ${rows * cols}`);
  }
  const buf = Buffer.alloc(HEADER_BYTES + 4 * rows * cols);
  buf.write(MAGIC, 0, 'ascii');
  buf.writeUInt32LE(BLOB_F32, 4);
  buf.writeUInt32LE(rows, 8);
  buf.writeUInt32LE(cols, 12);
  for (let i = 0; i < data.length; i++) {
    buf.writeFloatLE(Math.fround(data[i]), HEADER_BYTES + 4 * i);
  }
  return buf;
}

export function decodeBlob(raw: Buffer, name = 'blob'): Matrix {
  if (raw.length < HEADER_BYTES) {
    throw new BlobFormatError(`${name} is truncated (no header)`);
  }
  if (raw.toString('ascii', 0, 4) !== MAGIC) {
    throw new BlobFormatError(`${name} has bad magic ${JSON.stringify(raw.toString('ascii', 0, 4))}`);
  }
  const version = raw.readUInt32LE(4);
  if (version !== BLOB_F32 && version !== BLOB_F64) {
    throw new BlobFormatError(`${name} has unsupported format version ${version}`);
  }
  const rows = raw.readUInt32LE(8);
  const cols = raw.readUInt32LE(12);
  const itemSize = version === BLOB_F32 ? 4 : 8;
  const expected = HEADER_BYTES + itemSize * rows * cols;
  if (raw.length < expected) {
    throw new BlobFormatError(`${name} is truncated: ${raw.length} bytes, expected ${expected}`);
  }
  if (raw.length > expected) {
    throw new BlobFormatError(`${name} has ${raw.length - expected} bytes of trailing data`);
  }
  const data = new Float64Array(rows * cols);
  for (let i = 0; i < data.length; i++) {
    data[i] = version === BLOB_F32
      ? raw.readFloatLE(HEADER_BYTES + 4 * i)
      : raw.readDoubleLE(HEADER_BYTES + 8 * i);
  }
  return { rows, cols, data };
}

export function writeBlobFile(path: string, matrix: Matrix): void {
  writeFileSync(path, encodeBlob(matrix));
}

export function readBlobFile(path: string): Matrix {
  return decodeBlob(readFileSync(path), path);
}
