/**
 * Reader/writer for the AMRA binary tensor format.
 *
 * Layout: magic "AMRA", version u16 LE, dtype code u8 (f32 = 1, f64 = 2),
 * rank u8, dims as u64 LE, raw little-endian data, then an optional layout
 * record (u32 length + UTF-8 JSON).
 */

export const MAGIC = "AMRA";
export const VERSION = 1;

export type Dtype = "float32" | "float64";

export interface BlockDoc {
  name: string;
  rows: [number, number];
  cols: [number, number];
}

export interface LayoutDoc {
  kind: string;
  level: number;
  shape: number[];
  blocks: BlockDoc[];
  meta: Record<string, unknown>;
  level_map?: number[][];
}

export interface Tensor {
  data: Float64Array | Float32Array;
  shape: number[];
  dtype: Dtype;
  layout?: LayoutDoc;
}

const DTYPE_CODES: Record<Dtype, number> = { float32: 1, float64: 2 };

export class FormatError extends Error {}

function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export function encode(tensor: Tensor): Buffer {
  const { data, shape, dtype, layout } = tensor;
  if (data.length !== elementCount(shape)) {
    throw new FormatError(
      `data length ${data.length} does not match shape [${shape}]`,
    );
  }
  const itemSize = dtype === "float32" ? 4 : 8;
  const header = Buffer.alloc(8 + 8 * shape.length);
  header.write(MAGIC, 0, "ascii");
  header.writeUInt16LE(VERSION, 4);
  header.writeUInt8(DTYPE_CODES[dtype], 6);
  header.writeUInt8(shape.length, 7);
  shape.forEach((dim, i) => header.writeBigUInt64LE(BigInt(dim), 8 + 8 * i));
  // typed arrays are little-endian on every supported platform
  const payload = Buffer.from(data.buffer, data.byteOffset, data.length * itemSize);
  const parts = [header, payload];
  if (layout !== undefined) {
    const blob = Buffer.from(JSON.stringify(layout), "utf-8");
    const len = Buffer.alloc(4);
    len.writeUInt32LE(blob.length, 0);
    parts.push(len, blob);
  }
  return Buffer.concat(parts);
}

export function decode(raw: Buffer): Tensor {
  if (raw.length < 8 || raw.toString("ascii", 0, 4) !== MAGIC) {
    throw new FormatError(`bad magic ${raw.subarray(0, 4).toString("hex")}`);
  }
  const version = raw.readUInt16LE(4);
  if (version !== VERSION) throw new FormatError(`unsupported version ${version}`);
  const code = raw.readUInt8(6);
  const rank = raw.readUInt8(7);
  const dtype: Dtype = code === 1 ? "float32" : code === 2 ? "float64" : (() => {
    throw new FormatError(`unknown dtype code ${code}`);
  })();
  let off = 8;
  if (raw.length < off + 8 * rank) throw new FormatError("truncated dims");
  const shape: number[] = [];
  for (let i = 0; i < rank; i++) {
    shape.push(Number(raw.readBigUInt64LE(off)));
    off += 8;
  }
  const count = elementCount(shape);
  const itemSize = dtype === "float32" ? 4 : 8;
  if (raw.length < off + count * itemSize) throw new FormatError("truncated payload");
  // copy into an aligned buffer before constructing the typed array view
  const slab = Buffer.alloc(count * itemSize);
  raw.copy(slab, 0, off, off + count * itemSize);
  const data =
    dtype === "float32"
      ? new Float32Array(slab.buffer, 0, count)
      : new Float64Array(slab.buffer, 0, count);
  off += count * itemSize;
  let layout: LayoutDoc | undefined;
  if (off < raw.length) {
    if (raw.length < off + 4) throw new FormatError("truncated layout record");
    const blobLen = raw.readUInt32LE(off);
    off += 4;
    if (raw.length < off + blobLen) throw new FormatError("truncated layout record");
    layout = JSON.parse(raw.toString("utf-8", off, off + blobLen)) as LayoutDoc;
  }
  return { data, shape, dtype, layout };
}
