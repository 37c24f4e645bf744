/**
 * Array-in/array-out access to the transform engine.
 *
 * The engine is consumed strictly through its command-line interface and
 * binary tensor format, so results are identical (bit-exact for 64-bit
 * payloads) to what the CLI itself produces. One copy per direction is paid
 * for the file hand-off; no pipeline logic lives here.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { decode, encode, LayoutDoc, Tensor } from "./amra.js";

export { decode, encode, FormatError } from "./amra.js";
export type { BlockDoc, Dtype, LayoutDoc, Tensor } from "./amra.js";

export const version = "0.1.0";

export interface Coefficients {
  data: Float64Array;
  shape: number[];
  layout: LayoutDoc;
}

export class CliError extends Error {}

const CLI = process.env.AMRA_CLI ?? "amra";

function runCli(args: string[]): void {
  const res = spawnSync(CLI, args, { encoding: "utf-8" });
  if (res.error !== undefined) {
    throw new CliError(`failed to launch ${CLI}: ${res.error.message}`);
  }
  if (res.status !== 0) {
    const detail = (res.stderr || res.stdout || "").trim();
    throw new CliError(detail || `${CLI} exited with status ${res.status}`);
  }
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "amra-bindings-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function asFloat64(data: Float64Array | Float32Array): Float64Array {
  return data instanceof Float64Array ? data : Float64Array.from(data);
}

function roundTrip(
  input: Tensor,
  subcommand: string,
  extraArgs: string[],
): Tensor {
  return withTempDir((dir) => {
    const src = join(dir, "in.amra");
    const dst = join(dir, "out.amra");
    writeFileSync(src, encode(input));
    runCli([subcommand, ...extraArgs, "--in", src, "--out", dst]);
    return decode(readFileSync(dst));
  });
}

/** Apply the transform named by a spec string, e.g.
 * "kind=fswt,wavelet=db3,level=3,boundary=reflect". */
export function transform(
  data: Float64Array,
  shape: number[],
  spec: string,
): Coefficients {
  const out = roundTrip(
    { data, shape, dtype: "float64" },
    "transform",
    ["--spec", spec],
  );
  if (out.layout === undefined) {
    throw new CliError("engine returned coefficients without a layout record");
  }
  return { data: asFloat64(out.data), shape: out.shape, layout: out.layout };
}

/** Reconstruct the image from coefficients plus their layout. */
export function inverse(c: Coefficients): { data: Float64Array; shape: number[] } {
  const out = roundTrip(
    { data: c.data, shape: c.shape, dtype: "float64", layout: c.layout },
    "inverse",
    [],
  );
  return { data: asFloat64(out.data), shape: out.shape };
}

/** Divide every sub-band block, per channel, by its max absolute value. */
export function normalize(c: Coefficients): Coefficients {
  const out = roundTrip(
    { data: c.data, shape: c.shape, dtype: "float64", layout: c.layout },
    "normalize",
    [],
  );
  if (out.layout === undefined) {
    throw new CliError("engine returned coefficients without a layout record");
  }
  return { data: asFloat64(out.data), shape: out.shape, layout: out.layout };
}
