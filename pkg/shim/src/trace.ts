/**
 * Trace emission: UTF-8 JSON lines, one event per line.
 * Schema (bit-exact contract with the validator):
 *   {"kind":"...","api":"...","args":[...],"stack":[{"fn":"...","file":"...","line":N}]}
 */
import * as fs from "fs";

export type Frame = { fn: string; file: string; line: number };

export type TraceEvent = {
  kind: "child-exec" | "code-eval" | "fs-read" | "proto-write";
  api: string;
  args: string[];
  stack: Frame[];
};

const ARG_LIMIT = 512;

let tracePath: string | undefined;
let warned = false;

export function initTrace(env: NodeJS.ProcessEnv): void {
  tracePath = env.VULNSAGE_TRACE_PATH;
}

export function emit(event: TraceEvent): void {
  if (!tracePath) return;
  // every sink event must carry a nonempty stack; the exit probe is the one
  // exception. This also drops runtime-internal noise (e.g. the module
  // loader's own file reads), whose frames are all trimmed.
  if (event.api !== "exit-probe" && event.stack.length === 0) return;
  try {
    fs.appendFileSync(tracePath, JSON.stringify(event) + "\n");
  } catch {
    if (!warned) {
      warned = true;
      process.stderr.write("trace-shim: trace file unwritable, passing through\n");
    }
  }
}

/** String coercion with truncation; non-coercible values become a type tag. */
export function serialize(value: unknown): string {
  let text: string;
  try {
    text = String(value);
  } catch {
    text = `[${typeof value}]`;
  }
  return text.length > ARG_LIMIT ? text.slice(0, ARG_LIMIT) : text;
}

export function serializeAll(values: unknown[]): string[] {
  return values.map(serialize);
}
