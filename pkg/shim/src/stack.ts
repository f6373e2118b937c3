/**
 * Call-stack capture via the V8 structured stack-trace API. Shim frames and
 * node-internal frames are trimmed; files inside the sandbox root are
 * rewritten to root-relative paths so traces are position-independent.
 */
import * as path from "path";

import { Frame } from "./trace";

const SHIM_DIR = __dirname + path.sep;

let sandboxRoot: string | undefined;

export function initStack(env: NodeJS.ProcessEnv): void {
  sandboxRoot = env.VULNSAGE_SANDBOX_ROOT;
}

export function relativize(file: string): string {
  if (!sandboxRoot) return file;
  const prefix = sandboxRoot.endsWith(path.sep) ? sandboxRoot : sandboxRoot + path.sep;
  // the root may appear embedded (e.g. inside an eval origin string)
  return file.split(prefix).join("");
}

export function captureStack(skip: Function): Frame[] {
  const prevLimit = Error.stackTraceLimit;
  const prevPrepare = Error.prepareStackTrace;
  Error.stackTraceLimit = 64;
  Error.prepareStackTrace = (_err, sites) => sites;
  const holder: { stack?: NodeJS.CallSite[] } = {};
  Error.captureStackTrace(holder, skip);
  const sites = holder.stack ?? [];
  Error.prepareStackTrace = prevPrepare;
  Error.stackTraceLimit = prevLimit;

  const frames: Frame[] = [];
  for (const site of sites) {
    const rawFile = site.getFileName() ?? site.getEvalOrigin() ?? "<anonymous>";
    if (rawFile.startsWith(SHIM_DIR)) continue; // our own wrappers
    if (rawFile.startsWith("node:")) continue; // runtime internals
    frames.push({
      fn: site.getFunctionName() ?? site.getMethodName() ?? "",
      file: relativize(String(rawFile)),
      line: site.getLineNumber() ?? 0,
    });
  }
  return frames;
}
