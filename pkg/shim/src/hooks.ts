/**
 * Sink hooks. Every hook records one trace event and calls straight through
 * to the original implementation, returning its result unchanged.
 *
 * Known limitation: replacing global eval turns direct eval into indirect
 * eval, so evaluated code sees global scope only (module-locals like
 * `require` are not visible inside evaluated payloads).
 */
// plain requires: the hooks mutate the live module objects, and the
// TypeScript namespace-import wrappers are getter-only
import child_process = require("child_process");
import fs = require("fs");
import path = require("path");

import { captureStack, initStack, relativize } from "./stack";
import { emit, initTrace, serialize, serializeAll } from "./trace";

// exec() delegates to the exported execFile, so hooking execFile would emit
// two events for one logical call; the hook family stays exec/execSync/spawn
const SPAWN_APIS = ["exec", "execSync", "spawn", "spawnSync"] as const;
const FS_READ_APIS = ["readFile", "readFileSync", "createReadStream"] as const;

export function installHooks(env: NodeJS.ProcessEnv): void {
  initTrace(env);
  initStack(env);
  hookChildProcess();
  hookEval();
  hookFunctionConstructor();
  hookFsReads();
  installProtoCanary(env.VULNSAGE_PROTO_CANARY);
}

function hookChildProcess(): void {
  for (const name of SPAWN_APIS) {
    const original = (child_process as any)[name];
    if (typeof original !== "function") continue;
    (child_process as any)[name] = function hooked(this: unknown, ...args: unknown[]) {
      emit({
        kind: "child-exec",
        api: `child_process.${name}`,
        args: serializeAll(args),
        stack: captureStack(hooked),
      });
      return original.apply(this, args);
    };
  }
}

function hookEval(): void {
  const realEval = globalThis.eval;
  const hookedEval = function (code: unknown) {
    emit({
      kind: "code-eval",
      api: "eval",
      args: [serialize(code)],
      stack: captureStack(hookedEval),
    });
    return realEval(code as string);
  };
  (globalThis as any).eval = hookedEval;
}

function hookFunctionConstructor(): void {
  const RealFunction = globalThis.Function;
  const Hooked = function (this: unknown, ...args: unknown[]) {
    emit({
      kind: "code-eval",
      api: "Function",
      args: serializeAll(args),
      stack: captureStack(Hooked),
    });
    return RealFunction.apply(this, args as never);
  };
  Hooked.prototype = RealFunction.prototype;
  (globalThis as any).Function = Hooked;
}

function hookFsReads(): void {
  for (const name of FS_READ_APIS) {
    const original = (fs as any)[name];
    if (typeof original !== "function") continue;
    (fs as any)[name] = function hooked(this: unknown, ...args: unknown[]) {
      const result = original.apply(this, args);
      let resolved: string;
      try {
        resolved = path.resolve(String(args[0]));
      } catch {
        resolved = serialize(args[0]);
      }
      // synchronous reads echo the content so the oracle can match it
      const echo = name === "readFileSync" ? serialize(result) : "";
      emit({
        kind: "fs-read",
        api: `fs.${name}`,
        args: [relativize(resolved), echo],
        stack: captureStack(hooked),
      });
      return result;
    };
  }
}

function installProtoCanary(prop: string | undefined): void {
  let polluted = false;
  let stored: unknown;
  if (prop) {
    Object.defineProperty(Object.prototype, prop, {
      configurable: true,
      enumerable: false,
      get() {
        return stored;
      },
      set(this: unknown, value: unknown) {
        if (this === Object.prototype) {
          polluted = true;
          stored = value;
          const setter = Object.getOwnPropertyDescriptor(Object.prototype, prop)!.set!;
          emit({
            kind: "proto-write",
            api: "canary-setter",
            args: [prop, serialize(value)],
            stack: captureStack(setter),
          });
        } else {
          // ordinary shadowing write on a receiver: stay transparent
          Object.defineProperty(this as object, prop, {
            value,
            writable: true,
            enumerable: true,
            configurable: true,
          });
        }
      },
    });
    process.on("exit", () => {
      const descriptor = Object.getOwnPropertyDescriptor(Object.prototype, prop);
      const present = polluted || (descriptor !== undefined && "value" in descriptor);
      emit({
        kind: "proto-write",
        api: "exit-probe",
        args: [prop, present ? "true" : "false"],
        stack: [],
      });
    });
  }
}
