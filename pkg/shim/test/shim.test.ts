import { execFileSync, spawnSync } from "child_process";
import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { describe, expect, test } from "vitest";

const SHIM = path.resolve(__dirname, "..", "dist", "index.js");
const CANARY = "__t_canary_prop__";

type Run = {
  stdout: string;
  stderr: string;
  status: number | null;
  trace: any[];
};

function runWithShim(code: string, tracePath?: string): Run {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "shimtest-"));
  const prog = path.join(dir, "prog.js");
  fs.writeFileSync(prog, code);
  const trace = tracePath ?? path.join(dir, "trace.jsonl");
  const res = spawnSync(process.execPath, ["--require", SHIM, prog], {
    cwd: dir,
    env: {
      ...process.env,
      VULNSAGE_TRACE_PATH: trace,
      VULNSAGE_PROTO_CANARY: CANARY,
      VULNSAGE_SANDBOX_ROOT: dir,
    },
    encoding: "utf8",
    timeout: 20000,
  });
  let events: any[] = [];
  if (fs.existsSync(trace)) {
    events = fs.readFileSync(trace, "utf8")
      .split("\n")
      .filter((l) => l.trim())
      .map((l) => JSON.parse(l));
  }
  fs.rmSync(dir, { recursive: true, force: true });
  return { stdout: res.stdout, stderr: res.stderr, status: res.status, trace: events };
}

function runPlain(code: string): { stdout: string; status: number | null } {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "plain-"));
  const prog = path.join(dir, "prog.js");
  fs.writeFileSync(prog, code);
  const res = spawnSync(process.execPath, [prog], {
    cwd: dir,
    env: { ...process.env },
    encoding: "utf8",
    timeout: 20000,
  });
  fs.rmSync(dir, { recursive: true, force: true });
  return { stdout: res.stdout, status: res.status };
}

describe("trace emission", () => {
  test("one child-exec call emits exactly one child-exec line", () => {
    const run = runWithShim(
      'require("child_process").execSync("echo once");\n');
    const execs = run.trace.filter((e) => e.kind === "child-exec");
    expect(execs).toHaveLength(1);
    expect(execs[0].api).toBe("child_process.execSync");
    expect(execs[0].args[0]).toBe("echo once");
  });

  test("a sink-free process leaves only the exit probe", () => {
    const run = runWithShim('console.log("quiet");\n');
    expect(run.status).toBe(0);
    expect(run.trace).toHaveLength(1);
    const probe = run.trace[0];
    expect(probe.kind).toBe("proto-write");
    expect(probe.api).toBe("exit-probe");
    expect(probe.args).toEqual([CANARY, "false"]);
    expect(probe.stack).toEqual([]);
  });

  test("events appear in call order", () => {
    const run = runWithShim(
      'const cp = require("child_process");\n' +
      'cp.execSync("echo first");\n' +
      'cp.execSync("echo second");\n');
    const execs = run.trace.filter((e) => e.kind === "child-exec");
    expect(execs.map((e) => e.args[0])).toEqual(["echo first", "echo second"]);
  });

  test("every line matches the validator schema", () => {
    const run = runWithShim(
      'const cp = require("child_process");\n' +
      'cp.execSync("echo x");\n' +
      'eval("1 + 1");\n' +
      'require("fs").readFileSync("prog.js", "utf8");\n');
    const kinds = new Set(["child-exec", "code-eval", "fs-read", "proto-write"]);
    for (const ev of run.trace) {
      expect(Object.keys(ev).sort()).toEqual(["api", "args", "kind", "stack"]);
      expect(kinds.has(ev.kind)).toBe(true);
      expect(Array.isArray(ev.args)).toBe(true);
      for (const arg of ev.args) expect(typeof arg).toBe("string");
      for (const frame of ev.stack) {
        expect(Object.keys(frame).sort()).toEqual(["file", "fn", "line"]);
        expect(typeof frame.line).toBe("number");
      }
      if (ev.api !== "exit-probe") {
        expect(ev.stack.length).toBeGreaterThan(0); // only the probe may be bare
      }
    }
  });

  test("arguments are truncated to 512 characters", () => {
    const run = runWithShim(
      'require("child_process").execSync("true" + " ".repeat(1), ' +
      '{ env: { BIG: "x".repeat(2000) } });\n' +
      'eval("\\"" + "y".repeat(900) + "\\"");\n');
    for (const ev of run.trace) {
      for (const arg of ev.args) expect(arg.length).toBeLessThanOrEqual(512);
    }
  });
});

describe("prototype pollution probe", () => {
  test("polluting the root prototype flips the probe and records a stack", () => {
    const run = runWithShim(
      "function pollute(o, p) { o[\"__proto__\"][p] = 1; }\n" +
      `pollute({}, "${CANARY}");\n`);
    const probe = run.trace.find((e) => e.api === "exit-probe");
    expect(probe.args).toEqual([CANARY, "true"]);
    const write = run.trace.find((e) => e.api === "canary-setter");
    expect(write).toBeDefined();
    expect(write.args[0]).toBe(CANARY);
    expect(write.stack.length).toBeGreaterThan(0);
    expect(write.stack[0].fn).toBe("pollute");
  });

  test("ordinary shadowing writes stay transparent and unreported", () => {
    const run = runWithShim(
      `const o = {};\no["${CANARY}"] = 5;\n` +
      `if (o["${CANARY}"] !== 5) throw new Error("shadow write broken");\n` +
      `const fresh = {};\n` +
      `if (fresh["${CANARY}"] !== undefined) throw new Error("leaked");\n` +
      'console.log("transparent");\n');
    expect(run.status).toBe(0);
    expect(run.stdout).toContain("transparent");
    const probe = run.trace.find((e) => e.api === "exit-probe");
    expect(probe.args[1]).toBe("false");
  });
});

describe("hook details", () => {
  test("eval passes values through and records code", () => {
    const run = runWithShim('console.log(eval("6 * 7"));\n');
    expect(run.stdout.trim()).toBe("42");
    const ev = run.trace.find((e) => e.kind === "code-eval");
    expect(ev.api).toBe("eval");
    expect(ev.args[0]).toBe("6 * 7");
  });

  test("Function constructor is hooked", () => {
    const run = runWithShim('console.log(new Function("return 3 + 4")());\n');
    expect(run.stdout.trim()).toBe("7");
    const ev = run.trace.find((e) => e.api === "Function");
    expect(ev).toBeDefined();
  });

  test("readFileSync echoes root-relative path and content", () => {
    const run = runWithShim(
      'require("fs").writeFileSync("data.txt", "planted-content");\n' +
      'console.log(require("fs").readFileSync("data.txt", "utf8"));\n');
    const ev = run.trace.find((e) => e.kind === "fs-read" && e.args[0] === "data.txt");
    expect(ev).toBeDefined();
    expect(ev.args[1]).toBe("planted-content");
    expect(run.stdout).toContain("planted-content");
  });

  test("unwritable trace path passes through with one warning", () => {
    const run = runWithShim('console.log("still works");\n',
      "/nonexistent-dir-zz/trace.jsonl");
    expect(run.status).toBe(0);
    expect(run.stdout).toContain("still works");
    const warnings = run.stderr.split("\n").filter((l) => l.includes("trace-shim"));
    expect(warnings).toHaveLength(1);
  });
});

describe("transparency", () => {
  const benign = [
    'console.log("plain");\n',
    'console.log([1, 2, 3].map((x) => x * 2).join(","));\n',
    'console.log(require("child_process").execSync("echo out").toString().trim());\n',
    'const fs = require("fs");\nfs.writeFileSync("f.txt", "data");\nconsole.log(fs.readFileSync("f.txt", "utf8"));\n',
    'console.log(eval("6 * 7"));\n',
    'console.log(require("child_process").spawnSync("echo", ["argv"]).stdout.toString().trim());\n',
    'console.log(require("path").join("a", "b", "..", "c"));\n',
    "function f(n) { return n < 2 ? n : f(n - 1) + f(n - 2); }\nconsole.log(f(12));\n",
    'const o = {};\no.x = 1;\nconsole.log(JSON.stringify(o));\n',
    'console.log(new Function("return 3 + 4")());\n',
  ];

  test.each(benign.map((code, i) => [i, code]))(
    "benign program %i behaves identically with and without the shim",
    (_i, code) => {
      const plain = runPlain(code as string);
      const shimmed = runWithShim(code as string);
      expect(shimmed.stdout).toBe(plain.stdout);
      expect(shimmed.status).toBe(plain.status);
    });
});
