"""Random micro-program generators for checking the taint engine against the
tagged-value interpreter.

Two dialects:
  - equivalence programs: straight-line, pointer-resolved calls only, no
    aggregates, no branches. On these the static analysis is expected to agree
    exactly with concrete execution (path reported iff a tag reaches a sink).
  - soundness programs: add loops, branches, objects and arrays. Here the
    analysis may over-approximate but must never miss a concretely observed
    flow. Loop bodies are generated forward-chained (no use of a name before
    its in-body redefinition) so a single abstract pass covers them.
"""

from __future__ import annotations

import random


class _Gen:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.lines: list[str] = []
        self.scalars: list[str] = []  # names holding strings/numbers
        self.objects: list[str] = []
        self.arrays: list[str] = []
        self.vc = 0

    def fresh(self, prefix: str = "v") -> str:
        self.vc += 1
        return f"{prefix}{self.vc}"

    def lit(self) -> str:
        return f'"s{self.rng.randrange(100)}"'

    def scalar_ref(self) -> str:
        if self.scalars and self.rng.random() < 0.85:
            return self.rng.choice(self.scalars)
        return self.lit()


def _expr(g: _Gen, helpers: list[tuple[str, int]], depth: int = 0) -> str:
    r = g.rng.random()
    if depth >= 2:
        return g.scalar_ref()
    if r < 0.35:
        return g.scalar_ref()
    if r < 0.65:
        return f"{_expr(g, helpers, depth + 1)} + {_expr(g, helpers, depth + 1)}"
    if r < 0.80 and helpers:
        name, arity = g.rng.choice(helpers)
        args = ", ".join(_expr(g, helpers, depth + 1) for _ in range(arity))
        return f"{name}({args})"
    if r < 0.90:
        method = g.rng.choice(["toUpperCase()", "trim()", "slice(1)", 'concat("z")'])
        base = g.rng.choice(g.scalars) if g.scalars else g.lit()
        return f'({base} + "m").{method}'  # coerce so the receiver is a string
    return f"parseInt({_expr(g, helpers, depth + 1)})"


def _helper(g: _Gen, index: int, earlier: list[tuple[str, int]]) -> tuple[str, int, str]:
    arity = g.rng.randrange(1, 3)
    params = [f"a{i}" for i in range(arity)]
    sub = _Gen(g.rng)
    sub.scalars = list(params)
    body: list[str] = []
    for _ in range(g.rng.randrange(1, 4)):
        name = sub.fresh("t")
        body.append(f"  const {name} = {_expr(sub, earlier)};")
        sub.scalars.append(name)
    ret = sub.rng.choice(sub.scalars)
    if g.rng.random() < 0.2:
        ret = f'"fixed{index}"'  # concretely clean return
    body.append(f"  return {ret};")
    name = f"h{index}"
    text = f"function {name}({', '.join(params)}) {{\n" + "\n".join(body) + "\n}\n"
    return name, arity, text


def gen_equivalence_program(seed: int) -> str:
    rng = random.Random(seed)
    g = _Gen(rng)
    helpers: list[tuple[str, int]] = []
    parts = ['const { exec, execSync } = require("child_process");\n']
    for i in range(rng.randrange(0, 3)):
        name, arity, text = _helper(g, i, list(helpers))
        helpers.append((name, arity))
        parts.append(text)

    g.scalars = ["p0", "p1"]
    body: list[str] = []
    for _ in range(rng.randrange(3, 8)):
        name = g.fresh()
        body.append(f"  const {name} = {_expr(g, helpers)};")
        g.scalars.append(name)
    for _ in range(rng.randrange(1, 3)):
        sink = rng.choice(["exec", "execSync"])
        body.append(f"  {sink}({g.scalar_ref()});")
    parts.append("function entry(p0, p1) {\n" + "\n".join(body) + "\n}\n")
    parts.append("module.exports = { entry };\n")
    return "".join(parts)


def _cond(g: _Gen) -> str:
    r = g.rng.random()
    if r < 0.4:
        return f"{g.rng.randrange(5)} < {g.rng.randrange(5)}"
    if r < 0.7 and g.scalars:
        return f"{g.rng.choice(g.scalars)}.length < {g.rng.randrange(3, 60)}"
    return g.rng.choice(["true", "false"])


def _agg_read(g: _Gen) -> str | None:
    choices = []
    if g.objects:
        o = g.rng.choice(g.objects)
        choices.append(f"{o}.f{g.rng.randrange(3)}")
    if g.arrays:
        a = g.rng.choice(g.arrays)
        choices.append(f"{a}[{g.rng.randrange(3)}]")
    return g.rng.choice(choices) if choices else None


def _simple_stmts(g: _Gen, helpers, count: int, indent: str = "  ") -> list[str]:
    out: list[str] = []
    for _ in range(count):
        r = g.rng.random()
        if r < 0.45 or not (g.objects or g.arrays):
            name = g.fresh()
            rhs = _expr(g, helpers)
            if g.rng.random() < 0.25:
                agg = _agg_read(g)
                if agg is not None:
                    rhs = f"{rhs} + {agg}"
            out.append(f"{indent}const {name} = {rhs};")
            g.scalars.append(name)
        elif r < 0.75 and g.objects:
            o = g.rng.choice(g.objects)
            if g.rng.random() < 0.5:
                out.append(f"{indent}{o}.f{g.rng.randrange(3)} = {_expr(g, helpers)};")
            else:
                out.append(f"{indent}{o}[{g.rng.randrange(3)}] = {_expr(g, helpers)};")
        elif g.arrays:
            a = g.rng.choice(g.arrays)
            out.append(f"{indent}{a}[{g.rng.randrange(3)}] = {_expr(g, helpers)};")
    return out


def gen_soundness_program(seed: int) -> str:
    rng = random.Random(seed)
    g = _Gen(rng)
    helpers: list[tuple[str, int]] = []
    parts = ['const { exec, execSync } = require("child_process");\n']
    for i in range(rng.randrange(0, 3)):
        name, arity, text = _helper(g, i, list(helpers))
        helpers.append((name, arity))
        parts.append(text)

    g.scalars = ["p0", "p1"]
    body: list[str] = []

    for _ in range(rng.randrange(1, 3)):
        o = g.fresh("o")
        if rng.random() < 0.5:
            body.append(f"  const {o} = {{}};")
        else:
            body.append(f"  const {o} = {{ f0: {_expr(g, helpers)} }};")
        g.objects.append(o)
    if rng.random() < 0.7:
        a = g.fresh("arr")
        body.append(f"  const {a} = [{g.lit()}, {_expr(g, helpers)}];")
        g.arrays.append(a)

    body.extend(_simple_stmts(g, helpers, rng.randrange(2, 5)))

    if rng.random() < 0.8:
        # const declarations are block-scoped: branch-local names must not
        # leak into the statements generated after the if
        outer = list(g.scalars)
        body.append(f"  if ({_cond(g)}) {{")
        body.extend(_simple_stmts(g, helpers, rng.randrange(1, 3), "    "))
        g.scalars = list(outer)
        body.append("  } else {")
        body.extend(_simple_stmts(g, helpers, rng.randrange(1, 3), "    "))
        g.scalars = list(outer)
        body.append("  }")

    # loop with forward-chained accumulator writes
    acc = g.fresh("w")
    body.append(f'  let {acc} = "";')
    g.scalars.append(acc)
    loop_kind = rng.random()
    outer = list(g.scalars)
    loop_body = [f"    {acc} = {acc} + {_expr(g, helpers)};"]
    loop_body.extend(_simple_stmts(g, helpers, rng.randrange(0, 2), "    "))
    g.scalars = list(outer)  # loop-body consts are block-scoped
    if loop_kind < 0.5:
        body.append("  for (let i = 0; i < 2; i = i + 1) {")
        body.extend(loop_body)
        body.append("  }")
    else:
        n = g.fresh("n")
        body.append(f"  let {n} = 0;")
        body.append(f"  while ({n} < 2) {{")
        body.extend(loop_body)
        body.append(f"    {n} = {n} + 1;")
        body.append("  }")

    if g.objects and rng.random() < 0.5:
        src_o = rng.choice(g.objects)
        dst_o = g.fresh("o")
        body.append(f"  const {dst_o} = {{}};")
        g.objects.append(dst_o)
        body.append(f"  for (const k in {src_o}) {{")
        body.append(f"    {dst_o}[k] = {src_o}[k];")
        body.append("  }")

    for _ in range(rng.randrange(1, 3)):
        sink = rng.choice(["exec", "execSync"])
        arg = _agg_read(g) if rng.random() < 0.5 else None
        body.append(f"  {sink}({arg or g.scalar_ref()});")
    parts.append("function entry(p0, p1) {\n" + "\n".join(body) + "\n}\n")
    parts.append("module.exports = { entry };\n")
    return "".join(parts)
