"""Call-graph construction.

Call sites are resolved with intra-procedural pointer facts: object creation
(`new C()`), module/require bindings, and plain assignment aliases. When the
pointer facts prove nothing, the fallback adds every model function with the
same bare name and parameter count; a site with no match stays opaque.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..frontend import jsast as ast
from ..frontend.model import ClassDecl, FunctionDecl, ProgramModel, SourceSpan

BUILTIN_MODULES = {
    "child_process", "fs", "path", "os", "util", "http", "https", "crypto",
    "url", "querystring", "zlib", "net", "events", "stream", "buffer", "vm",
}

# Global functions resolvable without a require()
BUILTIN_GLOBALS = {
    "eval": "eval",
    "Function": "Function",
    "parseInt": "parseInt",
    "parseFloat": "parseFloat",
    "String": "String",
    "Number": "Number",
    "Boolean": "Boolean",
    "JSON": None,  # namespace, handled via member access
    "Object": None,
    "Math": None,
    "Array": None,
}

_NAMESPACE_GLOBALS = {"JSON", "Object", "Math", "Array"}


def span_key(span: SourceSpan) -> str:
    return f"{span.file}:{span.start_line}:{span.start_col}:{span.end_line}:{span.end_col}"


@dataclass(frozen=True)
class CallInfo:
    """What is statically known about a call site's callee."""

    dotted: str | None  # textual dotted path as written, e.g. "cp.exec"
    canonical: str | None  # resolved builtin path, e.g. "child_process.exec"
    bare: str | None  # final identifier segment
    is_new: bool = False


@dataclass
class CallEdge:
    call_site: SourceSpan
    caller: str
    candidates: list[str]
    resolution: str  # "pointer" | "nameArity"


@dataclass
class CallGraph:
    nodes: set[str] = field(default_factory=set)
    edges: list[CallEdge] = field(default_factory=list)
    infos: dict[str, CallInfo] = field(default_factory=dict)
    edges_by_site: dict[str, CallEdge] = field(default_factory=dict)

    def add_edge(self, edge: CallEdge) -> None:
        self.edges.append(edge)
        self.edges_by_site[span_key(edge.call_site)] = edge


# Static reference lattice elements (plain tuples, hashable):
#   ("fn", qname)          model function
#   ("cls", name)          model class
#   ("inst", name)         instance of a model class
#   ("builtin_mod", name)  require()d builtin module
#   ("builtin_fn", path)   builtin function, canonical dotted path
#   ("mod", relfile)       local module's export object


def resolve_relative(model: ProgramModel, from_rel: str, target: str) -> str | None:
    base_parts = from_rel.split("/")[:-1]
    for candidate in (target, target + ".js", target + "/index.js"):
        parts = base_parts + candidate.split("/")
        clean: list[str] = []
        for p in parts:
            if p in (".", ""):
                continue
            if p == "..":
                if not clean:
                    return None
                clean.pop()
            else:
                clean.append(p)
        rel = "/".join(clean)
        if rel in model.file_asts:
            return rel
    return None


def _require_target(node) -> str | None:
    if (
        isinstance(node, ast.Call)
        and isinstance(node.callee, ast.Ident)
        and node.callee.name == "require"
        and len(node.args) == 1
        and isinstance(node.args[0], ast.Literal)
        and node.args[0].kind == "string"
    ):
        return str(node.args[0].value)
    return None


class Bindings:
    """Evaluate expressions to static references under an environment."""

    def __init__(self, model: ProgramModel, rel: str):
        self.model = model
        self.rel = rel

    def module_bindings(self) -> dict[str, tuple]:
        env: dict[str, tuple] = {}
        program = self.model.file_asts.get(self.rel)
        if program is None:
            return env
        for name, fn in self.model.functions.items():
            if fn.span.file == self.rel and "::" not in name[len(self.rel) + 2 :]:
                if fn.owner_class is None:
                    env[fn.short_name] = (("fn", name),)
        for cname, cls in self.model.classes.items():
            if cls.span.file == self.rel:
                env[cname] = (("cls", cname),)
        for stmt in program.body:
            self.bind_statement(stmt, env)
        return env

    def bind_statement(self, stmt, env: dict[str, tuple]) -> None:
        if isinstance(stmt, ast.VarDecl):
            for d in stmt.declarations:
                if d.pattern is not None and d.init is not None:
                    self._bind_destructure(d.pattern, d.init, env)
                elif d.name is not None and d.init is not None:
                    refs = self.eval_refs(d.init, env)
                    if refs:
                        env[d.name] = refs
                    else:
                        env.pop(d.name, None)
        elif isinstance(stmt, ast.ExprStmt) and isinstance(stmt.expr, ast.Assign):
            a = stmt.expr
            if a.op == "=" and isinstance(a.target, ast.Ident):
                refs = self.eval_refs(a.value, env)
                if refs:
                    env[a.target.name] = refs
                else:
                    env.pop(a.target.name, None)

    def _bind_destructure(self, pattern, init, env) -> None:
        target = _require_target(init)
        if target is None:
            return
        if target in BUILTIN_MODULES:
            for prop, bound in pattern:
                env[bound] = (("builtin_fn", f"{target}.{prop}"),)
        else:
            resolved = resolve_relative(self.model, self.rel, target)
            if resolved is not None:
                exp = self.model.file_exports.get(resolved, {})
                for prop, bound in pattern:
                    decl = exp.get(prop)
                    if isinstance(decl, FunctionDecl):
                        env[bound] = (("fn", decl.qualified_name),)
                    elif isinstance(decl, ClassDecl):
                        env[bound] = (("cls", decl.name),)

    def eval_refs(self, node, env: dict[str, tuple]) -> tuple:
        if isinstance(node, ast.Ident):
            if node.name in env:
                return env[node.name]
            if node.name in BUILTIN_GLOBALS and BUILTIN_GLOBALS[node.name]:
                return (("builtin_fn", BUILTIN_GLOBALS[node.name]),)
            if node.name in _NAMESPACE_GLOBALS:
                return (("builtin_mod", node.name),)
            return ()
        target = _require_target(node)
        if target is not None:
            if target in BUILTIN_MODULES:
                return (("builtin_mod", target),)
            resolved = resolve_relative(self.model, self.rel, target)
            if resolved is not None:
                return (("mod", resolved),)
            return ()
        if isinstance(node, ast.Member) and not node.computed:
            prop = str(node.prop)
            out: list[tuple] = []
            for ref in self.eval_refs(node.obj, env):
                kind = ref[0]
                if kind == "builtin_mod":
                    out.append(("builtin_fn", f"{ref[1]}.{prop}"))
                elif kind == "mod":
                    decl = self.model.file_exports.get(ref[1], {}).get(prop)
                    if isinstance(decl, FunctionDecl):
                        out.append(("fn", decl.qualified_name))
                    elif isinstance(decl, ClassDecl):
                        out.append(("cls", decl.name))
                elif kind in ("inst", "cls"):
                    m = self._lookup_method(ref[1], prop)
                    if m is not None:
                        out.append(("fn", m.qualified_name))
            return tuple(out)
        if isinstance(node, ast.New):
            refs = self.eval_refs(node.callee, env)
            return tuple(("inst", r[1]) for r in refs if r[0] == "cls")
        if isinstance(node, (ast.Assign, ast.Sequence)):
            inner = node.value if isinstance(node, ast.Assign) else node.exprs[-1]
            return self.eval_refs(inner, env)
        return ()

    def _lookup_method(self, cls_name: str, prop: str) -> FunctionDecl | None:
        seen = set()
        cur = self.model.classes.get(cls_name)
        while cur is not None and cur.name not in seen:
            seen.add(cur.name)
            if prop == "constructor":
                return cur.constructor
            for m in cur.methods:
                if m.short_name == prop:
                    return m
            cur = self.model.classes.get(cur.superclass_name) if cur.superclass_name else None
        return None


def _dotted_text(node) -> str | None:
    if isinstance(node, ast.Ident):
        return node.name
    if isinstance(node, ast.Member) and not node.computed:
        base = _dotted_text(node.obj)
        return f"{base}.{node.prop}" if base else str(node.prop)
    return None


def build_call_graph(model: ProgramModel) -> CallGraph:
    cg = CallGraph(nodes=set(model.functions))
    module_envs = {rel: Bindings(model, rel).module_bindings() for rel in model.file_asts}

    for qname in sorted(model.functions):
        fn = model.functions[qname]
        if fn.body is None:
            continue
        rel = fn.span.file
        bindings = Bindings(model, rel)
        env = dict(module_envs.get(rel, {}))
        scanner = _FunctionScanner(model, cg, bindings, qname, fn)
        scanner.scan_block(fn.body, env)
    return cg


class _FunctionScanner:
    def __init__(self, model, cg, bindings, caller, fn):
        self.model = model
        self.cg = cg
        self.bindings = bindings
        self.caller = caller
        self.fn = fn

    def scan_block(self, block: ast.Block, env: dict[str, tuple]) -> None:
        for stmt in block.body:
            self.scan_statement(stmt, env)

    def scan_statement(self, stmt, env) -> None:
        if stmt is None:
            return
        if isinstance(stmt, ast.VarDecl):
            for d in stmt.declarations:
                if d.init is not None:
                    self.scan_expr(d.init, env)
            self.bindings.bind_statement(stmt, env)
        elif isinstance(stmt, ast.ExprStmt):
            self.scan_expr(stmt.expr, env)
            self.bindings.bind_statement(stmt, env)
        elif isinstance(stmt, ast.Block):
            self.scan_block(stmt, env)
        elif isinstance(stmt, ast.If):
            self.scan_expr(stmt.test, env)
            self.scan_statement(stmt.then, env)
            self.scan_statement(stmt.otherwise, env)
        elif isinstance(stmt, ast.While):
            self.scan_expr(stmt.test, env)
            self.scan_statement(stmt.body, env)
        elif isinstance(stmt, ast.For):
            self.scan_statement(stmt.init, env)
            self.scan_expr(stmt.test, env)
            self.scan_expr(stmt.update, env)
            self.scan_statement(stmt.body, env)
        elif isinstance(stmt, ast.ForIn):
            self.scan_expr(stmt.obj, env)
            self.scan_statement(stmt.body, env)
        elif isinstance(stmt, ast.Return):
            self.scan_expr(stmt.arg, env)
        elif isinstance(stmt, ast.Throw):
            self.scan_expr(stmt.arg, env)
        elif isinstance(stmt, ast.Try):
            self.scan_block(stmt.block, env)
            if stmt.catch_block:
                self.scan_block(stmt.catch_block, env)
            if stmt.finally_block:
                self.scan_block(stmt.finally_block, env)

    def scan_expr(self, node, env) -> None:
        if node is None or not isinstance(node, ast.Node):
            return
        if isinstance(node, (ast.FuncExpr, ast.FuncDecl, ast.ClassDeclNode)):
            return  # nested scopes are scanned as their own callers
        if isinstance(node, ast.Call):
            self.scan_expr(node.callee, env)
            for a in node.args:
                self.scan_expr(a, env)
            self.record_call(node, env, is_new=False)
            return
        if isinstance(node, ast.New):
            self.scan_expr(node.callee, env)
            for a in node.args:
                self.scan_expr(a, env)
            self.record_call(node, env, is_new=True)
            return
        for f in node.__dataclass_fields__:
            if f == "span":
                continue
            v = getattr(node, f)
            if isinstance(v, ast.Node):
                self.scan_expr(v, env)
            elif isinstance(v, list):
                for x in v:
                    if isinstance(x, ast.Node):
                        self.scan_expr(x, env)

    def record_call(self, node, env, is_new: bool) -> None:
        callee = node.callee
        dotted = _dotted_text(callee)
        bare = dotted.rsplit(".", 1)[-1] if dotted else None

        refs: tuple = ()
        if is_new:
            cls_refs = self.bindings.eval_refs(callee, env)
            ctor_refs = []
            for r in cls_refs:
                if r[0] == "cls":
                    ctor = self.bindings._lookup_method(r[1], "constructor")
                    if ctor is not None:
                        ctor_refs.append(("fn", ctor.qualified_name))
            refs = tuple(ctor_refs)
        elif isinstance(callee, ast.Member) and isinstance(callee.obj, ast.ThisExpr) \
                and not callee.computed and self.fn.owner_class:
            m = self.bindings._lookup_method(self.fn.owner_class, str(callee.prop))
            if m is not None:
                refs = (("fn", m.qualified_name),)
        else:
            refs = self.bindings.eval_refs(callee, env)

        canonical = None
        fn_candidates = []
        for r in refs:
            if r[0] == "fn":
                fn_candidates.append(r[1])
            elif r[0] == "builtin_fn" and canonical is None:
                canonical = r[1]
            elif r[0] == "cls" and is_new and canonical is None and r[1] in BUILTIN_GLOBALS:
                canonical = r[1]
        if canonical is None and bare == "Function" and is_new:
            canonical = "Function"

        self.cg.infos[span_key(node.span)] = CallInfo(dotted, canonical, bare, is_new)

        if fn_candidates:
            self.cg.add_edge(CallEdge(node.span, self.caller,
                                      sorted(set(fn_candidates)), "pointer"))
            return
        if canonical is not None or is_new:
            return  # builtin call or unresolved constructor: no model edge
        if bare is None:
            return  # computed callee: opaque
        arity = len(node.args)
        fallback = sorted(
            q for q, f in self.model.functions.items()
            if f.short_name == bare and len(f.params) == arity and f.kind != "constructor"
        )
        if fallback:
            self.cg.add_edge(CallEdge(node.span, self.caller, fallback, "nameArity"))
