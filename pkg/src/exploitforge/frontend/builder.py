"""Build a ProgramModel from a CommonJS package directory.

Walks the files reachable from the manifest's main entry via relative
``require`` calls, registers every function and class with stable qualified
names (``<relativeFile>::<enclosing...>::<name>``), and resolves the
package's export surface.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import jsast as ast
from .model import (
    ClassDecl,
    Diagnostic,
    EntryPoint,
    FunctionDecl,
    ProgramModel,
    SourceSpan,
    read_span,
)
from .parser import ParseError, parse_program


class FrontendError(Exception):
    def __init__(self, message: str, diagnostics: list[Diagnostic] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class MissingManifestError(FrontendError):
    pass


class EmptyPackageError(FrontendError):
    pass


def check_syntax(source: str) -> list[Diagnostic]:
    """Pre-flight parse of an exploit candidate. Empty list means ok."""
    try:
        parse_program(source, "<exploit>")
    except ParseError as e:
        span = SourceSpan("<exploit>", e.line, e.col, e.line, e.col)
        return [Diagnostic("error", e.message, span)]
    return []


def parse_package(root_dir: str | Path) -> ProgramModel:
    root = Path(root_dir)
    manifest_path = root / "package.json"
    if not manifest_path.is_file():
        raise MissingManifestError(
            f"no package.json in {root}",
            [Diagnostic("error", "missing package manifest (package.json)")],
        )
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise MissingManifestError(
            f"unreadable package.json: {e}",
            [Diagnostic("error", f"unreadable package manifest: {e}")],
        ) from None

    name = manifest.get("name")
    if not name:
        raise MissingManifestError(
            "package.json lacks a name",
            [Diagnostic("error", "package manifest has no \"name\" field")],
        )
    version = str(manifest.get("version", "0.0.0"))
    main = manifest.get("main", "index.js")

    sources: dict[str, str] = {}
    warnings: list[Diagnostic] = []
    main_rel = _resolve_module_file(root, ".", main)
    if main_rel is None:
        raise EmptyPackageError(
            f"main entry {main!r} not found",
            [Diagnostic("error", f"main entry file {main!r} does not exist")],
        )

    queue = [main_rel]
    seen = {main_rel}
    order: list[str] = []
    while queue:
        rel = queue.pop(0)
        try:
            text = (root / rel).read_text(encoding="utf-8")
        except OSError as e:
            warnings.append(Diagnostic("warning", f"unreadable file: {e}",
                                       _file_span(rel)))
            continue
        sources[rel] = text
        order.append(rel)
        for target in _relative_requires(text):
            resolved = _resolve_module_file(root, rel, target)
            if resolved is None:
                warnings.append(Diagnostic(
                    "warning", f"cannot resolve require({target!r})", _file_span(rel)))
            elif resolved not in seen:
                seen.add(resolved)
                queue.append(resolved)

    model = build_model_from_sources(name, version, sources, main_rel, file_order=order)
    model.warnings = warnings + model.warnings
    if not model.file_asts:
        raise EmptyPackageError(
            "package has no parseable source files",
            [Diagnostic("error", "no parseable source files in package")] + model.warnings,
        )
    return model


def _file_span(rel: str) -> SourceSpan:
    return SourceSpan(rel, 1, 1, 1, 1)


def _resolve_module_file(root: Path, from_rel: str, target: str) -> str | None:
    base = (Path(from_rel).parent if from_rel != "." else Path("."))
    for candidate in (target, target + ".js", target + "/index.js"):
        rel = (base / candidate)
        parts = rel.as_posix().split("/")
        clean: list[str] = []
        for p in parts:
            if p in (".", ""):
                continue
            if p == "..":
                if not clean:
                    return None  # escapes the package root
                clean.pop()
            else:
                clean.append(p)
        rel_str = "/".join(clean)
        if (root / rel_str).is_file():
            return rel_str
    return None


def _relative_requires(text: str) -> list[str]:
    # Cheap scan: targets of require("./...") / require("../...") literals.
    out = []
    i = 0
    while True:
        i = text.find("require(", i)
        if i < 0:
            return out
        j = i + len("require(")
        while j < len(text) and text[j] in " \t":
            j += 1
        if j < len(text) and text[j] in "'\"":
            quote = text[j]
            k = text.find(quote, j + 1)
            if k > 0:
                target = text[j + 1 : k]
                if target.startswith("./") or target.startswith("../"):
                    out.append(target)
        i = j


def build_model_from_sources(
    name: str,
    version: str,
    sources: dict[str, str],
    main_rel: str,
    file_order: list[str] | None = None,
) -> ProgramModel:
    """Assemble a ProgramModel from in-memory sources (also used by tests)."""
    functions: dict[str, FunctionDecl] = {}
    classes: dict[str, ClassDecl] = {}
    exports: dict[str, object] = {}
    warnings: list[Diagnostic] = []
    file_asts: dict[str, ast.Program] = {}

    for rel in file_order or sorted(sources):
        text = sources[rel]
        try:
            program = parse_program(text, rel)
        except ParseError as e:
            warnings.append(Diagnostic(
                "error", f"parse error: {e.message}",
                SourceSpan(rel, e.line, e.col, e.line, e.col)))
            continue
        file_asts[rel] = program
        _Collector(rel, text, functions, classes, warnings).collect(program)

    _check_superclass_cycles(classes, warnings)

    model = ProgramModel(
        package_name=name,
        package_version=version,
        files=list(file_asts),
        functions=functions,
        classes=classes,
        exports=exports,
        main_entry_file=main_rel,
        sources=sources,
        warnings=warnings,
    )
    model.file_asts = file_asts  # per-file top-level ASTs for the taint engine
    model.file_exports = {rel: _collect_exports(model, rel) for rel in file_asts}
    model.exports = model.file_exports.get(main_rel, {})
    return model


class _Collector:
    """Single-file walk registering functions and classes under scope names."""

    def __init__(self, rel, text, functions, classes, warnings):
        self.rel = rel
        self.text = text
        self.functions = functions
        self.classes = classes
        self.warnings = warnings

    def collect(self, program: ast.Program) -> None:
        for stmt in program.body:
            self._stmt(stmt, scope=[])

    def _register(self, qname: str, kind: str, owner: str | None,
                  params: list[str], span: SourceSpan, body: ast.Block) -> FunctionDecl:
        decl = FunctionDecl(
            qualified_name=qname,
            kind=kind,
            owner_class=owner,
            params=params,
            span=span,
            source_text=read_span(self.text, span),
            body=body,
        )
        if qname in self.functions:
            self.warnings.append(Diagnostic(
                "warning", f"duplicate definition of {qname}", span))
        self.functions[qname] = decl
        return decl

    def _qname(self, scope: list[str], name: str) -> str:
        return "::".join([self.rel, *scope, name])

    def _stmt(self, node, scope: list[str]) -> None:
        if node is None:
            return
        if isinstance(node, ast.FuncDecl):
            self._register(self._qname(scope, node.name), "function", None,
                           node.params, node.span, node.body)
            self._block(node.body, scope + [node.name])
        elif isinstance(node, ast.ClassDeclNode):
            self._class(node, scope)
        elif isinstance(node, ast.VarDecl):
            for d in node.declarations:
                if d.init is None:
                    continue
                if d.name and isinstance(d.init, ast.FuncExpr):
                    self._register(self._qname(scope, d.name), "function", None,
                                   d.init.params, d.init.span, d.init.body)
                    self._block(d.init.body, scope + [d.name])
                else:
                    self._expr(d.init, scope)
        elif isinstance(node, ast.ExprStmt):
            named = self._exported_function_name(node.expr)
            if named is not None:
                export_name, fn = named
                self._register(self._qname(scope, export_name), "function", None,
                               fn.params, fn.span, fn.body)
                self._block(fn.body, scope + [export_name])
            else:
                self._expr(node.expr, scope)
        elif isinstance(node, ast.Block):
            self._block(node, scope)
        elif isinstance(node, ast.If):
            self._expr(node.test, scope)
            self._stmt(node.then, scope)
            self._stmt(node.otherwise, scope)
        elif isinstance(node, ast.While):
            self._expr(node.test, scope)
            self._stmt(node.body, scope)
        elif isinstance(node, ast.For):
            self._stmt(node.init, scope)
            self._expr(node.test, scope)
            self._expr(node.update, scope)
            self._stmt(node.body, scope)
        elif isinstance(node, ast.ForIn):
            self._expr(node.obj, scope)
            self._stmt(node.body, scope)
        elif isinstance(node, ast.Return):
            self._expr(node.arg, scope)
        elif isinstance(node, ast.Throw):
            self._expr(node.arg, scope)
        elif isinstance(node, ast.Try):
            self._block(node.block, scope)
            if node.catch_block:
                self._block(node.catch_block, scope)
            if node.finally_block:
                self._block(node.finally_block, scope)

    def _block(self, block: ast.Block, scope: list[str]) -> None:
        for stmt in block.body:
            self._stmt(stmt, scope)

    def _exported_function_name(self, expr) -> tuple[str, ast.FuncExpr] | None:
        # `module.exports.run = function (...) {...}` names the function "run"
        if (
            isinstance(expr, ast.Assign)
            and expr.op == "="
            and isinstance(expr.target, ast.Member)
            and not expr.target.computed
            and isinstance(expr.value, ast.FuncExpr)
            and _is_exports_object(expr.target.obj)
        ):
            return str(expr.target.prop), expr.value
        return None

    def _class(self, node: ast.ClassDeclNode, scope: list[str]) -> None:
        ctor = None
        methods = []
        for m in node.methods:
            qname = self._qname(scope, f"{node.name}::{m.name}")
            decl = self._register(qname, m.kind, node.name, m.params, m.span, m.body)
            if m.kind == "constructor":
                ctor = decl
            else:
                methods.append(decl)
            self._block(m.body, scope + [node.name, m.name])
        if node.name in self.classes:
            self.warnings.append(Diagnostic(
                "warning", f"duplicate class {node.name}", node.span))
        self.classes[node.name] = ClassDecl(
            name=node.name,
            superclass_name=node.superclass,
            constructor=ctor,
            methods=methods,
            span=node.span,
            source_text=read_span(self.text, node.span),
        )

    def _expr(self, node, scope: list[str]) -> None:
        if node is None or not isinstance(node, ast.Node):
            return
        if isinstance(node, ast.FuncExpr):
            name = node.name or f"<anon@{node.span.start_line}:{node.span.start_col}>"
            self._register(self._qname(scope, name), "function", None,
                           node.params, node.span, node.body)
            self._block(node.body, scope + [name])
            return
        if isinstance(node, ast.ClassDeclNode):
            self._class(node, scope)
            return
        for f in node.__dataclass_fields__:
            if f == "span":
                continue
            v = getattr(node, f)
            if isinstance(v, ast.Node):
                self._expr(v, scope)
            elif isinstance(v, list):
                for x in v:
                    if isinstance(x, ast.Node):
                        self._expr(x, scope)


def _is_exports_object(node) -> bool:
    """True for `module.exports` or bare `exports`."""
    if isinstance(node, ast.Ident) and node.name == "exports":
        return True
    return (
        isinstance(node, ast.Member)
        and not node.computed
        and node.prop == "exports"
        and isinstance(node.obj, ast.Ident)
        and node.obj.name == "module"
    )


def _collect_exports(model: ProgramModel, rel: str) -> dict[str, object]:
    program = model.file_asts[rel]
    exports: dict[str, object] = {}

    def lookup(name: str):
        qname = f"{rel}::{name}"
        if qname in model.functions:
            return model.functions[qname]
        if name in model.classes and model.classes[name].span.file == rel:
            return model.classes[name]
        return None

    def resolve_value(expr):
        if isinstance(expr, ast.Ident):
            return lookup(expr.name)
        return None

    for stmt in program.body:
        if not isinstance(stmt, ast.ExprStmt) or not isinstance(stmt.expr, ast.Assign):
            continue
        assign = stmt.expr
        if assign.op != "=" or not isinstance(assign.target, (ast.Member, ast.Ident)):
            continue
        target = assign.target
        if isinstance(target, ast.Member) and _is_exports_object(target):
            # module.exports = <expr>
            if isinstance(assign.value, ast.ObjectLit):
                for prop in assign.value.properties:
                    if prop.computed or not isinstance(prop.key, str):
                        continue
                    decl = resolve_value(prop.value)
                    if decl is not None:
                        exports[prop.key] = decl
            else:
                decl = resolve_value(assign.value)
                if decl is not None:
                    exports[""] = decl  # the module itself
        elif (
            isinstance(target, ast.Member)
            and not target.computed
            and _is_exports_object(target.obj)
        ):
            # module.exports.name = <expr> / exports.name = <expr>
            decl = resolve_value(assign.value)
            if decl is None:
                qname = f"{rel}::{target.prop}"
                decl = model.functions.get(qname)
            if decl is not None:
                exports[str(target.prop)] = decl
    return exports


def _check_superclass_cycles(classes: dict[str, ClassDecl], warnings: list[Diagnostic]) -> None:
    for start in sorted(classes):
        seen = {start}
        cur = classes[start].superclass_name
        while cur is not None and cur in classes:
            if cur in seen:
                warnings.append(Diagnostic(
                    "warning",
                    f"superclass cycle through {cur}; dropping extends of {cur}",
                    classes[cur].span))
                classes[cur].superclass_name = None
                break
            seen.add(cur)
            cur = classes[cur].superclass_name


def resolve_entry_points(model: ProgramModel) -> list[EntryPoint]:
    """Public surface: exported functions, exported classes' constructors and
    public methods. Deterministic order (lexicographic by qualified name)."""
    entries: list[EntryPoint] = []
    for export_name in model.exports:
        decl = model.exports[export_name]
        if isinstance(decl, FunctionDecl):
            entries.append(EntryPoint(decl=decl, import_name=export_name))
        elif isinstance(decl, ClassDecl):
            if decl.constructor is not None:
                entries.append(EntryPoint(decl=decl.constructor, import_name=export_name))
            for m in decl.methods:
                if m.short_name.startswith("_"):
                    continue  # conventionally private
                entries.append(EntryPoint(decl=m, import_name=export_name,
                                          receiver_class=decl))
    entries.sort(key=lambda e: e.decl.qualified_name)
    return entries
