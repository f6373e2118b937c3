"""Independent oracle for the taint engine: a tagged-value interpreter.

Executes a parsed program concretely. Entry-point arguments carry taint tags;
tags propagate through concrete evaluation (concatenation, arithmetic,
stores/loads, calls). Every sink invocation records which argument carried
which tags. No dataflow abstraction is involved: what you see is what ran.

Tag propagation rules (mirrored by the static engine's documented semantics):
  - binary and unary arithmetic/comparison results carry the operand tags
  - typeof produces an untagged string
  - builtin string/array methods carry receiver tags union argument tags
  - parseInt / Number act as sanitizers (fresh untagged results)
"""

from __future__ import annotations

from dataclasses import dataclass, field

from exploitforge.frontend import jsast as ast
from exploitforge.frontend.model import ProgramModel
from exploitforge.taint.callgraph import span_key

MAX_STEPS = 200_000
SANITIZER_BUILTINS = {"parseInt", "Number"}


class InterpError(Exception):
    pass


@dataclass(frozen=True)
class Tagged:
    value: object
    tags: frozenset = frozenset()


UNDEF = Tagged(None)


@dataclass
class SinkEvent:
    callee: str  # canonical name, e.g. "child_process.exec"
    span_key: str
    arg_tags: list[frozenset]


class JSObject:
    def __init__(self):
        self.props: dict[str, Tagged] = {}


class JSArray:
    def __init__(self, items=None):
        self.items: list[Tagged] = list(items or [])


@dataclass
class JSFunction:
    name: str
    params: list[str]
    body: ast.Block
    closure: "Scope"


class Scope:
    def __init__(self, parent: "Scope | None" = None):
        self.vars: dict[str, Tagged] = {}
        self.parent = parent

    def get(self, name: str) -> Tagged | None:
        s: Scope | None = self
        while s is not None:
            if name in s.vars:
                return s.vars[name]
            s = s.parent
        return None

    def set(self, name: str, value: Tagged) -> None:
        s: Scope | None = self
        while s is not None:
            if name in s.vars:
                s.vars[name] = value
                return
            s = s.parent
        self.vars[name] = value

    def declare(self, name: str, value: Tagged) -> None:
        self.vars[name] = value


class _Return(Exception):
    def __init__(self, value: Tagged):
        self.value = value


class _Break(Exception):
    pass


class _Continue(Exception):
    pass


@dataclass
class _Builtin:
    name: str  # canonical dotted name
    fn: object = None
    sink: bool = False


class Interpreter:
    def __init__(self, model: ProgramModel, file: str | None = None):
        self.model = model
        self.file = file or model.main_entry_file
        self.events: list[SinkEvent] = []
        self.steps = 0
        self.globals = Scope()
        module_obj = JSObject()
        exports_obj = JSObject()
        module_obj.props["exports"] = Tagged(exports_obj)
        self.globals.declare("module", Tagged(module_obj))
        self.globals.declare("exports", Tagged(exports_obj))
        program = model.file_asts[self.file]
        self._hoist(program.body, self.globals)
        for stmt in program.body:
            self._exec(stmt, self.globals)

    # --- public API ---

    def run_entry(self, fn_name: str, args: list[Tagged]) -> Tagged:
        fn = self.globals.get(fn_name)
        if fn is None or not isinstance(fn.value, JSFunction):
            raise InterpError(f"no function {fn_name!r}")
        return self.call(fn.value, args, UNDEF)

    # --- plumbing ---

    def _tick(self):
        self.steps += 1
        if self.steps > MAX_STEPS:
            raise InterpError("interpreter step budget exceeded")

    def _hoist(self, body, scope: Scope) -> None:
        for stmt in body:
            if isinstance(stmt, ast.FuncDecl):
                scope.declare(stmt.name, Tagged(JSFunction(stmt.name, stmt.params,
                                                           stmt.body, scope)))

    def call(self, fn: JSFunction, args: list[Tagged], this: Tagged) -> Tagged:
        scope = Scope(fn.closure)
        for i, p in enumerate(fn.params):
            scope.declare(p, args[i] if i < len(args) else UNDEF)
        scope.declare("this", this)
        self._hoist(fn.body.body, scope)
        try:
            for stmt in fn.body.body:
                self._exec(stmt, scope)
        except _Return as r:
            return r.value
        return UNDEF

    # --- statements ---

    def _exec(self, stmt, scope: Scope) -> None:
        if stmt is None:
            return
        self._tick()
        if isinstance(stmt, ast.VarDecl):
            for d in stmt.declarations:
                init = self._eval(d.init, scope) if d.init is not None else UNDEF
                if d.pattern is not None:
                    for prop, bound in d.pattern:
                        scope.declare(bound, self._get_prop(init, prop))
                else:
                    scope.declare(d.name, init)
        elif isinstance(stmt, ast.ExprStmt):
            self._eval(stmt.expr, scope)
        elif isinstance(stmt, ast.FuncDecl):
            pass  # hoisted
        elif isinstance(stmt, ast.ClassDeclNode):
            pass  # classes unsupported by the oracle; generators do not emit them
        elif isinstance(stmt, ast.Block):
            inner = Scope(scope)
            self._hoist(stmt.body, inner)
            for s in stmt.body:
                self._exec(s, inner)
        elif isinstance(stmt, ast.If):
            if _truthy(self._eval(stmt.test, scope)):
                self._exec(stmt.then, scope)
            elif stmt.otherwise is not None:
                self._exec(stmt.otherwise, scope)
        elif isinstance(stmt, ast.While):
            if stmt.is_do:
                while True:
                    try:
                        self._exec(stmt.body, scope)
                    except _Break:
                        break
                    except _Continue:
                        pass
                    if not _truthy(self._eval(stmt.test, scope)):
                        break
            else:
                while _truthy(self._eval(stmt.test, scope)):
                    try:
                        self._exec(stmt.body, scope)
                    except _Break:
                        break
                    except _Continue:
                        continue
        elif isinstance(stmt, ast.For):
            inner = Scope(scope)
            self._exec(stmt.init, inner)
            while stmt.test is None or _truthy(self._eval(stmt.test, inner)):
                try:
                    self._exec(stmt.body, inner)
                except _Break:
                    break
                except _Continue:
                    pass
                if stmt.update is not None:
                    self._eval(stmt.update, inner)
        elif isinstance(stmt, ast.ForIn):
            obj = self._eval(stmt.obj, scope)
            keys: list[Tagged] = []
            if isinstance(obj.value, JSObject):
                keys = [Tagged(k, obj.tags) for k in list(obj.value.props)]
            elif isinstance(obj.value, JSArray):
                if stmt.of:
                    keys = list(obj.value.items)
                else:
                    keys = [Tagged(str(i), obj.tags) for i in range(len(obj.value.items))]
            elif isinstance(obj.value, str) and stmt.of:
                keys = [Tagged(c, obj.tags) for c in obj.value]
            inner = Scope(scope)
            inner.declare(stmt.var_name, UNDEF)
            for k in keys:
                inner.vars[stmt.var_name] = k
                try:
                    self._exec(stmt.body, inner)
                except _Break:
                    break
                except _Continue:
                    continue
        elif isinstance(stmt, ast.Return):
            value = self._eval(stmt.arg, scope) if stmt.arg is not None else UNDEF
            raise _Return(value)
        elif isinstance(stmt, ast.Throw):
            value = self._eval(stmt.arg, scope)
            raise InterpError(f"thrown: {value.value!r}")
        elif isinstance(stmt, ast.Try):
            try:
                self._exec(stmt.block, scope)
            except InterpError:
                if stmt.catch_block is not None:
                    inner = Scope(scope)
                    if stmt.catch_param:
                        inner.declare(stmt.catch_param, UNDEF)
                    self._exec(stmt.catch_block, inner)
            finally:
                if stmt.finally_block is not None:
                    self._exec(stmt.finally_block, scope)
        elif isinstance(stmt, ast.Break):
            raise _Break()
        elif isinstance(stmt, ast.Continue):
            raise _Continue()
        else:
            raise InterpError(f"unsupported statement {type(stmt).__name__}")

    # --- expressions ---

    def _eval(self, node, scope: Scope) -> Tagged:
        if node is None:
            return UNDEF
        self._tick()
        if isinstance(node, ast.Literal):
            if node.kind == "regex":
                return Tagged(node.raw)
            return Tagged(node.value)
        if isinstance(node, ast.Ident):
            if node.name == "undefined":
                return UNDEF
            found = scope.get(node.name)
            if found is not None:
                return found
            builtin = _GLOBAL_BUILTINS.get(node.name)
            if builtin is not None:
                return Tagged(builtin)
            if node.name == "require":
                return Tagged(_Builtin("require"))
            raise InterpError(f"undefined identifier {node.name!r}")
        if isinstance(node, ast.ThisExpr):
            return scope.get("this") or UNDEF
        if isinstance(node, ast.TemplateLit):
            tags = frozenset()
            parts = []
            for i, q in enumerate(node.quasis):
                parts.append(q)
                if i < len(node.exprs):
                    v = self._eval(node.exprs[i], scope)
                    tags |= v.tags
                    parts.append(_to_str(v))
            return Tagged("".join(parts), tags)
        if isinstance(node, ast.ArrayLit):
            return Tagged(JSArray([self._eval(e, scope) for e in node.elements]))
        if isinstance(node, ast.ObjectLit):
            obj = JSObject()
            for p in node.properties:
                v = self._eval(p.value, scope)
                if p.computed and isinstance(p.key, ast.Node):
                    k = _to_str(self._eval(p.key, scope))
                elif isinstance(p.key, str):
                    k = p.key
                else:
                    continue
                obj.props[k] = v
            return Tagged(obj)
        if isinstance(node, ast.Member):
            obj = self._eval(node.obj, scope)
            key = self._member_key(node, scope)
            return self._get_prop(obj, key)
        if isinstance(node, ast.Call):
            return self._eval_call(node, scope)
        if isinstance(node, ast.New):
            raise InterpError("new expressions unsupported by the oracle")
        if isinstance(node, ast.Assign):
            return self._eval_assign(node, scope)
        if isinstance(node, ast.Binary):
            return _binary(node.op, self._eval(node.left, scope),
                           self._eval(node.right, scope))
        if isinstance(node, ast.Logical):
            left = self._eval(node.left, scope)
            if node.op == "&&":
                return self._eval(node.right, scope) if _truthy(left) else left
            if node.op == "||":
                return left if _truthy(left) else self._eval(node.right, scope)
            return left if left.value is not None else self._eval(node.right, scope)
        if isinstance(node, ast.Unary):
            v = self._eval(node.operand, scope)
            if node.op == "typeof":
                return Tagged(_typeof(v))
            if node.op == "!":
                return Tagged(not _truthy(v), v.tags)
            if node.op == "-":
                return Tagged(-_to_num(v), v.tags)
            if node.op == "+":
                return Tagged(_to_num(v), v.tags)
            if node.op == "~":
                return Tagged(float(~int(_to_num(v))), v.tags)
            return UNDEF  # void / delete
        if isinstance(node, ast.Update):
            old = self._eval(node.target, scope)
            new = Tagged(_to_num(old) + (1 if node.op == "++" else -1), old.tags)
            self._assign_to(node.target, new, scope)
            return new if node.prefix else old
        if isinstance(node, ast.Conditional):
            if _truthy(self._eval(node.test, scope)):
                return self._eval(node.consequent, scope)
            return self._eval(node.alternate, scope)
        if isinstance(node, ast.Sequence):
            out = UNDEF
            for e in node.exprs:
                out = self._eval(e, scope)
            return out
        if isinstance(node, ast.FuncExpr):
            return Tagged(JSFunction(node.name or "<anon>", node.params, node.body, scope))
        raise InterpError(f"unsupported expression {type(node).__name__}")

    def _member_key(self, node: ast.Member, scope: Scope) -> str:
        if node.computed:
            return _to_str(self._eval(node.prop, scope)) if isinstance(node.prop, ast.Node) else str(node.prop)
        return str(node.prop)

    def _get_prop(self, obj: Tagged, key: str) -> Tagged:
        v = obj.value
        if isinstance(v, JSObject):
            return v.props.get(key, UNDEF)
        if isinstance(v, JSArray):
            if key == "length":
                return Tagged(float(len(v.items)))
            try:
                idx = int(float(key))
            except ValueError:
                return UNDEF
            if 0 <= idx < len(v.items):
                return v.items[idx]
            return UNDEF
        if isinstance(v, str):
            if key == "length":
                return Tagged(float(len(v)), obj.tags)
            try:
                idx = int(float(key))
            except ValueError:
                return Tagged(_Builtin(f"str.{key}", fn=obj))  # bound string method
            if 0 <= idx < len(v):
                return Tagged(v[idx], obj.tags)
            return UNDEF
        if isinstance(v, _Builtin):
            return Tagged(_Builtin(f"{v.name}.{key}", sink=_is_sink(f"{v.name}.{key}")))
        return UNDEF

    def _eval_assign(self, node: ast.Assign, scope: Scope) -> Tagged:
        value = self._eval(node.value, scope)
        if node.op != "=":
            old = self._eval(node.target, scope)
            value = _binary(node.op[:-1], old, value)
        self._assign_to(node.target, value, scope)
        return value

    def _assign_to(self, target, value: Tagged, scope: Scope) -> None:
        if isinstance(target, ast.Ident):
            scope.set(target.name, value)
            return
        if isinstance(target, ast.Member):
            obj = self._eval(target.obj, scope)
            key = self._member_key(target, scope)
            v = obj.value
            if isinstance(v, JSObject):
                v.props[key] = value
            elif isinstance(v, JSArray):
                try:
                    idx = int(float(key))
                except ValueError:
                    return
                while len(v.items) <= idx:
                    v.items.append(UNDEF)
                v.items[idx] = value
            return
        raise InterpError("invalid assignment target")

    def _eval_call(self, node: ast.Call, scope: Scope) -> Tagged:
        callee = self._eval(node.callee, scope)
        args = [self._eval(a, scope) for a in node.args]
        receiver = UNDEF
        if isinstance(node.callee, ast.Member):
            receiver = self._eval(node.callee.obj, scope)
        v = callee.value
        if isinstance(v, JSFunction):
            return self.call(v, args, receiver)
        if isinstance(v, _Builtin):
            return self._call_builtin(v, args, receiver, node)
        raise InterpError(f"call of non-function value {v!r}")

    def _call_builtin(self, b: _Builtin, args: list[Tagged], receiver: Tagged,
                      node: ast.Call) -> Tagged:
        name = b.name
        if name == "require":
            mod = _to_str(args[0]) if args else ""
            return Tagged(_Builtin(mod))
        if b.sink or _is_sink(name):
            self.events.append(SinkEvent(_canonical_sink(name), span_key(node.span),
                                         [a.tags for a in args]))
            return Tagged("", frozenset().union(*[a.tags for a in args]) if args else frozenset())
        if name in SANITIZER_BUILTINS:
            v = _to_num(args[0]) if args else 0.0
            if v != v:  # NaN
                return Tagged(0.0)
            return Tagged(float(int(v)))
        if name == "String":
            return Tagged(_to_str(args[0]), args[0].tags) if args else Tagged("")
        if name == "path.join":
            tags = frozenset().union(*[a.tags for a in args]) if args else frozenset()
            return Tagged("/".join(_to_str(a) for a in args), tags)
        if name.startswith("str."):
            return _string_method(name[4:], b.fn, args)
        if name.startswith("JSON."):
            raise InterpError("JSON builtins unsupported by the oracle")
        # unknown builtin: propagate receiver and argument tags
        tags = receiver.tags
        for a in args:
            tags |= a.tags
        return Tagged("", tags)


# --- sinks -------------------------------------------------------------------

_SINK_CANONICALS = {
    "child_process.exec", "child_process.execSync", "child_process.spawn",
    "fs.readFile", "fs.readFileSync", "fs.createReadStream",
    "fs.writeFile", "fs.writeFileSync",
    "eval", "Function",
}


def _is_sink(name: str) -> bool:
    return name in _SINK_CANONICALS


def _canonical_sink(name: str) -> str:
    return name


_GLOBAL_BUILTINS = {
    "parseInt": _Builtin("parseInt"),
    "Number": _Builtin("Number"),
    "String": _Builtin("String"),
    "eval": _Builtin("eval", sink=True),
    "Function": _Builtin("Function", sink=True),
}


# --- value helpers -----------------------------------------------------------

def _truthy(v: Tagged) -> bool:
    x = v.value
    if x is None:
        return False
    if isinstance(x, bool):
        return x
    if isinstance(x, float):
        return x != 0.0
    if isinstance(x, str):
        return x != ""
    return True


def _to_str(v: Tagged) -> str:
    x = v.value
    if x is None:
        return "undefined"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if x != x:
            return "NaN"
        return str(int(x)) if x == int(x) else str(x)
    if isinstance(x, str):
        return x
    if isinstance(x, JSArray):
        return ",".join(_to_str(i) for i in x.items)
    if isinstance(x, JSObject):
        return "[object Object]"
    return str(x)


def _to_num(v: Tagged) -> float:
    x = v.value
    if isinstance(x, bool):
        return 1.0 if x else 0.0
    if isinstance(x, float):
        return x
    if isinstance(x, str):
        try:
            return float(x)
        except ValueError:
            return float("nan")
    return float("nan")


def _typeof(v: Tagged) -> str:
    x = v.value
    if x is None:
        return "undefined"
    if isinstance(x, bool):
        return "boolean"
    if isinstance(x, float):
        return "number"
    if isinstance(x, str):
        return "string"
    if isinstance(x, (JSFunction, _Builtin)):
        return "function"
    return "object"


def _binary(op: str, l: Tagged, r: Tagged) -> Tagged:
    tags = l.tags | r.tags
    if op == "+":
        if isinstance(l.value, str) or isinstance(r.value, str):
            return Tagged(_to_str(l) + _to_str(r), tags)
        return Tagged(_to_num(l) + _to_num(r), tags)
    if op == "-":
        return Tagged(_to_num(l) - _to_num(r), tags)
    if op == "*":
        return Tagged(_to_num(l) * _to_num(r), tags)
    if op == "/":
        rv = _to_num(r)
        return Tagged(_to_num(l) / rv if rv else float("nan"), tags)
    if op == "%":
        rv = _to_num(r)
        return Tagged(_to_num(l) % rv if rv else float("nan"), tags)
    if op == "**":
        return Tagged(_to_num(l) ** _to_num(r), tags)
    if op in ("==", "==="):
        return Tagged(_loose_eq(l, r), tags)
    if op in ("!=", "!=="):
        return Tagged(not _loose_eq(l, r), tags)
    if op in ("<", ">", "<=", ">="):
        a, b = l.value, r.value
        if isinstance(a, str) and isinstance(b, str):
            res = {"<": a < b, ">": a > b, "<=": a <= b, ">=": a >= b}[op]
        else:
            an, bn = _to_num(l), _to_num(r)
            res = {"<": an < bn, ">": an > bn, "<=": an <= bn, ">=": an >= bn}[op]
        return Tagged(res, tags)
    if op in ("&", "|", "^", "<<", ">>", ">>>"):
        a, b = int(_to_num(l)), int(_to_num(r))
        res = {"&": a & b, "|": a | b, "^": a ^ b,
               "<<": a << (b & 31), ">>": a >> (b & 31), ">>>": (a % (1 << 32)) >> (b & 31)}[op]
        return Tagged(float(res), tags)
    if op == "in":
        key = _to_str(l)
        if isinstance(r.value, JSObject):
            return Tagged(key in r.value.props, tags)
        return Tagged(False, tags)
    raise InterpError(f"unsupported binary operator {op!r}")


def _loose_eq(l: Tagged, r: Tagged) -> bool:
    a, b = l.value, r.value
    if isinstance(a, float) and isinstance(b, str):
        return a == _to_num(r)
    if isinstance(a, str) and isinstance(b, float):
        return _to_num(l) == b
    return a == b


def _string_method(method: str, recv: Tagged, args: list[Tagged]) -> Tagged:
    s = recv.value
    tags = recv.tags
    for a in args:
        tags |= a.tags
    if method == "slice":
        start = int(_to_num(args[0])) if args else 0
        end = int(_to_num(args[1])) if len(args) > 1 else len(s)
        return Tagged(s[start:end], tags)
    if method == "toUpperCase":
        return Tagged(s.upper(), tags)
    if method == "toLowerCase":
        return Tagged(s.lower(), tags)
    if method == "trim":
        return Tagged(s.strip(), tags)
    if method == "concat":
        return Tagged(s + "".join(_to_str(a) for a in args), tags)
    if method == "indexOf":
        return Tagged(float(s.find(_to_str(args[0]))) if args else -1.0, tags)
    if method == "startsWith":
        return Tagged(s.startswith(_to_str(args[0])) if args else False, tags)
    if method == "includes":
        return Tagged((_to_str(args[0]) in s) if args else False, tags)
    if method == "split":
        sep = _to_str(args[0]) if args else ","
        return Tagged(JSArray([Tagged(part, tags) for part in s.split(sep)]))
    if method == "charAt":
        idx = int(_to_num(args[0])) if args else 0
        return Tagged(s[idx] if 0 <= idx < len(s) else "", tags)
    if method == "repeat":
        return Tagged(s * int(_to_num(args[0])) if args else "", tags)
    # unknown string method: keep it taint-propagating and harmless
    return Tagged(s, tags)
