"""Inter-procedural taint analysis.

Design summary:
  - context-sensitive with call-site strings of depth 1; the analysis walks
    top-down from each entry point with an explicit activation stack, so a
    recursive callee is expanded only when it is not already active
  - flow-sensitive inside a function body (strong updates on locals)
  - field-sensitive through an allocation-site object store; a write through
    a syntactic chain deeper than K_FIELD, or through a computed/numeric key,
    taints the whole aggregate
  - loop bodies are analyzed exactly once per context (visit counters are
    kept so tests can assert this)

Taint is carried as witnesses: (source parameter, hop chain). Every hop is a
(function, statement span, access path) triple, which is exactly what alerts
need to render the call chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..frontend import jsast as ast
from ..frontend.builder import resolve_entry_points
from ..frontend.model import EntryPoint, ProgramModel, SourceSpan
from .callgraph import CallGraph, CallInfo, span_key
from .spec import PROTO_WRITE_MARKER, TaintSpec

K_FIELD = 3  # access-path depth before whole-object tainting
MAX_WITNESS_PATHS = 8  # witness paths kept per (entry, sink), shortest-first
_WITNESS_CAP = 16  # witnesses carried per abstract value during analysis


class AnalysisBudgetExceeded(Exception):
    pass


@dataclass(frozen=True)
class Hop:
    fn: str
    span: SourceSpan
    access: str

    def to_json(self) -> dict:
        return {"fn": self.fn, "span": self.span.to_json(), "access": self.access}

    @classmethod
    def from_json(cls, d: dict) -> "Hop":
        return cls(d["fn"], SourceSpan.from_json(d["span"]), d["access"])


@dataclass(frozen=True)
class Witness:
    source: tuple[str, int]  # (entry qualified name, parameter index)
    hops: tuple[Hop, ...]

    def extended(self, hop: Hop) -> "Witness":
        if self.hops and self.hops[-1] == hop:
            return self
        return Witness(self.source, self.hops + (hop,))

    def sort_key(self):
        return (len(self.hops), self.source,
                tuple((h.fn, span_key(h.span), h.access) for h in self.hops))


_BOTTOM_W: tuple = ()
_BOTTOM_O: tuple = ()


@dataclass(frozen=True)
class AbsValue:
    witnesses: tuple[Witness, ...] = _BOTTOM_W
    objs: tuple[str, ...] = _BOTTOM_O  # allocation-site object ids

    @property
    def tainted(self) -> bool:
        return bool(self.witnesses)


BOTTOM = AbsValue()


def _mk(witnesses, objs=()) -> AbsValue:
    ws = sorted(set(witnesses), key=Witness.sort_key)[:_WITNESS_CAP]
    return AbsValue(tuple(ws), tuple(sorted(set(objs))))


def _join(*values: AbsValue) -> AbsValue:
    ws: set[Witness] = set()
    objs: set[str] = set()
    for v in values:
        ws.update(v.witnesses)
        objs.update(v.objs)
    if not ws and not objs:
        return BOTTOM
    return _mk(ws, objs)


class _ObjState:
    __slots__ = ("fields", "smashed")

    def __init__(self):
        self.fields: dict[str, AbsValue] = {}
        self.smashed: AbsValue = BOTTOM


@dataclass(frozen=True)
class TaintPath:
    vuln_type: str
    source_param: tuple[str, int]
    hops: tuple[Hop, ...]
    sink_pattern: str
    sink_span: SourceSpan
    sink_arg_index: int
    sink_callee_text: str

    @property
    def entry_qname(self) -> str:
        return self.source_param[0]

    @property
    def sink_fn(self) -> str:
        return self.hops[-1].fn

    def sink_id(self) -> tuple:
        return (self.sink_pattern, span_key(self.sink_span), self.sink_arg_index)

    def to_json(self) -> dict:
        return {
            "vulnType": self.vuln_type,
            "sourceParam": {"entry": self.source_param[0], "paramIndex": self.source_param[1]},
            "hops": [h.to_json() for h in self.hops],
            "sinkCall": {
                "calleePattern": self.sink_pattern,
                "span": self.sink_span.to_json(),
                "taintedArgIndex": self.sink_arg_index,
                "calleeText": self.sink_callee_text,
            },
        }

    @classmethod
    def from_json(cls, d: dict) -> "TaintPath":
        sc = d["sinkCall"]
        return cls(
            vuln_type=d["vulnType"],
            source_param=(d["sourceParam"]["entry"], d["sourceParam"]["paramIndex"]),
            hops=tuple(Hop.from_json(h) for h in d["hops"]),
            sink_pattern=sc["calleePattern"],
            sink_span=SourceSpan.from_json(sc["span"]),
            sink_arg_index=sc["taintedArgIndex"],
            sink_callee_text=sc["calleeText"],
        )


@dataclass
class AnalysisResult:
    paths: list[TaintPath]
    incomplete: bool = False
    visits: int = 0
    loop_visits: dict[tuple[str, str], int] = field(default_factory=dict)


def analyze_taint(
    model: ProgramModel,
    cg: CallGraph,
    spec: TaintSpec,
    max_visits: int = 500_000,
    entries: list[EntryPoint] | None = None,
) -> AnalysisResult:
    if entries is None:
        entries = resolve_entry_points(model)
    analyzer = _Analyzer(model, cg, spec, max_visits)
    incomplete = False
    for entry in entries:
        try:
            analyzer.run_entry(entry)
        except AnalysisBudgetExceeded:
            incomplete = True
            break
    paths = analyzer.collect_paths()
    return AnalysisResult(paths=paths, incomplete=incomplete,
                          visits=analyzer.visits, loop_visits=analyzer.loop_visits)


class _Analyzer:
    def __init__(self, model, cg, spec, max_visits):
        self.model = model
        self.cg = cg
        self.spec = spec
        self.max_visits = max_visits
        self.visits = 0
        self.loop_visits: dict[tuple[str, str], int] = {}
        self.store: dict[str, _ObjState] = {}
        # (entry, sink_id) -> {hops tuple -> TaintPath}
        self.found: dict[tuple, dict] = {}

    # --- bookkeeping ---

    def _tick(self) -> None:
        self.visits += 1
        if self.visits > self.max_visits:
            raise AnalysisBudgetExceeded()

    def _obj(self, oid: str) -> _ObjState:
        st = self.store.get(oid)
        if st is None:
            st = self.store[oid] = _ObjState()
        return st

    def record_sink(self, vuln_type, witness, sink_pattern, span, arg_index,
                    callee_text, current_fn):
        hops = witness.hops
        if not hops or hops[-1].fn != current_fn or hops[-1].span != span:
            hops = hops + (Hop(current_fn, span, callee_text),)
        path = TaintPath(
            vuln_type=vuln_type,
            source_param=witness.source,
            hops=hops,
            sink_pattern=sink_pattern,
            sink_span=span,
            sink_arg_index=arg_index,
            sink_callee_text=callee_text,
        )
        key = (witness.source[0], path.sink_id())
        bucket = self.found.setdefault(key, {})
        bucket.setdefault(path.hops, path)

    def collect_paths(self) -> list[TaintPath]:
        out: list[TaintPath] = []
        for key in sorted(self.found, key=lambda k: (k[0], k[1])):
            bucket = self.found[key]
            paths = sorted(
                bucket.values(),
                key=lambda p: (len(p.hops), p.source_param,
                               tuple((h.fn, span_key(h.span), h.access) for h in p.hops)),
            )
            out.extend(paths[:MAX_WITNESS_PATHS])
        return out

    # --- entry points ---

    def run_entry(self, entry: EntryPoint) -> None:
        fn = entry.decl
        env: dict[str, AbsValue] = {}
        seed_hop_base = Hop(fn.qualified_name, fn.span, "")
        for i, p in enumerate(fn.params):
            w = Witness((fn.qualified_name, i),
                        (Hop(fn.qualified_name, fn.span, p),))
            oid = f"param:{fn.qualified_name}:{i}"
            st = self._obj(oid)
            st.smashed = _join(st.smashed, AbsValue((w,)))
            env[p] = _mk([w], [oid])
        if fn.kind in ("method", "constructor"):
            env["this"] = _mk([], [f"this:{fn.qualified_name}"])
        frame = _Frame(fn.qualified_name, "", env)
        self._exec_block(fn.body, frame, stack=(fn.qualified_name,))

    # --- function application ---

    def call_function(self, qname: str, ctx: str, args: list[AbsValue],
                      this_val: AbsValue, stack: tuple, call_hop_site: SourceSpan,
                      caller_fn: str) -> AbsValue:
        fn = self.model.functions.get(qname)
        if fn is None or fn.body is None:
            return _join(*args) if args else BOTTOM
        if qname in stack:
            # recursion: do not expand again in this context
            return _join(*args) if args else BOTTOM
        env: dict[str, AbsValue] = {}
        for i, p in enumerate(fn.params):
            v = args[i] if i < len(args) else BOTTOM
            if v.tainted:
                hop = Hop(qname, fn.span, p)
                v = AbsValue(tuple(w.extended(hop) for w in v.witnesses), v.objs)
            env[p] = v
        env["this"] = this_val
        frame = _Frame(qname, ctx, env)
        self._exec_block(fn.body, frame, stack + (qname,))
        ret = frame.ret
        if ret.tainted:
            hop = Hop(caller_fn, call_hop_site, "(return)")
            ret = AbsValue(tuple(w.extended(hop) for w in ret.witnesses), ret.objs)
        return ret

    # --- statements ---

    def _exec_block(self, block: ast.Block, frame: "_Frame", stack: tuple) -> None:
        for stmt in block.body:
            if frame.returned:
                return
            self._exec_stmt(stmt, frame, stack)

    def _exec_stmt(self, stmt, frame: "_Frame", stack: tuple) -> None:
        if stmt is None:
            return
        self._tick()
        if isinstance(stmt, ast.VarDecl):
            for d in stmt.declarations:
                if d.pattern is not None:
                    init = self._eval(d.init, frame, stack) if d.init else BOTTOM
                    for prop, bound in d.pattern:
                        frame.env[bound] = self._member_read(init, prop)
                elif d.name is not None:
                    v = self._eval(d.init, frame, stack) if d.init else BOTTOM
                    frame.env[d.name] = self._hop_assign(v, frame, stmt.span, d.name)
        elif isinstance(stmt, ast.ExprStmt):
            self._eval(stmt.expr, frame, stack, stmt_span=stmt.span)
        elif isinstance(stmt, (ast.FuncDecl, ast.ClassDeclNode)):
            pass  # declarations are hoisted into the model, nothing to do
        elif isinstance(stmt, ast.Block):
            self._exec_block(stmt, frame, stack)
        elif isinstance(stmt, ast.If):
            self._eval(stmt.test, frame, stack)
            before = dict(frame.env)
            self._exec_stmt(stmt.then, frame, stack)
            then_env, then_ret = frame.env, frame.returned
            frame.env, frame.returned = dict(before), False
            if stmt.otherwise is not None:
                self._exec_stmt(stmt.otherwise, frame, stack)
            frame.env = _merge_env(then_env, frame.env)
            frame.returned = then_ret and frame.returned
        elif isinstance(stmt, ast.While):
            if stmt.is_do:
                self._loop_once(stmt, stmt.body, frame, stack)
                self._eval(stmt.test, frame, stack)
            else:
                self._eval(stmt.test, frame, stack)
                self._loop_once(stmt, stmt.body, frame, stack)
        elif isinstance(stmt, ast.For):
            self._exec_stmt(stmt.init, frame, stack)
            if stmt.test is not None:
                self._eval(stmt.test, frame, stack)
            self._loop_once(stmt, stmt.body, frame, stack, update=stmt.update)
        elif isinstance(stmt, ast.ForIn):
            obj_v = self._eval(stmt.obj, frame, stack)
            key_v = AbsValue(obj_v.witnesses)  # keys of attacker data are attacker data
            if key_v.tainted:
                hop = Hop(frame.fn, stmt.span, stmt.var_name)
                key_v = AbsValue(tuple(w.extended(hop) for w in key_v.witnesses))
            before = dict(frame.env)
            frame.env[stmt.var_name] = key_v
            self._loop_once(stmt, stmt.body, frame, stack)
            frame.env = _merge_env(before, frame.env)
        elif isinstance(stmt, ast.Return):
            v = self._eval(stmt.arg, frame, stack) if stmt.arg is not None else BOTTOM
            frame.ret = _join(frame.ret, v)
            frame.returned = True
        elif isinstance(stmt, ast.Throw):
            self._eval(stmt.arg, frame, stack)
        elif isinstance(stmt, ast.Try):
            self._exec_block(stmt.block, frame, stack)
            frame.returned = False  # catch path may continue
            if stmt.catch_block is not None:
                if stmt.catch_param:
                    frame.env[stmt.catch_param] = BOTTOM
                self._exec_block(stmt.catch_block, frame, stack)
            if stmt.finally_block is not None:
                self._exec_block(stmt.finally_block, frame, stack)
        elif isinstance(stmt, (ast.Break, ast.Continue)):
            pass

    def _loop_once(self, loop, body, frame: "_Frame", stack: tuple, update=None) -> None:
        key = (span_key(loop.span), frame.ctx)
        self.loop_visits[key] = self.loop_visits.get(key, 0) + 1
        before = dict(frame.env)
        self._exec_stmt(body, frame, stack)
        if update is not None:
            self._eval(update, frame, stack)
        frame.env = _merge_env(before, frame.env)
        frame.returned = False  # loop may execute zero times

    # --- expressions ---

    def _eval(self, node, frame: "_Frame", stack: tuple, stmt_span=None) -> AbsValue:
        if node is None or not isinstance(node, ast.Node):
            return BOTTOM
        self._tick()
        if isinstance(node, ast.Literal):
            return BOTTOM
        if isinstance(node, ast.Ident):
            if node.name in frame.env:
                return frame.env[node.name]
            return BOTTOM
        if isinstance(node, ast.ThisExpr):
            return frame.env.get("this", BOTTOM)
        if isinstance(node, ast.TemplateLit):
            return _strip_objs(_join(*(self._eval(e, frame, stack) for e in node.exprs)))
        if isinstance(node, ast.ArrayLit):
            oid = self._alloc(node.span, frame.ctx)
            st = self._obj(oid)
            st.smashed = _join(st.smashed, *(self._eval(e, frame, stack) for e in node.elements))
            return AbsValue(objs=(oid,))
        if isinstance(node, ast.ObjectLit):
            return self._eval_object(node, frame, stack)
        if isinstance(node, ast.Member):
            return self._eval_member(node, frame, stack)
        if isinstance(node, ast.Call):
            return self._eval_call(node, frame, stack, stmt_span)
        if isinstance(node, ast.New):
            return self._eval_new(node, frame, stack, stmt_span)
        if isinstance(node, ast.Assign):
            return self._eval_assign(node, frame, stack, stmt_span)
        if isinstance(node, ast.Binary):
            l = self._eval(node.left, frame, stack)
            r = self._eval(node.right, frame, stack)
            return _strip_objs(_join(l, r))
        if isinstance(node, ast.Logical):
            l = self._eval(node.left, frame, stack)
            r = self._eval(node.right, frame, stack)
            return _join(l, r)
        if isinstance(node, ast.Unary):
            v = self._eval(node.operand, frame, stack)
            if node.op == "typeof":
                return BOTTOM
            return _strip_objs(v)
        if isinstance(node, ast.Update):
            return _strip_objs(self._eval(node.target, frame, stack))
        if isinstance(node, ast.Conditional):
            self._eval(node.test, frame, stack)
            a = self._eval(node.consequent, frame, stack)
            b = self._eval(node.alternate, frame, stack)
            return _join(a, b)
        if isinstance(node, ast.Sequence):
            v = BOTTOM
            for e in node.exprs:
                v = self._eval(e, frame, stack)
            return v
        if isinstance(node, (ast.FuncExpr, ast.ClassDeclNode)):
            return BOTTOM  # function values: calls resolve via the call graph
        return BOTTOM

    def _alloc(self, span: SourceSpan, ctx: str) -> str:
        return f"{span_key(span)}@{ctx}"

    def _eval_object(self, node: ast.ObjectLit, frame, stack) -> AbsValue:
        oid = self._alloc(node.span, frame.ctx)
        st = self._obj(oid)
        for prop in node.properties:
            v = self._eval(prop.value, frame, stack)
            if prop.key == "..." or prop.computed or not isinstance(prop.key, str):
                if isinstance(prop.key, ast.Node):
                    self._eval(prop.key, frame, stack)
                st.smashed = _join(st.smashed, v)
            else:
                st.fields[prop.key] = _join(st.fields.get(prop.key, BOTTOM), v)
        return AbsValue(objs=(oid,))

    def _member_read(self, value: AbsValue, prop: str | None) -> AbsValue:
        ws: set[Witness] = set(value.witnesses)  # tainted base taints every read
        objs: set[str] = set()
        for oid in value.objs:
            st = self.store.get(oid)
            if st is None:
                continue
            ws.update(st.smashed.witnesses)
            objs.update(st.smashed.objs)
            if prop is None:
                for v in st.fields.values():
                    ws.update(v.witnesses)
                    objs.update(v.objs)
            elif prop in st.fields:
                ws.update(st.fields[prop].witnesses)
                objs.update(st.fields[prop].objs)
        if not ws and not objs:
            return BOTTOM
        return _mk(ws, objs)

    def _eval_member(self, node: ast.Member, frame, stack) -> AbsValue:
        base = self._eval(node.obj, frame, stack)
        if node.computed:
            if isinstance(node.prop, ast.Literal) and node.prop.kind == "string":
                return self._member_read(base, str(node.prop.value))
            self._eval(node.prop, frame, stack)
            return self._member_read(base, None)
        return self._member_read(base, str(node.prop))

    # --- assignment ---

    def _hop_assign(self, value: AbsValue, frame, span, access: str) -> AbsValue:
        if not value.tainted:
            return value
        hop = Hop(frame.fn, span, access)
        return AbsValue(tuple(w.extended(hop) for w in value.witnesses), value.objs)

    def _eval_assign(self, node: ast.Assign, frame, stack, stmt_span) -> AbsValue:
        span = stmt_span or node.span
        value = self._eval(node.value, frame, stack)
        if node.op != "=":
            old = self._eval(node.target, frame, stack)
            value = _strip_objs(_join(old, value))
        if isinstance(node.target, ast.Ident):
            frame.env[node.target.name] = self._hop_assign(value, frame, span, node.target.name)
            return value
        if isinstance(node.target, ast.Member):
            self._assign_member(node.target, value, frame, stack, span)
            return value
        return value

    def _assign_member(self, target: ast.Member, value: AbsValue, frame, stack, span) -> None:
        chain = _access_chain(target)
        base = self._eval(target.obj, frame, stack)
        access_text = _access_text(target)
        value = self._hop_assign(value, frame, span, access_text)

        key: str | None = None
        smash = False
        if target.computed:
            if isinstance(target.prop, ast.Literal):
                if target.prop.kind == "string":
                    key = str(target.prop.value)
                else:
                    smash = True  # numeric index: the whole array becomes tainted
            else:
                key_v = self._eval(target.prop, frame, stack)
                smash = True
                self._check_proto_sink(target, key_v, value, frame, span)
        else:
            key = str(target.prop)
        if chain is not None and len(chain) > K_FIELD:
            smash = True  # beyond the access-path budget: whole-object taint

        for oid in base.objs:
            st = self._obj(oid)
            if smash or key is None:
                st.smashed = _join(st.smashed, value)
            else:
                st.fields[key] = _join(st.fields.get(key, BOTTOM), value)

    def _check_proto_sink(self, target, key_v: AbsValue, value: AbsValue, frame, span) -> None:
        if not self.spec.proto_enabled():
            return
        if not (key_v.tainted and value.tainted):
            return
        callee_text = _access_text(target)
        for w in value.witnesses:
            self.record_sink("Proto", w, PROTO_WRITE_MARKER, span, 1,
                             callee_text, frame.fn)

    # --- calls ---

    def _eval_call(self, node: ast.Call, frame, stack, stmt_span) -> AbsValue:
        span = stmt_span or node.span
        args = [self._eval(a, frame, stack) for a in node.args]
        receiver = BOTTOM
        if isinstance(node.callee, ast.Member):
            receiver = self._eval(node.callee.obj, frame, stack)

        info = self.cg.infos.get(span_key(node.span))
        canonical = info.canonical if info else None
        dotted = info.dotted if info else _dotted_text_safe(node.callee)
        bare = info.bare if info else (dotted.rsplit(".", 1)[-1] if dotted else None)

        if self.spec.is_sanitizer(canonical, dotted, bare):
            return BOTTOM  # sanitizer: untainted regardless of arguments

        self._match_sinks(node, args, canonical, dotted, bare, frame)

        edge = self.cg.edges_by_site.get(span_key(node.span))
        if edge is not None:
            results = []
            ctx = span_key(node.span)
            for cand in edge.candidates:
                results.append(self.call_function(
                    cand, ctx, args, receiver, stack, node.span, frame.fn))
            return _join(*results)
        # opaque or builtin call: taint flows from receiver and args to result
        return _strip_objs(_join(receiver, *args)) if (args or receiver.tainted) else BOTTOM

    def _eval_new(self, node: ast.New, frame, stack, stmt_span) -> AbsValue:
        args = [self._eval(a, frame, stack) for a in node.args]
        info = self.cg.infos.get(span_key(node.span))
        canonical = info.canonical if info else None
        dotted = info.dotted if info else _dotted_text_safe(node.callee)
        bare = info.bare if info else None
        self._match_sinks(node, args, canonical, dotted, bare, frame)

        oid = self._alloc(node.span, frame.ctx)
        this_val = AbsValue(objs=(oid,))
        edge = self.cg.edges_by_site.get(span_key(node.span))
        if edge is not None:
            ctx = span_key(node.span)
            for cand in edge.candidates:
                self.call_function(cand, ctx, args, this_val, stack, node.span, frame.fn)
        elif any(a.tainted for a in args):
            st = self._obj(oid)
            st.smashed = _join(st.smashed, *args)
        return this_val

    def _match_sinks(self, node, args, canonical, dotted, bare, frame) -> None:
        for pattern in self.spec.sinks:
            if pattern.callee == PROTO_WRITE_MARKER:
                continue  # structural, handled at computed writes
            if not pattern.matches(canonical, dotted, bare):
                continue
            idx = pattern.arg_index
            if idx < len(args) and args[idx].tainted:
                callee_text = dotted or pattern.callee
                for w in args[idx].witnesses:
                    self.record_sink(pattern.vuln_type, w, pattern.callee,
                                     node.span, idx, callee_text, frame.fn)


class _Frame:
    __slots__ = ("fn", "ctx", "env", "ret", "returned")

    def __init__(self, fn: str, ctx: str, env: dict[str, AbsValue]):
        self.fn = fn
        self.ctx = ctx
        self.env = env
        self.ret: AbsValue = BOTTOM
        self.returned = False


def _merge_env(a: dict[str, AbsValue], b: dict[str, AbsValue]) -> dict[str, AbsValue]:
    out = dict(a)
    for k, v in b.items():
        out[k] = _join(out[k], v) if k in out else v
    return out


def _strip_objs(v: AbsValue) -> AbsValue:
    # scalar-producing operations keep taint but drop object identity
    return AbsValue(v.witnesses) if v.objs else v


def _access_chain(node: ast.Member) -> list[str] | None:
    parts: list[str] = []
    cur: ast.Node = node
    while isinstance(cur, ast.Member):
        parts.append("[*]" if cur.computed else str(cur.prop))
        cur = cur.obj
    if isinstance(cur, (ast.Ident, ast.ThisExpr)):
        return list(reversed(parts))
    return None


def _access_text(node: ast.Member) -> str:
    chain = _access_chain(node)
    base = node
    while isinstance(base, ast.Member):
        base = base.obj
    base_name = base.name if isinstance(base, ast.Ident) else "this"
    if chain is None:
        return base_name
    kept = chain[:K_FIELD]
    suffix = ".*" if len(chain) > K_FIELD else ""
    out = base_name
    for seg in kept:
        out += seg if seg == "[*]" else f".{seg}"
    return out + suffix


def _dotted_text_safe(node) -> str | None:
    if isinstance(node, ast.Ident):
        return node.name
    if isinstance(node, ast.Member) and not node.computed:
        base = _dotted_text_safe(node.obj)
        return f"{base}.{node.prop}" if base else str(node.prop)
    return None
