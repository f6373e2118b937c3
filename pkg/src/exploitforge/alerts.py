"""Group taint paths into alerts and attach the context an exploit writer
needs: the call chain with full source, the input class closure, the sink and
entry-point renderings, and a skeleton exploit template.

Serialized alerts use the stable field order alertId, vulnType, packageName,
callChainWithCtx, inputClassSet, sink, entryPoint, template, paths. The
alerts file is the contract between the analysis stage and the agent stage.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .frontend import jsast as ast
from .frontend.builder import resolve_entry_points
from .frontend.model import ClassDecl, EntryPoint, FunctionDecl, ProgramModel
from .taint.callgraph import span_key
from .taint.engine import TaintPath


class InconsistentPathsError(Exception):
    pass


SOURCE_MARKER = "<source>"


@dataclass
class AlertInfo:
    alert_id: str
    vuln_type: str
    package_name: str  # "name:version"
    call_chain_with_ctx: list[tuple[str, str]]  # [signature, source] pairs
    input_class_set: list[str]
    sink: str
    entry_point: str
    template: str
    paths: list[TaintPath] = field(default_factory=list)
    entry_qname: str = ""
    entry_import_name: str = ""

    def to_json(self) -> dict:
        return {
            "alertId": self.alert_id,
            "vulnType": self.vuln_type,
            "packageName": self.package_name,
            "callChainWithCtx": [[sig, src] for sig, src in self.call_chain_with_ctx],
            "inputClassSet": list(self.input_class_set),
            "sink": self.sink,
            "entryPoint": self.entry_point,
            "template": self.template,
            "paths": [p.to_json() for p in self.paths],
            "entryQualifiedName": self.entry_qname,
            "entryImportName": self.entry_import_name,
        }

    @classmethod
    def from_json(cls, d: dict) -> "AlertInfo":
        return cls(
            alert_id=d["alertId"],
            vuln_type=d["vulnType"],
            package_name=d["packageName"],
            call_chain_with_ctx=[(sig, src) for sig, src in d["callChainWithCtx"]],
            input_class_set=list(d["inputClassSet"]),
            sink=d["sink"],
            entry_point=d["entryPoint"],
            template=d["template"],
            paths=[TaintPath.from_json(p) for p in d.get("paths", [])],
            entry_qname=d.get("entryQualifiedName", ""),
            entry_import_name=d.get("entryImportName", ""),
        )


def _owner_qualified(fn: FunctionDecl) -> str:
    if fn.owner_class is not None:
        return f"{fn.owner_class}.{fn.short_name}"
    return fn.short_name


def render_sink(path: TaintPath, model: ProgramModel) -> str:
    enclosing = model.functions.get(path.sink_fn)
    fn_name = _owner_qualified(enclosing) if enclosing else path.sink_fn
    return f"{path.sink_callee_text} (...) in {fn_name}"


def alert_id_for(package_id: str, entry_point: str, sink: str) -> str:
    digest = hashlib.sha256(f"{package_id}|{entry_point}|{sink}".encode("utf-8"))
    return digest.hexdigest()[:12]


def build_alert(paths: list[TaintPath], model: ProgramModel, entry: EntryPoint) -> AlertInfo:
    if not paths:
        raise InconsistentPathsError("no paths supplied")
    sink_ids = {p.sink_id() for p in paths}
    entries = {p.entry_qname for p in paths}
    if len(sink_ids) != 1 or len(entries) != 1:
        raise InconsistentPathsError(
            f"paths disagree on sink/entry: {sorted(entries)} / {sorted(sink_ids)}")
    if entries != {entry.decl.qualified_name}:
        raise InconsistentPathsError("paths do not originate at the given entry point")

    chain: list[tuple[str, str]] = []
    seen: set[str] = set()
    for p in paths:
        for hop in p.hops:
            if hop.fn in seen:
                continue
            fn = model.functions.get(hop.fn)
            if fn is None:
                continue
            seen.add(hop.fn)
            chain.append((fn.signature(), fn.source_text))

    sink = render_sink(paths[0], model)
    entry_sig = entry.decl.signature()
    tainted_index = paths[0].source_param[1]
    template = generate_template(entry, model, tainted_index=tainted_index)
    return AlertInfo(
        alert_id=alert_id_for(model.package_id, entry_sig, sink),
        vuln_type=paths[0].vuln_type,
        package_name=model.package_id,
        call_chain_with_ctx=chain,
        input_class_set=collect_input_class_set(
            entry, model, chain_functions=sorted(seen)),
        sink=sink,
        entry_point=entry_sig,
        template=template,
        paths=list(paths),
        entry_qname=entry.decl.qualified_name,
        entry_import_name=entry.import_name,
    )


def group_paths_into_alerts(paths: list[TaintPath], model: ProgramModel) -> list[AlertInfo]:
    by_entry = {e.decl.qualified_name: e for e in resolve_entry_points(model)}
    groups: dict[tuple, list[TaintPath]] = {}
    for p in paths:
        groups.setdefault((p.entry_qname, p.sink_id()), []).append(p)
    alerts = []
    for key in sorted(groups, key=lambda k: (k[0], k[1])):
        entry = by_entry.get(key[0])
        if entry is None:
            continue
        alerts.append(build_alert(groups[key], model, entry))
    return alerts


def write_alerts_file(alerts: list[AlertInfo], path) -> None:
    data = [a.to_json() for a in alerts]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def load_alerts_file(path) -> list[AlertInfo]:
    with open(path, encoding="utf-8") as fh:
        return [AlertInfo.from_json(d) for d in json.load(fh)]


# --- input class set ---------------------------------------------------------


def collect_input_class_set(
    entry: EntryPoint,
    model: ProgramModel,
    chain_functions: list[str] | None = None,
) -> list[str]:
    """Closure of user-defined classes relevant to building the entry's input.

    Seeds: classes instantiated or property-matched inside the entry (and the
    supplied call-chain functions), plus the entry's receiver class. Every
    included class pulls in its constructor and all superclass constructors;
    constructors seed further classes until the set is stable.
    """
    included: list[str] = []  # class names in first-inclusion order

    def include_with_supers(name: str) -> None:
        cur = model.classes.get(name)
        while cur is not None:
            if cur.name not in included:
                included.append(cur.name)
            cur = model.classes.get(cur.superclass_name) if cur.superclass_name else None

    def seeds_from_function(fn: FunctionDecl) -> list[str]:
        names: list[str] = []
        if fn.body is None:
            return names
        params = set(fn.params)
        for node in ast.walk(fn.body):
            if isinstance(node, ast.New) and isinstance(node.callee, ast.Ident):
                if node.callee.name in model.classes:
                    names.append(node.callee.name)
            elif isinstance(node, ast.Member) and not node.computed:
                if isinstance(node.obj, ast.Ident) and node.obj.name in params:
                    names.extend(_classes_defining(model, str(node.prop)))
        return names

    worklist: list[str] = []
    if entry.receiver_class is not None:
        worklist.append(entry.receiver_class.name)
    worklist.extend(seeds_from_function(entry.decl))
    for qname in chain_functions or []:
        fn = model.functions.get(qname)
        if fn is not None and fn is not entry.decl:
            for node in ast.walk(fn.body) if fn.body else []:
                if isinstance(node, ast.New) and isinstance(node.callee, ast.Ident) \
                        and node.callee.name in model.classes:
                    worklist.append(node.callee.name)

    processed: set[str] = set()
    while worklist:
        name = worklist.pop(0)
        if name in processed or name not in model.classes:
            continue
        processed.add(name)
        include_with_supers(name)
        ctor = model.classes[name].constructor
        if ctor is not None:
            worklist.extend(seeds_from_function(ctor))

    out: list[str] = []
    for name in included:
        cls = model.classes[name]
        if cls.constructor is not None:
            out.append(f"{name}.{cls.constructor.source_text}")
        else:
            out.append(cls.source_text)
    return out


def _classes_defining(model: ProgramModel, prop: str) -> list[str]:
    """Classes whose constructor assigns this.<prop> or that define method <prop>."""
    matches: list[str] = []
    for name in model.classes:
        cls = model.classes[name]
        if any(m.short_name == prop for m in cls.methods):
            matches.append(name)
            continue
        ctor = cls.constructor
        if ctor is not None and ctor.body is not None:
            for node in ast.walk(ctor.body):
                if (
                    isinstance(node, ast.Assign)
                    and isinstance(node.target, ast.Member)
                    and not node.target.computed
                    and isinstance(node.target.obj, ast.ThisExpr)
                    and str(node.target.prop) == prop
                ):
                    matches.append(name)
                    break
    return matches


# --- exploit template --------------------------------------------------------


def generate_template(entry: EntryPoint, model: ProgramModel, tainted_index: int = 0) -> str:
    """Skeleton exploit: an import line plus a call of the entry point with
    ``<source>`` at the attacker-controlled parameter position. Free
    parameters are ``null`` literals labeled in trailing comments."""
    pkg_ref = "pkg"
    lines = [f'const {pkg_ref} = require("{model.package_name}");']
    counter = [0]

    def placeholder() -> str:
        s = f"null /* PLACEHOLDER_{counter[0]} */"
        counter[0] += 1
        return s

    def arg_list(params: list[str], marker_at: int | None) -> str:
        out = []
        for i in range(len(params)):
            out.append(SOURCE_MARKER if i == marker_at else placeholder())
        return ", ".join(out)

    decl = entry.decl
    callee = f"{pkg_ref}.{entry.import_name}" if entry.import_name else pkg_ref
    if decl.kind == "function":
        lines.append(f"{callee}({arg_list(decl.params, tainted_index)});")
    elif decl.kind == "constructor":
        lines.append(f"new {callee}({arg_list(decl.params, tainted_index)});")
    else:  # method: build the receiver first
        ctor = entry.receiver_class.constructor if entry.receiver_class else None
        ctor_params = ctor.params if ctor is not None else []
        lines.append(f"const instance = new {callee}({arg_list(ctor_params, None)});")
        lines.append(f"instance.{decl.short_name}({arg_list(decl.params, tainted_index)});")
    return "\n".join(lines)
