"""Static anti-cheat scan of exploit candidates.

An exploit must trigger the payload through the target package. A candidate
that invokes the payload API itself is rejected before it ever runs: spawning
a process or evaluating code for command/code injection, reading the planted
canary file for path traversal, or assigning through a prototype-carrying
expression for prototype pollution.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..frontend import jsast as ast
from ..frontend.parser import ParseError, parse_program
from .types import CanarySpec

ANTI_CHEAT_CMD_PHRASE = "exploit is invalid because it calls command execution API directly"
ANTI_CHEAT_PATH_PHRASE = "exploit is invalid because it reads the canary file directly"
ANTI_CHEAT_PROTO_PHRASE = "exploit is invalid because it writes the prototype directly"

_SPAWN_PROPS = {"exec", "execSync", "execFile", "execFileSync", "spawn", "spawnSync", "fork"}
_FS_READ_PROPS = {"readFile", "readFileSync", "createReadStream", "open", "openSync", "readdirSync"}


@dataclass(frozen=True)
class AntiCheatVerdict:
    ok: bool
    evidence: str | None = None


def anti_cheat_scan(source: str, vuln_type: str,
                    canary: CanarySpec | None = None) -> AntiCheatVerdict:
    try:
        program = parse_program(source, "<exploit>")
    except ParseError:
        return AntiCheatVerdict(True)  # unparseable candidates never reach execution

    cp_aliases: set[str] = set()  # names bound to the child_process module
    spawn_fns: set[str] = set()  # names bound to exec/spawn functions directly
    fs_aliases: set[str] = set()
    fs_fns: set[str] = set()

    for node in ast.walk(program):
        if isinstance(node, ast.VarDecl):
            for d in node.declarations:
                target = _require_target(d.init)
                if target == "child_process":
                    if d.name:
                        cp_aliases.add(d.name)
                    for prop, bound in d.pattern or []:
                        if prop in _SPAWN_PROPS:
                            spawn_fns.add(bound)
                elif target == "fs":
                    if d.name:
                        fs_aliases.add(d.name)
                    for prop, bound in d.pattern or []:
                        if prop in _FS_READ_PROPS:
                            fs_fns.add(bound)

    if vuln_type in ("CmdInj", "CodeInj"):
        hit = _find_spawn_or_eval(program, cp_aliases, spawn_fns)
        if hit is not None:
            text, line = hit
            return AntiCheatVerdict(False, f"{ANTI_CHEAT_CMD_PHRASE}: {text} at line {line}")
    elif vuln_type == "Path" and canary is not None:
        hit = _find_direct_canary_read(program, fs_aliases, fs_fns, canary.fs_canary_path)
        if hit is not None:
            text, line = hit
            return AntiCheatVerdict(False, f"{ANTI_CHEAT_PATH_PHRASE}: {text} at line {line}")
    elif vuln_type == "Proto":
        hit = _find_proto_write(program)
        if hit is not None:
            text, line = hit
            return AntiCheatVerdict(False, f"{ANTI_CHEAT_PROTO_PHRASE}: {text} at line {line}")
    return AntiCheatVerdict(True)


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


def _callee_as_module_member(callee, aliases: set[str], module: str) -> str | None:
    """Returns 'alias.prop' text when callee is <alias>.<prop> or
    require('<module>').<prop>."""
    if isinstance(callee, ast.Member) and not callee.computed:
        if isinstance(callee.obj, ast.Ident) and callee.obj.name in aliases:
            return f"{callee.obj.name}.{callee.prop}"
        if _require_target(callee.obj) == module:
            return f'require("{module}").{callee.prop}'
    return None


def _find_spawn_or_eval(program, cp_aliases, spawn_fns):
    for node in ast.walk(program):
        if isinstance(node, (ast.Call, ast.New)):
            callee = node.callee
            if isinstance(callee, ast.Ident):
                if callee.name in spawn_fns:
                    return callee.name, node.span.start_line
                if callee.name in ("eval", "Function"):
                    return callee.name, node.span.start_line
            member = _callee_as_module_member(callee, cp_aliases, "child_process")
            if member is not None and member.rsplit(".", 1)[-1] in _SPAWN_PROPS:
                return member, node.span.start_line
    return None


def _find_direct_canary_read(program, fs_aliases, fs_fns, canary_name: str):
    for node in ast.walk(program):
        if not isinstance(node, ast.Call):
            continue
        callee = node.callee
        is_fs_read = False
        text = ""
        if isinstance(callee, ast.Ident) and callee.name in fs_fns:
            is_fs_read = True
            text = callee.name
        else:
            member = _callee_as_module_member(callee, fs_aliases, "fs")
            if member is not None and member.rsplit(".", 1)[-1] in _FS_READ_PROPS:
                is_fs_read = True
                text = member
        if is_fs_read and any(_literal_contains(a, canary_name) for a in node.args):
            return text, node.span.start_line
    return None


def _literal_contains(node, needle: str) -> bool:
    for n in ast.walk(node):
        if isinstance(n, ast.Literal) and n.kind == "string" and needle in str(n.value):
            return True
        if isinstance(n, ast.TemplateLit) and any(needle in q for q in n.quasis):
            return True
    return False


def _find_proto_write(program):
    for node in ast.walk(program):
        if isinstance(node, ast.Assign) and isinstance(node.target, ast.Member):
            chain = _member_chain_text(node.target)
            if chain is None:
                continue
            if "__proto__" in chain or ".prototype" in chain or chain.startswith("prototype."):
                return chain, node.span.start_line
    return None


def _member_chain_text(node) -> str | None:
    parts: list[str] = []
    cur = node
    while isinstance(cur, ast.Member):
        if cur.computed:
            if isinstance(cur.prop, ast.Literal) and cur.prop.kind == "string":
                parts.append(str(cur.prop.value))
            else:
                parts.append("[*]")
        else:
            parts.append(str(cur.prop))
        cur = cur.obj
    if isinstance(cur, ast.Ident):
        parts.append(cur.name)
    elif isinstance(cur, ast.ThisExpr):
        parts.append("this")
    else:
        parts.append("(...)")
    return ".".join(reversed(parts))
