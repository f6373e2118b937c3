"""AST node classes for the parsed subset.

Nodes are plain dataclasses; every node carries a SourceSpan. Constructs the
taint engine has no precise semantics for still parse into these shapes and
are handled opaquely downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import SourceSpan


@dataclass
class Node:
    span: SourceSpan


# --- expressions -----------------------------------------------------------


@dataclass
class Ident(Node):
    name: str


@dataclass
class Literal(Node):
    value: object  # str | float | bool | None
    raw: str
    kind: str  # "string" | "number" | "boolean" | "null" | "regex"


@dataclass
class TemplateLit(Node):
    quasis: list[str]
    exprs: list[Node]


@dataclass
class ArrayLit(Node):
    elements: list[Node]


@dataclass
class Property(Node):
    key: object  # str for identifier/string keys, Node for computed keys
    value: Node
    computed: bool


@dataclass
class ObjectLit(Node):
    properties: list[Property]


@dataclass
class Member(Node):
    obj: Node
    prop: object  # str for dot access, Node for computed access
    computed: bool


@dataclass
class Call(Node):
    callee: Node
    args: list[Node]


@dataclass
class New(Node):
    callee: Node
    args: list[Node]


@dataclass
class Assign(Node):
    op: str  # "=", "+=", ...
    target: Node
    value: Node


@dataclass
class Binary(Node):
    op: str
    left: Node
    right: Node


@dataclass
class Logical(Node):
    op: str  # "&&" | "||" | "??"
    left: Node
    right: Node


@dataclass
class Unary(Node):
    op: str
    operand: Node


@dataclass
class Update(Node):
    op: str  # "++" | "--"
    target: Node
    prefix: bool


@dataclass
class Conditional(Node):
    test: Node
    consequent: Node
    alternate: Node


@dataclass
class Sequence(Node):
    exprs: list[Node]


@dataclass
class FuncExpr(Node):
    name: str | None
    params: list[str]
    body: "Block"
    arrow: bool = False


@dataclass
class ThisExpr(Node):
    pass


# --- statements ------------------------------------------------------------


@dataclass
class Block(Node):
    body: list[Node]


@dataclass
class Declarator(Node):
    # target is a plain name, or a list of (property, bound name) pairs for
    # the `const {a, b: c} = expr` destructuring form.
    name: str | None
    pattern: list[tuple[str, str]] | None
    init: Node | None


@dataclass
class VarDecl(Node):
    kind: str  # "var" | "let" | "const"
    declarations: list[Declarator]


@dataclass
class ExprStmt(Node):
    expr: Node


@dataclass
class If(Node):
    test: Node
    then: Node
    otherwise: Node | None


@dataclass
class While(Node):
    test: Node
    body: Node
    is_do: bool = False


@dataclass
class For(Node):
    init: Node | None
    test: Node | None
    update: Node | None
    body: Node


@dataclass
class ForIn(Node):
    var_name: str
    obj: Node
    body: Node
    of: bool  # True for for-of


@dataclass
class Return(Node):
    arg: Node | None


@dataclass
class Throw(Node):
    arg: Node


@dataclass
class Try(Node):
    block: Block
    catch_param: str | None
    catch_block: Block | None
    finally_block: Block | None


@dataclass
class Break(Node):
    pass


@dataclass
class Continue(Node):
    pass


@dataclass
class FuncDecl(Node):
    name: str
    params: list[str]
    body: Block


@dataclass
class MethodDef(Node):
    kind: str  # "constructor" | "method"
    name: str
    params: list[str]
    body: Block
    static: bool = False


@dataclass
class ClassDeclNode(Node):
    name: str
    superclass: str | None
    methods: list[MethodDef]


@dataclass
class Program(Node):
    body: list[Node]


def walk(node):
    """Yield every node in the subtree rooted at ``node`` (pre-order)."""
    stack = [node]
    while stack:
        n = stack.pop()
        if n is None or not isinstance(n, Node):
            continue
        yield n
        children: list = []
        for f in n.__dataclass_fields__:
            if f == "span":
                continue
            v = getattr(n, f)
            if isinstance(v, Node):
                children.append(v)
            elif isinstance(v, list):
                children.extend(x for x in v if isinstance(x, Node))
        stack.extend(reversed(children))
