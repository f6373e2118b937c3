"""Program-model types shared by every stage of the pipeline.

Spans are 1-based, end-exclusive in the column: the span of ``abc`` starting
at line 1 column 5 is (1, 5)..(1, 8). ``read_span`` reproduces the exact
source substring from line/column coordinates alone, which is what the
round-trip tests assert.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class SourceSpan:
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __post_init__(self) -> None:
        if (self.start_line, self.start_col) > (self.end_line, self.end_col):
            raise ValueError(f"inverted span: {self}")
        if self.file.startswith("/") or self.file.split("/")[0] == "..":
            raise ValueError(f"span file must be package-relative: {self.file!r}")

    def render(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}"

    def to_json(self) -> dict:
        return {
            "file": self.file,
            "startLine": self.start_line,
            "startCol": self.start_col,
            "endLine": self.end_line,
            "endCol": self.end_col,
        }

    @classmethod
    def from_json(cls, d: dict) -> "SourceSpan":
        return cls(d["file"], d["startLine"], d["startCol"], d["endLine"], d["endCol"])


def read_span(source: str, span: SourceSpan) -> str:
    """Extract the exact text covered by ``span`` from the file's source."""
    lines = source.split("\n")
    if span.start_line == span.end_line:
        line = lines[span.start_line - 1]
        return line[span.start_col - 1 : span.end_col - 1]
    parts = [lines[span.start_line - 1][span.start_col - 1 :]]
    for ln in range(span.start_line + 1, span.end_line):
        parts.append(lines[ln - 1])
    parts.append(lines[span.end_line - 1][: span.end_col - 1])
    return "\n".join(parts)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    span: SourceSpan | None = None

    def render(self) -> str:
        loc = self.span.render() if self.span else "<package>"
        return f"{loc}: {self.severity}: {self.message}"


@dataclass
class FunctionDecl:
    qualified_name: str
    kind: str  # "function" | "method" | "constructor"
    owner_class: str | None
    params: list[str]
    span: SourceSpan
    source_text: str
    exported: bool = False
    body: object = None  # frontend.jsast.Block, opaque to model consumers

    def __post_init__(self) -> None:
        if (self.kind in ("method", "constructor")) != (self.owner_class is not None):
            raise ValueError(
                f"{self.qualified_name}: kind {self.kind!r} inconsistent with ownerClass"
            )

    @property
    def short_name(self) -> str:
        return self.qualified_name.rsplit("::", 1)[-1]

    def signature(self) -> str:
        """Human signature in alert style, e.g. ``run (cmd)`` or ``Job.execute (ctx)``."""
        name = self.short_name
        if self.owner_class is not None:
            name = f"{self.owner_class}.{name}"
        return f"{name} ({', '.join(self.params)})"


@dataclass
class ClassDecl:
    name: str
    superclass_name: str | None
    constructor: FunctionDecl | None
    methods: list[FunctionDecl]
    span: SourceSpan
    source_text: str = ""


@dataclass
class ProgramModel:
    package_name: str
    package_version: str
    files: list[str]
    functions: dict[str, FunctionDecl]
    classes: dict[str, ClassDecl]
    exports: dict[str, object]  # export name -> FunctionDecl | ClassDecl
    main_entry_file: str
    sources: dict[str, str] = field(default_factory=dict)  # relative path -> raw text
    warnings: list[Diagnostic] = field(default_factory=list)
    file_asts: dict = field(default_factory=dict)  # relative path -> jsast.Program
    file_exports: dict = field(default_factory=dict)  # relative path -> export map

    @property
    def package_id(self) -> str:
        return f"{self.package_name}:{self.package_version}"

    def function_by_short_name(self, name: str) -> list[FunctionDecl]:
        return [f for f in self.functions.values() if f.short_name == name]

    def class_of(self, name: str) -> ClassDecl | None:
        return self.classes.get(name)


@dataclass
class EntryPoint:
    """A publicly reachable function with attacker-controlled parameters."""

    decl: FunctionDecl
    import_name: str  # export name the function is reachable under ("" = module itself)
    receiver_class: ClassDecl | None = None

    def __post_init__(self) -> None:
        if (self.decl.kind == "method") != (self.receiver_class is not None):
            raise ValueError("receiverClass present iff the entry is a method")

    def signature(self) -> str:
        return self.decl.signature()
