"""Package frontend: parse CommonJS sources into a queryable program model.

This subpackage is the only place the analyzed language's concrete syntax is
known. Everything downstream (taint engine, alert builder, validator) works
on the model types exported here.
"""

from .model import (
    ClassDecl,
    Diagnostic,
    EntryPoint,
    FunctionDecl,
    ProgramModel,
    SourceSpan,
    read_span,
)
from .builder import (
    EmptyPackageError,
    FrontendError,
    MissingManifestError,
    build_model_from_sources,
    check_syntax,
    parse_package,
    resolve_entry_points,
)

__all__ = [
    "ClassDecl",
    "Diagnostic",
    "EmptyPackageError",
    "EntryPoint",
    "FrontendError",
    "FunctionDecl",
    "MissingManifestError",
    "ProgramModel",
    "SourceSpan",
    "build_model_from_sources",
    "check_syntax",
    "parse_package",
    "read_span",
    "resolve_entry_points",
]
