"""Meaning-typed IR: one entry per `by` call-site.

Each entry bundles the call-site's subject, signature, model binding and
the closure of class schemas reachable from its signature. The runtime
reads nothing else, so entries must carry every schema they need.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Literal, Mapping, Optional, Union

from pydantic import BaseModel, ConfigDict, StrictBool, StrictFloat, StrictInt, StrictStr, ValidationError

from .ast_nodes import (
    Call, ClassDecl, Expr, FuncDecl, IfStmt, ListType, MapType, ModuleAST, NamedType, Stmt,
    TypeExpr, Attribute, BinaryOp, ExprStmt, LetStmt, AssignStmt, ListLiteral, MapLiteral,
    MethodCall, PrintStmt, ReturnStmt, UnaryOp,
)
from .errors import FormatError, FrontendError, MisplacedByError, UnresolvedNameError
from .parser import parse_type_text
from .registry import SemanticRegistry, SymbolKind

logger = logging.getLogger(__name__)

RETURN_SLOT = "return"
"""Output name used for function and method results."""


class CallSiteKind(str, Enum):
    FUNCTION = "function"
    METHOD = "method"
    INIT = "init"


@dataclass(frozen=True)
class TypeSchema:
    name: str
    fields: tuple[tuple[str, TypeExpr], ...] = ()

    def render(self) -> str:
        """``Name(field: type, ...)``, the form used in prompts."""
        return f"{self.name}(" + ", ".join(f"{n}: {t}" for n, t in self.fields) + ")"


@dataclass(frozen=True)
class MTIREntry:
    site_id: str
    kind: CallSiteKind
    subject: str
    """``f`` for functions, ``C.mth`` for methods, ``C`` for object initialization."""
    params: tuple[tuple[str, TypeExpr], ...] = ()
    """Parameters, or the provided attribute slots of an object initialization."""
    outputs: tuple[tuple[str, TypeExpr], ...] = ()
    """The return slot, or the missing attribute slots of an object initialization."""
    receiver: Optional[str] = None
    model_ref: str = ""
    hyperparams: tuple[tuple[str, Union[int, float, str, bool]], ...] = ()
    """Sorted by name."""
    type_explanations: tuple[TypeSchema, ...] = ()

    @property
    def output_type(self) -> TypeExpr:
        """Type of the value the model must produce."""
        if self.kind == CallSiteKind.INIT:
            return NamedType(self.subject)
        return self.outputs[0][1]

    @property
    def signature_text(self) -> str:
        params = ", ".join(f"{n}: {t}" for n, t in self.params)
        return f"{self.subject}({params}) -> {self.output_type}"

    def hyperparam(self, name: str, default=None):
        return dict(self.hyperparams).get(name, default)

    def schema(self, class_name: str) -> Optional[TypeSchema]:
        return next((s for s in self.type_explanations if s.name == class_name), None)

    def fields_of(self, class_name: str) -> Optional[tuple[tuple[str, TypeExpr], ...]]:
        schema = self.schema(class_name)
        return None if schema is None else schema.fields


@dataclass(frozen=True)
class MTIRMap:
    entries: Mapping[str, MTIREntry] = field(default_factory=lambda: MappingProxyType({}))

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, site_id: str) -> Optional[MTIREntry]:
        return self.entries.get(site_id)

    def __eq__(self, other) -> bool:
        return isinstance(other, MTIRMap) and dict(self.entries) == dict(other.entries)


@dataclass(frozen=True)
class CallSite:
    site_id: str
    kind: CallSiteKind
    node: Union[FuncDecl, Call]
    module: str
    owner: Optional[ClassDecl] = None


def site_id_for(module: str, loc: tuple[int, int]) -> str:
    return f"{module}:{loc[0]}:{loc[1]}"


# -------------------- collection --------------------
def collect_by_callsites(modules: list[ModuleAST]) -> list[CallSite]:
    """Find every `by` clause in the program.

    Declarations contribute function and method sites; object
    initializations carrying a by clause contribute init sites. Sites are
    ordered by module, then by source position.
    """
    sites: list[CallSite] = []
    for module in modules:
        found: list[CallSite] = []
        for decl in module.decls:
            if isinstance(decl, FuncDecl):
                if decl.by is not None:
                    found.append(CallSite(site_id_for(module.name, decl.by.loc), CallSiteKind.FUNCTION,
                                          decl, module.name))
                else:
                    _collect_inits(decl.body, module.name, found)
                continue
            for method in decl.methods:
                if method.by is not None:
                    found.append(CallSite(site_id_for(module.name, method.by.loc), CallSiteKind.METHOD,
                                          method, module.name, decl))
                else:
                    _collect_inits(method.body, module.name, found)
        _collect_inits(module.stmts, module.name, found)
        found.sort(key=lambda s: s.node.by.loc)
        sites.extend(found)
    return sites


def _collect_inits(body, module: str, out: list[CallSite]):
    for stmt in body or ():
        for expr in _stmt_exprs(stmt):
            _collect_expr(expr, module, out)
        if isinstance(stmt, IfStmt):
            _collect_inits(stmt.then_body, module, out)
            _collect_inits(stmt.else_body, module, out)


def _stmt_exprs(stmt: Stmt) -> list[Expr]:
    if isinstance(stmt, (LetStmt, AssignStmt, PrintStmt)):
        return [stmt.value]
    if isinstance(stmt, ReturnStmt):
        return [] if stmt.value is None else [stmt.value]
    if isinstance(stmt, ExprStmt):
        return [stmt.expr]
    if isinstance(stmt, IfStmt):
        return [stmt.condition]
    return []


def _collect_expr(expr: Expr, module: str, out: list[CallSite]):
    children: list[Expr] = []
    if isinstance(expr, Call):
        if expr.by is not None:
            out.append(CallSite(site_id_for(module, expr.by.loc), CallSiteKind.INIT, expr, module))
        children = list(expr.args) + [v for _, v in expr.kwargs]
    elif isinstance(expr, MethodCall):
        children = [expr.receiver, *expr.args, *(v for _, v in expr.kwargs)]
    elif isinstance(expr, Attribute):
        children = [expr.receiver]
    elif isinstance(expr, ListLiteral):
        children = list(expr.elements)
    elif isinstance(expr, MapLiteral):
        children = [e for pair in expr.pairs for e in pair]
    elif isinstance(expr, BinaryOp):
        children = [expr.left, expr.right]
    elif isinstance(expr, UnaryOp):
        children = [expr.operand]
    for child in children:
        _collect_expr(child, module, out)


# -------------------- type closure --------------------
def extract_type_definition(t: TypeExpr, registry: SemanticRegistry, visited: set[str],
                            module: Optional[str] = None) -> list[TypeSchema]:
    """Schemas of every class reachable from ``t``, depth-first pre-order.

    ``visited`` holds qualified class names already extracted and is
    updated in place, so repeated calls over one call-site share it and
    cyclic types terminate.
    """
    if isinstance(t, ListType):
        return extract_type_definition(t.element, registry, visited, module)
    if isinstance(t, MapType):
        return (extract_type_definition(t.key, registry, visited, module)
                + extract_type_definition(t.value, registry, visited, module))
    if not isinstance(t, NamedType):
        return []

    symbol = registry.resolve_class(t.name, module)
    qualified = f"{symbol.module}.{symbol.name}"
    if qualified in visited:
        return []
    visited.add(qualified)

    fields = registry.fields_of_class(symbol)
    schemas = [TypeSchema(symbol.name, fields)]
    for _, field_type in fields:
        schemas += extract_type_definition(field_type, registry, visited, symbol.module)
    return schemas


# -------------------- construction --------------------
def build_mtir(modules: list[ModuleAST], registry: SemanticRegistry) -> MTIRMap:
    """Build one MTIREntry per `by` call-site.

    Raises:
        UnresolvedNameError: A type in a call-site signature does not resolve
        MisplacedByError: A by clause sits on a call of a function
    """
    entries: dict[str, MTIREntry] = {}
    for site in collect_by_callsites(modules):
        try:
            entries[site.site_id] = _build_entry(site, registry)
        except UnresolvedNameError as e:
            raise UnresolvedNameError(e.name, e.use_loc, f"needed by call-site {site.site_id}") from e
        logger.debug("mtir entry %s (%s) with %d type(s)", site.site_id, site.kind.value,
                     len(entries[site.site_id].type_explanations))
    return MTIRMap(MappingProxyType(entries))


def _build_entry(site: CallSite, registry: SemanticRegistry) -> MTIREntry:
    node = site.node
    by = node.by
    receiver: Optional[str] = None
    closure_roots: list[tuple[TypeExpr, str]]

    if site.kind == CallSiteKind.INIT:
        symbol = registry.resolve(node.callee, site.module)
        if symbol is None:
            raise UnresolvedNameError(node.callee, (site.module, *node.loc), "class")
        if symbol.kind != SymbolKind.CLASS:
            raise MisplacedByError(node.callee, (site.module, *by.loc))
        declared = registry.fields_of_class(symbol)
        names = [n for n, _ in declared]
        provided_names = set(names[:len(node.args)]) | {n for n, _ in node.kwargs}
        params = tuple((n, t) for n, t in declared if n in provided_names)
        outputs = tuple((n, t) for n, t in declared if n not in provided_names)
        subject = symbol.name
        # The initialized class is the value the model produces.
        closure_roots = [(t, symbol.module) for _, t in params + outputs] + [(NamedType(symbol.name), symbol.module)]
    else:
        params = tuple((p.name, p.type) for p in node.params)
        outputs = ((RETURN_SLOT, node.return_type),)
        subject = node.name
        closure_roots = [(t, site.module) for _, t in params + outputs]
        if site.kind == CallSiteKind.METHOD:
            receiver = site.owner.name
            subject = f"{receiver}.{node.name}"
            closure_roots.append((NamedType(receiver), site.module))

    visited: set[str] = set()
    schemas: list[TypeSchema] = []
    for t, module in closure_roots:
        schemas += extract_type_definition(t, registry, visited, module)

    return MTIREntry(
        site_id=site.site_id,
        kind=site.kind,
        subject=subject,
        params=params,
        outputs=outputs,
        receiver=receiver,
        model_ref=by.model_ref,
        hyperparams=tuple(sorted(by.hyperparams, key=lambda kv: kv[0])),
        type_explanations=tuple(schemas),
    )


# -------------------- serialization --------------------
HyperValue = Union[StrictBool, StrictInt, StrictFloat, StrictStr]


class _FieldDoc(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str
    type: str


class _SchemaDoc(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str
    fields: list[_FieldDoc]


class _EntryDoc(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: Literal["function", "method", "init"]
    subject: str
    params: list[_FieldDoc]
    outputs: list[_FieldDoc]
    receiver: Optional[str]
    model: str
    hyperparams: dict[str, HyperValue]
    types: list[_SchemaDoc]


class MTIRDocument(BaseModel):
    """Validated shape of a serialized MT-IR map."""

    model_config = ConfigDict(extra="forbid")
    entries: dict[str, _EntryDoc]


def _slots(pairs) -> list[dict]:
    return [{"name": n, "type": str(t)} for n, t in pairs]


def mtir_to_dict(m: MTIRMap) -> dict:
    return {
        "entries": {
            site_id: {
                "kind": e.kind.value,
                "subject": e.subject,
                "params": _slots(e.params),
                "outputs": _slots(e.outputs),
                "receiver": e.receiver,
                "model": e.model_ref,
                "hyperparams": dict(e.hyperparams),
                "types": [{"name": s.name, "fields": _slots(s.fields)} for s in e.type_explanations],
            }
            for site_id, e in m.entries.items()
        }
    }


def serialize_mtir(m: MTIRMap) -> bytes:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    text = json.dumps(mtir_to_dict(m), sort_keys=True, indent=2, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def deserialize_mtir(data: bytes) -> MTIRMap:
    """Parse and validate a serialized MT-IR map.

    Raises:
        FormatError: With the byte offset of the first problem (0 when the
            document parses as JSON but has the wrong shape)
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise FormatError(e.start, "invalid UTF-8") from e
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        offset = len(text[:e.pos].encode("utf-8"))
        raise FormatError(offset, e.msg) from e
    try:
        doc = MTIRDocument.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise FormatError(0, f"{where}: {first['msg']}") from e

    entries: dict[str, MTIREntry] = {}
    for site_id, entry in doc.entries.items():
        try:
            entries[site_id] = MTIREntry(
                site_id=site_id,
                kind=CallSiteKind(entry.kind),
                subject=entry.subject,
                params=tuple((f.name, parse_type_text(f.type)) for f in entry.params),
                outputs=tuple((f.name, parse_type_text(f.type)) for f in entry.outputs),
                receiver=entry.receiver,
                model_ref=entry.model,
                hyperparams=tuple(sorted(entry.hyperparams.items())),
                type_explanations=tuple(
                    TypeSchema(s.name, tuple((f.name, parse_type_text(f.type)) for f in s.fields))
                    for s in entry.types
                ),
            )
        except FrontendError as e:
            raise FormatError(0, f"entries.{site_id}: bad type text ({e})") from e
    return MTIRMap(MappingProxyType(entries))
