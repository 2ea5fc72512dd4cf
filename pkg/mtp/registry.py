"""Codebase-wide semantic registry.

The registry is a superset of a symbol table: besides every definition
(classes, functions, methods, fields, variables) it records each usage of a
name together with the definition it resolves to. Name resolution is lexical
scope first, then module scope, then imported modules in import order.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Union

from .ast_nodes import (
    AssignStmt, Attribute, BinaryOp, Call, ClassDecl, Expr, ExprStmt, FuncDecl, IfStmt,
    LetStmt, ListLiteral, ListType, Literal, Loc, MapLiteral, MapType, MethodCall, ModuleAST,
    Name, NamedType, PrimitiveType, PrintStmt, ReturnStmt, Stmt, TypeExpr, UnaryOp,
    BOOL, FLOAT, INT, STR,
)
from .errors import DuplicateDefinitionError, MisplacedByError, RegistryError, UnresolvedNameError

logger = logging.getLogger(__name__)


class SymbolKind(str, Enum):
    CLASS = "class"
    FUNCTION = "function"
    METHOD = "method"
    FIELD = "field"
    VARIABLE = "variable"


@dataclass(frozen=True, order=True)
class SymbolId:
    """Identity of one definition.

    Fields and methods are qualified by their owner class; parameters and
    local variables by the function (``f`` or ``C.mth``) that declares them.
    """

    module: str
    name: str
    kind: SymbolKind
    owner: Optional[str] = None

    def __str__(self) -> str:
        qualified = f"{self.owner}.{self.name}" if self.owner else self.name
        return f"{self.module}:{qualified}({self.kind.value})"


@dataclass(frozen=True)
class Signature:
    params: tuple[tuple[str, TypeExpr], ...]
    return_type: TypeExpr


@dataclass(frozen=True)
class Definition:
    id: SymbolId
    source_loc: Loc
    declared_type: Optional[TypeExpr] = None
    """Fields, parameters and variables; None for an untypable initializer."""
    signature: Optional[Signature] = None
    """Functions and methods."""


@dataclass(frozen=True)
class Usage:
    module: str
    loc: Loc
    symbol: SymbolId


# -------------------- lookup_type results --------------------
@dataclass(frozen=True)
class PrimitiveRef:
    name: str


@dataclass(frozen=True)
class ClassRef:
    symbol: SymbolId
    fields: tuple[tuple[str, TypeExpr], ...]

    @property
    def name(self) -> str:
        return self.symbol.name


@dataclass(frozen=True)
class ListRef:
    element: "TypeRef"


@dataclass(frozen=True)
class MapRef:
    key: "TypeRef"
    value: "TypeRef"


TypeRef = Union[PrimitiveRef, ClassRef, ListRef, MapRef]


@dataclass(frozen=True)
class SemanticRegistry:
    """Immutable result of build_registry."""

    definitions: Mapping[SymbolId, Definition] = field(default_factory=lambda: MappingProxyType({}))
    usages: tuple[Usage, ...] = ()
    class_fields: Mapping[str, tuple[tuple[str, TypeExpr], ...]] = field(
        default_factory=lambda: MappingProxyType({}))
    """Class name -> fields in declaration order (first module wins on a name clash)."""
    module_scopes: Mapping[str, Mapping[str, SymbolId]] = field(default_factory=lambda: MappingProxyType({}))
    """Per module: top-level classes and functions visible by bare name."""
    imports: Mapping[str, tuple[str, ...]] = field(default_factory=lambda: MappingProxyType({}))

    # -------------------- resolution --------------------
    def resolve(self, name: str, module: str) -> Optional[SymbolId]:
        """Resolve a class or function name as seen from a module."""
        local = self.module_scopes.get(module, {})
        if name in local:
            return local[name]
        for imported in self.imports.get(module, ()):
            symbol = self.module_scopes.get(imported, {}).get(name)
            if symbol is not None:
                return symbol
        return None

    def resolve_class(self, name: str, module: Optional[str] = None,
                      use_loc: Optional[tuple] = None) -> SymbolId:
        if module is None:
            symbol = next((s for s in self.definitions
                           if s.kind == SymbolKind.CLASS and s.name == name), None)
        else:
            symbol = self.resolve(name, module)
        if symbol is None or symbol.kind != SymbolKind.CLASS:
            raise UnresolvedNameError(name, use_loc or (module or "?", 0, 0), "class")
        return symbol

    def fields_of_class(self, symbol: SymbolId) -> tuple[tuple[str, TypeExpr], ...]:
        return tuple(
            (d.id.name, d.declared_type) for d in self.definitions.values()
            if d.id.kind == SymbolKind.FIELD and d.id.module == symbol.module and d.id.owner == symbol.name
        )

    def fields_of(self, class_name: str) -> Optional[tuple[tuple[str, TypeExpr], ...]]:
        """Schema lookup by bare class name (SchemaSource protocol)."""
        return self.class_fields.get(class_name)

    def schemas_for(self, module: str) -> "ModuleSchemas":
        """Class schemas as named from inside a module."""
        return ModuleSchemas(self, module)

    # -------------------- inspection --------------------
    def unresolved_usages(self) -> list[Usage]:
        return [u for u in self.usages if u.symbol not in self.definitions]

    def describe(self) -> dict:
        """Plain-data view used for determinism checks and debugging."""
        return {
            "definitions": [
                {
                    "id": str(d.id),
                    "loc": list(d.source_loc),
                    "type": None if d.declared_type is None else str(d.declared_type),
                    "signature": None if d.signature is None else [
                        [[n, str(t)] for n, t in d.signature.params], str(d.signature.return_type)
                    ],
                }
                for d in self.definitions.values()
            ],
            "usages": [[u.module, list(u.loc), str(u.symbol)] for u in self.usages],
            "class_fields": {
                name: [[n, str(t)] for n, t in fields] for name, fields in self.class_fields.items()
            },
        }


@dataclass(frozen=True)
class ModuleSchemas:
    """SchemaSource resolving class names from one module.

    Field types are looked up from the module that declares the class, so
    two classes sharing a name in different modules never mix.
    """

    registry: SemanticRegistry
    module: str

    def resolve(self, class_name: str) -> Optional[SymbolId]:
        symbol = self.registry.resolve(class_name, self.module)
        return symbol if symbol is not None and symbol.kind == SymbolKind.CLASS else None

    def fields_of(self, class_name: str) -> Optional[tuple[tuple[str, TypeExpr], ...]]:
        symbol = self.resolve(class_name)
        return None if symbol is None else self.registry.fields_of_class(symbol)

    def within(self, class_name: str) -> "ModuleSchemas":
        symbol = self.resolve(class_name)
        return self if symbol is None else ModuleSchemas(self.registry, symbol.module)


# A static type paired with the module its class names resolve in.
_Static = Optional[tuple[TypeExpr, str]]


class _RegistryBuilder:
    """Single-pass construction over all modules."""

    def __init__(self, modules: list[ModuleAST]):
        self.modules = modules
        self.definitions: dict[SymbolId, Definition] = {}
        self.usages: list[Usage] = []
        self.class_fields: dict[str, tuple[tuple[str, TypeExpr], ...]] = {}
        self.module_scopes: dict[str, dict[str, SymbolId]] = {m.name: {} for m in modules}
        self.module_vars: dict[str, dict[str, tuple[SymbolId, _Static]]] = {m.name: {} for m in modules}
        self.imports = {m.name: m.imports for m in modules}

    def build(self) -> SemanticRegistry:
        for module in self.modules:
            self._declare_module(module)
        view = self._snapshot()
        for module in self.modules:
            self._resolve_signatures(module, view)
        for module in self.modules:
            self._walk_block(module.stmts, module.name, self.module_vars[module.name], owner=None)
        for module in self.modules:
            for decl in module.decls:
                if isinstance(decl, FuncDecl):
                    self._walk_function(decl, module.name, owner_class=None)
                else:
                    for method in decl.methods:
                        self._walk_function(method, module.name, owner_class=decl)
        registry = self._snapshot()
        logger.debug("registry: %d definitions, %d usages", len(self.definitions), len(self.usages))
        return registry

    def _snapshot(self) -> SemanticRegistry:
        return SemanticRegistry(
            definitions=MappingProxyType(dict(self.definitions)),
            usages=tuple(self.usages),
            class_fields=MappingProxyType(dict(self.class_fields)),
            module_scopes=MappingProxyType({k: MappingProxyType(dict(v)) for k, v in self.module_scopes.items()}),
            imports=MappingProxyType(dict(self.imports)),
        )

    # -------------------- declarations --------------------
    def _define(self, definition: Definition, scope: str):
        if definition.id in self.definitions:
            raise DuplicateDefinitionError(definition.id.name, scope, (definition.id.module, *definition.source_loc))
        self.definitions[definition.id] = definition

    def _declare_module(self, module: ModuleAST):
        scope = self.module_scopes[module.name]
        for decl in module.decls:
            if decl.name in scope:
                raise DuplicateDefinitionError(decl.name, f"module {module.name}", (module.name, *decl.loc))
            if isinstance(decl, ClassDecl):
                symbol = SymbolId(module.name, decl.name, SymbolKind.CLASS)
                self._define(Definition(symbol, decl.loc), f"module {module.name}")
                fields = tuple((f.name, f.type) for f in decl.fields)
                for f in decl.fields:
                    self._define(
                        Definition(SymbolId(module.name, f.name, SymbolKind.FIELD, decl.name), f.loc, f.type),
                        f"class {decl.name}",
                    )
                for method in decl.methods:
                    self._define(
                        Definition(SymbolId(module.name, method.name, SymbolKind.METHOD, decl.name),
                                   method.loc, signature=_signature(method)),
                        f"class {decl.name}",
                    )
                self.class_fields.setdefault(decl.name, fields)
            else:
                symbol = SymbolId(module.name, decl.name, SymbolKind.FUNCTION)
                self._define(Definition(symbol, decl.loc, signature=_signature(decl)), f"module {module.name}")
            scope[decl.name] = symbol

    def _resolve_signatures(self, module: ModuleAST, view: SemanticRegistry):
        for decl in module.decls:
            if isinstance(decl, ClassDecl):
                for f in decl.fields:
                    self._use_type(f.type, module.name, f.loc, view)
                for method in decl.methods:
                    for p in method.params:
                        self._use_type(p.type, module.name, p.loc, view)
                    self._use_type(method.return_type, module.name, method.loc, view)
            else:
                for p in decl.params:
                    self._use_type(p.type, module.name, p.loc, view)
                self._use_type(decl.return_type, module.name, decl.loc, view)

    def _use_type(self, t: TypeExpr, module: str, loc: Loc, view: SemanticRegistry):
        if isinstance(t, NamedType):
            symbol = view.resolve(t.name, module)
            if symbol is None or symbol.kind != SymbolKind.CLASS:
                raise UnresolvedNameError(t.name, (module, *loc), "type")
            self.usages.append(Usage(module, loc, symbol))
        elif isinstance(t, ListType):
            self._use_type(t.element, module, loc, view)
        elif isinstance(t, MapType):
            self._use_type(t.key, module, loc, view)
            self._use_type(t.value, module, loc, view)

    # -------------------- bodies --------------------
    def _walk_function(self, func: FuncDecl, module: str, owner_class: Optional[ClassDecl]):
        owner = f"{owner_class.name}.{func.name}" if owner_class else func.name
        scope: dict[str, tuple[SymbolId, _Static]] = {}
        if owner_class is not None:
            self._define_variable("self", NamedType(owner_class.name), module, owner, func.loc, scope, module)
        for p in func.params:
            self._define_variable(p.name, p.type, module, owner, p.loc, scope, module)
        if func.body is not None:
            self._walk_block(func.body, module, scope, owner)

    def _define_variable(self, name: str, static_type: Optional[TypeExpr], module: str, owner: Optional[str],
                         loc: Loc, scope: dict, type_module: str):
        symbol = SymbolId(module, name, SymbolKind.VARIABLE, owner)
        if name in scope:
            raise DuplicateDefinitionError(name, owner or f"module {module}", (module, *loc))
        self._define(Definition(symbol, loc, static_type), owner or f"module {module}")
        scope[name] = (symbol, None if static_type is None else (static_type, type_module))

    def _walk_block(self, body: Iterable[Stmt], module: str, scope: dict, owner: Optional[str]):
        for stmt in body:
            if isinstance(stmt, LetStmt):
                static = self._infer(stmt.value, module, scope)
                t, type_module = static if static else (None, module)
                self._define_variable(stmt.name, t, module, owner, stmt.loc, scope, type_module)
            elif isinstance(stmt, AssignStmt):
                self._lookup_variable(stmt.name, module, scope, stmt.loc)
                self._infer(stmt.value, module, scope)
            elif isinstance(stmt, (ExprStmt,)):
                self._infer(stmt.expr, module, scope)
            elif isinstance(stmt, (PrintStmt, ReturnStmt)):
                if stmt.value is not None:
                    self._infer(stmt.value, module, scope)
            elif isinstance(stmt, IfStmt):
                self._infer(stmt.condition, module, scope)
                self._walk_block(stmt.then_body, module, scope, owner)
                self._walk_block(stmt.else_body, module, scope, owner)

    def _lookup_variable(self, name: str, module: str, scope: dict, loc: Loc) -> _Static:
        entry = scope.get(name) or self.module_vars[module].get(name)
        if entry is None:
            raise UnresolvedNameError(name, (module, *loc), "variable")
        symbol, static = entry
        self.usages.append(Usage(module, loc, symbol))
        return static

    def _resolve_global(self, name: str, module: str, loc: Loc) -> SymbolId:
        symbol = self._snapshot_resolve(name, module)
        if symbol is None:
            raise UnresolvedNameError(name, (module, *loc), "function or class")
        self.usages.append(Usage(module, loc, symbol))
        return symbol

    def _snapshot_resolve(self, name: str, module: str) -> Optional[SymbolId]:
        if name in self.module_scopes[module]:
            return self.module_scopes[module][name]
        for imported in self.imports.get(module, ()):
            symbol = self.module_scopes.get(imported, {}).get(name)
            if symbol is not None:
                return symbol
        return None

    # -------------------- expressions --------------------
    def _infer(self, expr: Expr, module: str, scope: dict) -> _Static:
        """Record usages inside an expression and return its static type."""
        if isinstance(expr, Literal):
            return PrimitiveType(expr.kind), module
        if isinstance(expr, Name):
            return self._lookup_variable(expr.ident, module, scope, expr.loc)
        if isinstance(expr, Call):
            return self._infer_call(expr, module, scope)
        if isinstance(expr, MethodCall):
            receiver = self._infer(expr.receiver, module, scope)
            for arg in expr.args:
                self._infer(arg, module, scope)
            for _, arg in expr.kwargs:
                self._infer(arg, module, scope)
            definition = self._member_definition(receiver, expr.method, module, expr.loc, SymbolKind.METHOD)
            if definition is None:
                return None
            return definition.signature.return_type, definition.id.module
        if isinstance(expr, Attribute):
            receiver = self._infer(expr.receiver, module, scope)
            definition = self._member_definition(receiver, expr.name, module, expr.loc, SymbolKind.FIELD)
            if definition is None:
                return None
            return definition.declared_type, definition.id.module
        if isinstance(expr, ListLiteral):
            element_types = [self._infer(e, module, scope) for e in expr.elements]
            if not element_types or element_types[0] is None:
                return None
            return ListType(element_types[0][0]), element_types[0][1]
        if isinstance(expr, MapLiteral):
            pair_types = [(self._infer(k, module, scope), self._infer(v, module, scope)) for k, v in expr.pairs]
            if not pair_types or None in pair_types[0]:
                return None
            (key, key_module), (value, value_module) = pair_types[0]
            if isinstance(key, NamedType) or isinstance(value, NamedType):
                if key_module != value_module:
                    return None
            return MapType(key, value), value_module
        if isinstance(expr, UnaryOp):
            return self._infer(expr.operand, module, scope)
        if isinstance(expr, BinaryOp):
            left = self._infer(expr.left, module, scope)
            right = self._infer(expr.right, module, scope)
            return _binary_type(expr.op, left, right, module)
        raise RegistryError(f"unsupported expression {type(expr).__name__}")

    def _infer_call(self, call: Call, module: str, scope: dict) -> _Static:
        symbol = self._resolve_global(call.callee, module, call.loc)
        for arg in call.args:
            self._infer(arg, module, scope)
        for _, arg in call.kwargs:
            self._infer(arg, module, scope)

        if symbol.kind == SymbolKind.FUNCTION:
            if call.by is not None:
                raise MisplacedByError(call.callee, (module, *call.by.loc))
            signature = self.definitions[symbol].signature
            names = [n for n, _ in signature.params]
            _check_call_shape(call, names, module, require_all=True, what=f"function {call.callee}")
            return signature.return_type, symbol.module

        fields = [d.id.name for d in self.definitions.values()
                  if d.id.kind == SymbolKind.FIELD and d.id.module == symbol.module and d.id.owner == symbol.name]
        _check_call_shape(call, fields, module, require_all=call.by is None, what=f"class {call.callee}")
        for name, _ in call.kwargs:
            self.usages.append(Usage(module, call.loc, SymbolId(symbol.module, name, SymbolKind.FIELD, symbol.name)))
        return NamedType(symbol.name), symbol.module

    def _member_definition(self, receiver: _Static, name: str, module: str, loc: Loc,
                           kind: SymbolKind) -> Optional[Definition]:
        if receiver is None:
            return None
        receiver_type, type_module = receiver
        if not isinstance(receiver_type, NamedType):
            raise UnresolvedNameError(name, (module, *loc), f"{kind.value} of {receiver_type}")
        class_symbol = self._snapshot_resolve(receiver_type.name, type_module)
        member = SymbolId(class_symbol.module, name, kind, class_symbol.name) if class_symbol else None
        if member is None or member not in self.definitions:
            raise UnresolvedNameError(name, (module, *loc), f"{kind.value} of {receiver_type.name}")
        self.usages.append(Usage(module, loc, member))
        return self.definitions[member]


def _signature(func: FuncDecl) -> Signature:
    return Signature(tuple((p.name, p.type) for p in func.params), func.return_type)


def _check_call_shape(call: Call, names: list[str], module: str, require_all: bool, what: str):
    """Validate positional/named arguments against declared slots.

    With ``require_all`` every slot must be filled exactly once; otherwise
    (object init by a model) the provided slots must leave at least one open.
    """
    where = f"{module}:{call.loc[0]}:{call.loc[1]}"
    if len(call.args) > len(names):
        raise RegistryError(f"{where}: too many arguments for {what}")
    provided = list(names[:len(call.args)])
    for name, _ in call.kwargs:
        if name not in names:
            raise UnresolvedNameError(name, (module, *call.loc), f"argument of {what}")
        if name in provided:
            raise RegistryError(f"{where}: argument '{name}' of {what} given twice")
        provided.append(name)
    if require_all and len(provided) != len(names):
        missing = [n for n in names if n not in provided]
        raise RegistryError(f"{where}: missing argument(s) {', '.join(missing)} for {what}")
    if not require_all and len(provided) >= len(names):
        raise RegistryError(f"{where}: 'by' initialization of {what} must leave at least one field open")


def _binary_type(op: str, left: _Static, right: _Static, module: str) -> _Static:
    if op in ("==", "!=", "<", ">", "<=", ">="):
        return BOOL, module
    if left is None or right is None:
        return None
    lt, rt = left[0], right[0]
    if op == "+" and lt == STR and rt == STR:
        return STR, module
    if lt in (INT, FLOAT) and rt in (INT, FLOAT):
        if op == "/" or FLOAT in (lt, rt):
            return FLOAT, module
        return INT, module
    return None


def build_registry(modules: list[ModuleAST]) -> SemanticRegistry:
    """Register every definition and link every usage to it.

    Args:
        modules: Parsed modules, as returned by parse_program

    Returns:
        Immutable SemanticRegistry

    Raises:
        UnresolvedNameError: A usage does not resolve
        DuplicateDefinitionError: Two definitions collide in one scope
        MisplacedByError: A by clause on a call that is not an object initialization
    """
    return _RegistryBuilder(modules).build()


def lookup_type(registry: SemanticRegistry, t: TypeExpr, module: Optional[str] = None) -> TypeRef:
    """Resolve a type expression against the registry.

    Named types are resolved as seen from ``module``; without a module the
    bare class name is looked up across the whole program.
    """
    if isinstance(t, PrimitiveType):
        return PrimitiveRef(t.name)
    if isinstance(t, NamedType):
        symbol = registry.resolve_class(t.name, module)
        return ClassRef(symbol, registry.fields_of_class(symbol))
    if isinstance(t, ListType):
        return ListRef(lookup_type(registry, t.element, module))
    if isinstance(t, MapType):
        return MapRef(lookup_type(registry, t.key, module), lookup_type(registry, t.value, module))
    raise TypeError(f"not a type expression: {t!r}")
