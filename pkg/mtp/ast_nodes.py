"""Syntax tree for `.mtp` programs.

Nodes are frozen dataclasses. Source locations are carried in a ``loc`` field
that is excluded from equality, so two trees parsed from differently
formatted sources compare equal when their structure matches.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

Loc = tuple[int, int]
"""(line, column), both 1-based."""

PRIMITIVE_TYPES = ("int", "float", "str", "bool")


def _loc() -> Loc:
    return field(default=(0, 0), compare=False, repr=False)


# -------------------- Tokens --------------------
class TokenKind(str, Enum):
    KEYWORD = "keyword"
    IDENTIFIER = "identifier"
    LITERAL = "literal"
    PUNCTUATION = "punctuation"
    EOF = "eof"


@dataclass(frozen=True)
class Token:
    """One lexeme with its 1-based position."""

    kind: TokenKind
    lexeme: str
    line: int
    column: int
    value: Union[int, float, str, bool, None] = None
    """Decoded value for literal tokens."""

    @property
    def loc(self) -> Loc:
        return (self.line, self.column)

    def describe(self) -> str:
        if self.kind == TokenKind.EOF:
            return "end of input"
        return f"'{self.lexeme}'"


# -------------------- Types --------------------
@dataclass(frozen=True)
class PrimitiveType:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class NamedType:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ListType:
    element: "TypeExpr"

    def __str__(self) -> str:
        return f"list[{self.element}]"


@dataclass(frozen=True)
class MapType:
    key: "TypeExpr"
    value: "TypeExpr"

    def __str__(self) -> str:
        return f"map[{self.key}, {self.value}]"


TypeExpr = Union[PrimitiveType, NamedType, ListType, MapType]

INT = PrimitiveType("int")
FLOAT = PrimitiveType("float")
STR = PrimitiveType("str")
BOOL = PrimitiveType("bool")


def named_types_in(t: TypeExpr) -> list[str]:
    """Class names mentioned by a type, left to right."""
    if isinstance(t, NamedType):
        return [t.name]
    if isinstance(t, ListType):
        return named_types_in(t.element)
    if isinstance(t, MapType):
        return named_types_in(t.key) + named_types_in(t.value)
    return []


# -------------------- By clause --------------------
@dataclass(frozen=True)
class ByClause:
    """``by <model_ref>(name=literal, ...)``."""

    model_ref: str
    hyperparams: tuple[tuple[str, Union[int, float, str, bool]], ...] = ()
    loc: Loc = _loc()


# -------------------- Expressions --------------------
@dataclass(frozen=True)
class Literal:
    kind: str
    """One of int, float, str, bool."""
    value: Union[int, float, str, bool]
    loc: Loc = _loc()


@dataclass(frozen=True)
class Name:
    ident: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class Call:
    """``callee(args, kw=args) [by m(...)]``.

    The callee is either a function or a class; a call of a class is an
    object initialization, and only those may carry a by clause.
    """

    callee: str
    args: tuple["Expr", ...] = ()
    kwargs: tuple[tuple[str, "Expr"], ...] = ()
    by: Optional[ByClause] = None
    loc: Loc = _loc()


@dataclass(frozen=True)
class MethodCall:
    receiver: "Expr"
    method: str
    args: tuple["Expr", ...] = ()
    kwargs: tuple[tuple[str, "Expr"], ...] = ()
    loc: Loc = _loc()


@dataclass(frozen=True)
class Attribute:
    receiver: "Expr"
    name: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class ListLiteral:
    elements: tuple["Expr", ...] = ()
    loc: Loc = _loc()


@dataclass(frozen=True)
class MapLiteral:
    pairs: tuple[tuple["Expr", "Expr"], ...] = ()
    loc: Loc = _loc()


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: "Expr"
    right: "Expr"
    loc: Loc = _loc()


@dataclass(frozen=True)
class UnaryOp:
    op: str
    operand: "Expr"
    loc: Loc = _loc()


Expr = Union[Literal, Name, Call, MethodCall, Attribute, ListLiteral, MapLiteral, BinaryOp, UnaryOp]


# -------------------- Statements --------------------
@dataclass(frozen=True)
class LetStmt:
    name: str
    value: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class AssignStmt:
    name: str
    value: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class ReturnStmt:
    value: Optional[Expr] = None
    loc: Loc = _loc()


@dataclass(frozen=True)
class PrintStmt:
    value: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class IfStmt:
    condition: Expr
    then_body: tuple["Stmt", ...] = ()
    else_body: tuple["Stmt", ...] = ()
    loc: Loc = _loc()


Stmt = Union[LetStmt, AssignStmt, ExprStmt, ReturnStmt, PrintStmt, IfStmt]


# -------------------- Declarations --------------------
@dataclass(frozen=True)
class Param:
    name: str
    type: TypeExpr
    loc: Loc = _loc()


@dataclass(frozen=True)
class FuncDecl:
    """A function or method; exactly one of ``body`` and ``by`` is set."""

    name: str
    params: tuple[Param, ...]
    return_type: TypeExpr
    body: Optional[tuple[Stmt, ...]] = None
    by: Optional[ByClause] = None
    loc: Loc = _loc()

    @property
    def signature_text(self) -> str:
        params = ", ".join(f"{p.name}: {p.type}" for p in self.params)
        return f"{self.name}({params}) -> {self.return_type}"


@dataclass(frozen=True)
class ClassDecl:
    name: str
    fields: tuple[Param, ...] = ()
    methods: tuple[FuncDecl, ...] = ()
    loc: Loc = _loc()

    def method(self, name: str) -> Optional[FuncDecl]:
        return next((m for m in self.methods if m.name == name), None)


Decl = Union[ClassDecl, FuncDecl]


@dataclass(frozen=True)
class ModuleAST:
    """One parsed source file."""

    name: str
    imports: tuple[str, ...] = ()
    decls: tuple[Decl, ...] = ()
    stmts: tuple[Stmt, ...] = ()
    """Top-level statements, in source order."""
    import_locs: tuple[Loc, ...] = field(default=(), compare=False, repr=False)

    def decl(self, name: str) -> Optional[Decl]:
        return next((d for d in self.decls if d.name == name), None)
