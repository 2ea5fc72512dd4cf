"""Recursive-descent parser and multi-module program loader."""

import logging
from pathlib import Path
from typing import Callable, Optional, Union

from .ast_nodes import (
    Attribute, BinaryOp, ByClause, Call, ClassDecl, ExprStmt, Expr, FuncDecl, IfStmt,
    LetStmt, AssignStmt, ListLiteral, ListType, Literal, MapLiteral, MapType, MethodCall,
    ModuleAST, Name, NamedType, Param, PrimitiveType, PrintStmt, ReturnStmt, Stmt, Token,
    TokenKind, TypeExpr, UnaryOp, PRIMITIVE_TYPES,
)
from .errors import ModuleImportError, ParseError
from .lexer import tokenize

logger = logging.getLogger(__name__)

SOURCE_SUFFIX = ".mtp"

Resolver = Callable[[str], Optional[str]]
"""Maps a module name to its source text, or None when it does not exist."""

COMPARISON_OPS = ("==", "!=", "<", ">", "<=", ">=")


class _Parser:
    """Parser state over one module's token stream."""

    def __init__(self, tokens: list[Token], module_name: str):
        self.tokens = tokens
        self.pos = 0
        self.module_name = module_name

    # -------------------- token helpers --------------------
    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        if token.kind != TokenKind.EOF:
            self.pos += 1
        return token

    def at(self, lexeme: str, kind: Optional[TokenKind] = None) -> bool:
        token = self.current
        if kind is not None and token.kind != kind:
            return False
        return token.kind in (TokenKind.KEYWORD, TokenKind.PUNCTUATION, TokenKind.IDENTIFIER) \
            and token.lexeme == lexeme

    def accept(self, lexeme: str) -> Optional[Token]:
        if self.at(lexeme):
            return self.advance()
        return None

    def expect(self, lexeme: str) -> Token:
        if not self.at(lexeme):
            self.fail(f"'{lexeme}'")
        return self.advance()

    def expect_identifier(self, what: str = "identifier") -> Token:
        if self.current.kind != TokenKind.IDENTIFIER:
            self.fail(what)
        return self.advance()

    def fail(self, expected: str, token: Optional[Token] = None):
        token = token or self.current
        raise ParseError(token.line, token.column, expected, token.describe())

    # -------------------- module --------------------
    def parse_module(self) -> ModuleAST:
        imports: list[str] = []
        import_locs = []
        decls = []
        stmts = []
        names: set[str] = set()

        while self.current.kind != TokenKind.EOF:
            if self.at("import", TokenKind.KEYWORD):
                keyword = self.advance()
                name_token = self.expect_identifier("module name")
                if name_token.lexeme in imports:
                    self.fail("a module not already imported", name_token)
                imports.append(name_token.lexeme)
                import_locs.append(keyword.loc)
            elif self.at("class", TokenKind.KEYWORD) or self.at("def", TokenKind.KEYWORD):
                start = self.current
                decl = self.parse_class() if start.lexeme == "class" else self.parse_function()
                if decl.name in names:
                    self.fail("a new declaration name", self.tokens[self._name_index(start)])
                names.add(decl.name)
                decls.append(decl)
            else:
                stmts.append(self.parse_statement())

        return ModuleAST(
            name=self.module_name,
            imports=tuple(imports),
            decls=tuple(decls),
            stmts=tuple(stmts),
            import_locs=tuple(import_locs),
        )

    def _name_index(self, keyword: Token) -> int:
        return self.tokens.index(keyword) + 1

    def parse_class(self) -> ClassDecl:
        keyword = self.expect("class")
        name = self.expect_identifier("class name").lexeme
        self.expect("{")
        fields: list[Param] = []
        methods: list[FuncDecl] = []
        members: set[str] = set()
        while not self.at("}"):
            if self.at("def", TokenKind.KEYWORD):
                start = self.current
                method = self.parse_function()
                if method.name in members:
                    self.fail("a new member name", self.tokens[self._name_index(start)])
                members.add(method.name)
                methods.append(method)
            else:
                name_token = self.expect_identifier("field name or 'def'")
                if name_token.lexeme in members:
                    self.fail("a new member name", name_token)
                self.expect(":")
                members.add(name_token.lexeme)
                fields.append(Param(name_token.lexeme, self.parse_type(), loc=name_token.loc))
        self.expect("}")
        return ClassDecl(name, tuple(fields), tuple(methods), loc=keyword.loc)

    def parse_function(self) -> FuncDecl:
        keyword = self.expect("def")
        name = self.expect_identifier("function name").lexeme
        self.expect("(")
        params: list[Param] = []
        if not self.at(")"):
            while True:
                name_token = self.expect_identifier("parameter name")
                if any(p.name == name_token.lexeme for p in params):
                    self.fail("a unique parameter name", name_token)
                self.expect(":")
                params.append(Param(name_token.lexeme, self.parse_type(), loc=name_token.loc))
                if not self.accept(","):
                    break
        self.expect(")")
        self.expect("->")
        return_type = self.parse_type()

        if self.at("by", TokenKind.KEYWORD):
            return FuncDecl(name, tuple(params), return_type, by=self.parse_by_clause(), loc=keyword.loc)
        if self.at("{"):
            return FuncDecl(name, tuple(params), return_type, body=self.parse_block(), loc=keyword.loc)
        self.fail("'by' or '{'")

    def parse_by_clause(self) -> ByClause:
        keyword = self.expect("by")
        model_ref = self.expect_identifier("model reference").lexeme
        hyperparams: list[tuple[str, object]] = []
        if self.accept("("):
            if not self.at(")"):
                while True:
                    name_token = self.expect_identifier("hyperparameter name")
                    if any(name == name_token.lexeme for name, _ in hyperparams):
                        self.fail("a unique hyperparameter name", name_token)
                    self.expect("=")
                    hyperparams.append((name_token.lexeme, self.parse_hyper_literal()))
                    if not self.accept(","):
                        break
            self.expect(")")
        return ByClause(model_ref, tuple(hyperparams), loc=keyword.loc)

    def parse_hyper_literal(self) -> Union[int, float, str, bool]:
        negative = self.accept("-") is not None
        token = self.current
        if token.kind != TokenKind.LITERAL:
            self.fail("literal")
        if negative and isinstance(token.value, (bool, str)):
            self.fail("number")
        self.advance()
        return -token.value if negative else token.value

    def parse_type(self) -> TypeExpr:
        token = self.current
        if token.kind == TokenKind.KEYWORD and token.lexeme in PRIMITIVE_TYPES:
            self.advance()
            return PrimitiveType(token.lexeme)
        if token.kind != TokenKind.IDENTIFIER:
            self.fail("type")
        self.advance()
        if token.lexeme == "list" and self.at("["):
            self.advance()
            element = self.parse_type()
            self.expect("]")
            return ListType(element)
        if token.lexeme == "map" and self.at("["):
            self.advance()
            key = self.parse_type()
            self.expect(",")
            value = self.parse_type()
            self.expect("]")
            return MapType(key, value)
        return NamedType(token.lexeme)

    # -------------------- statements --------------------
    def parse_block(self) -> tuple[Stmt, ...]:
        self.expect("{")
        body = []
        while not self.at("}"):
            if self.current.kind == TokenKind.EOF:
                self.fail("'}'")
            body.append(self.parse_statement())
        self.expect("}")
        return tuple(body)

    def parse_statement(self) -> Stmt:
        token = self.current
        if self.at("let", TokenKind.KEYWORD):
            self.advance()
            name = self.expect_identifier("variable name").lexeme
            self.expect("=")
            stmt = LetStmt(name, self.parse_expression(), loc=token.loc)
        elif self.at("print", TokenKind.KEYWORD):
            self.advance()
            self.expect("(")
            value = self.parse_expression()
            self.expect(")")
            stmt = PrintStmt(value, loc=token.loc)
        elif self.at("return", TokenKind.KEYWORD):
            self.advance()
            value = None if (self.at("}") or self.at(";")) else self.parse_expression()
            stmt = ReturnStmt(value, loc=token.loc)
        elif self.at("if", TokenKind.KEYWORD):
            return self.parse_if()
        elif token.kind == TokenKind.IDENTIFIER and self.peek().lexeme == "=" \
                and self.peek().kind == TokenKind.PUNCTUATION:
            self.advance()
            self.advance()
            stmt = AssignStmt(token.lexeme, self.parse_expression(), loc=token.loc)
        elif token.kind == TokenKind.KEYWORD and token.lexeme in ("class", "def", "import"):
            self.fail("statement")
        else:
            stmt = ExprStmt(self.parse_expression(), loc=token.loc)
        self.accept(";")
        return stmt

    def parse_if(self) -> IfStmt:
        keyword = self.expect("if")
        condition = self.parse_expression()
        then_body = self.parse_block()
        else_body: tuple[Stmt, ...] = ()
        if self.accept("else"):
            else_body = (self.parse_if(),) if self.at("if", TokenKind.KEYWORD) else self.parse_block()
        return IfStmt(condition, then_body, else_body, loc=keyword.loc)

    # -------------------- expressions --------------------
    def parse_expression(self) -> Expr:
        left = self.parse_additive()
        token = self.current
        if token.kind == TokenKind.PUNCTUATION and token.lexeme in COMPARISON_OPS:
            self.advance()
            return BinaryOp(token.lexeme, left, self.parse_additive(), loc=token.loc)
        return left

    def parse_additive(self) -> Expr:
        expr = self.parse_multiplicative()
        while self.current.kind == TokenKind.PUNCTUATION and self.current.lexeme in ("+", "-"):
            op = self.advance()
            expr = BinaryOp(op.lexeme, expr, self.parse_multiplicative(), loc=op.loc)
        return expr

    def parse_multiplicative(self) -> Expr:
        expr = self.parse_unary()
        while self.current.kind == TokenKind.PUNCTUATION and self.current.lexeme in ("*", "/"):
            op = self.advance()
            expr = BinaryOp(op.lexeme, expr, self.parse_unary(), loc=op.loc)
        return expr

    def parse_unary(self) -> Expr:
        if self.at("-", TokenKind.PUNCTUATION):
            op = self.advance()
            return UnaryOp("-", self.parse_unary(), loc=op.loc)
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        expr = self.parse_primary()
        while self.at(".", TokenKind.PUNCTUATION):
            self.advance()
            name_token = self.expect_identifier("attribute or method name")
            if self.at("("):
                args, kwargs = self.parse_arguments()
                expr = MethodCall(expr, name_token.lexeme, args, kwargs, loc=name_token.loc)
            else:
                expr = Attribute(expr, name_token.lexeme, loc=name_token.loc)
        return expr

    def parse_primary(self) -> Expr:
        token = self.current
        if token.kind == TokenKind.LITERAL:
            self.advance()
            return Literal(_literal_kind(token.value), token.value, loc=token.loc)
        if token.kind == TokenKind.IDENTIFIER:
            self.advance()
            if self.at("("):
                args, kwargs = self.parse_arguments()
                by = self.parse_by_clause() if self.at("by", TokenKind.KEYWORD) else None
                return Call(token.lexeme, args, kwargs, by, loc=token.loc)
            return Name(token.lexeme, loc=token.loc)
        if self.accept("("):
            expr = self.parse_expression()
            self.expect(")")
            return expr
        if self.accept("["):
            elements = []
            while not self.at("]"):
                elements.append(self.parse_expression())
                if not self.accept(","):
                    break
            self.expect("]")
            return ListLiteral(tuple(elements), loc=token.loc)
        if self.accept("{"):
            pairs = []
            while not self.at("}"):
                key = self.parse_expression()
                self.expect(":")
                pairs.append((key, self.parse_expression()))
                if not self.accept(","):
                    break
            self.expect("}")
            return MapLiteral(tuple(pairs), loc=token.loc)
        self.fail("expression")

    def parse_arguments(self) -> tuple[tuple[Expr, ...], tuple[tuple[str, Expr], ...]]:
        self.expect("(")
        args: list[Expr] = []
        kwargs: list[tuple[str, Expr]] = []
        while not self.at(")"):
            token = self.current
            if token.kind == TokenKind.IDENTIFIER and self.peek().lexeme == "=" \
                    and self.peek().kind == TokenKind.PUNCTUATION:
                self.advance()
                self.advance()
                if any(name == token.lexeme for name, _ in kwargs):
                    self.fail("a unique argument name", token)
                kwargs.append((token.lexeme, self.parse_expression()))
            else:
                if kwargs:
                    self.fail("named argument", token)
                args.append(self.parse_expression())
            if not self.accept(","):
                break
        self.expect(")")
        return tuple(args), tuple(kwargs)


def _literal_kind(value) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "float"
    return "str"


def parse_module(tokens: list[Token], name: str) -> ModuleAST:
    """Parse one module's token stream.

    Args:
        tokens: Output of tokenize
        name: Module name (the file stem)

    Returns:
        ModuleAST covering every top-level construct

    Raises:
        ParseError: On the first syntax error
    """
    return _Parser(tokens, name).parse_module()


def parse_source(source: str, name: str) -> ModuleAST:
    """Tokenize and parse in one step."""
    return parse_module(tokenize(source), name)


def parse_type_text(text: str) -> TypeExpr:
    """Parse a standalone type such as ``list[Level]`` or ``map[str, int]``."""
    parser = _Parser(tokenize(text), "<type>")
    t = parser.parse_type()
    if parser.current.kind != TokenKind.EOF:
        parser.fail("end of type")
    return t


def directory_resolver(root: Union[str, Path]) -> Resolver:
    """Resolve module names to `<root>/<name>.mtp` files."""
    root = Path(root)

    def resolve(module: str) -> Optional[str]:
        path = root / f"{module}{SOURCE_SUFFIX}"
        if not path.is_file():
            return None
        return path.read_text(encoding="utf-8")

    return resolve


def parse_program(entry_path: Union[str, Path], resolver: Optional[Resolver] = None) -> list[ModuleAST]:
    """Parse an entry file and everything it transitively imports.

    Args:
        entry_path: Path of the entry `.mtp` file
        resolver: Module-name -> source lookup (defaults to the entry's directory)

    Returns:
        Modules in depth-first order of first import occurrence, entry first

    Raises:
        ModuleImportError: On a missing module or an import cycle
        LexError, ParseError: On malformed source
    """
    entry_path = Path(entry_path)
    if resolver is None:
        resolver = directory_resolver(entry_path.parent)
    if not entry_path.is_file():
        raise ModuleImportError(entry_path.stem, None, "entry file not found")

    entry_source = entry_path.read_text(encoding="utf-8")
    return load_modules(entry_path.stem, entry_source, resolver)


def load_modules(entry_name: str, entry_source: str, resolver: Resolver) -> list[ModuleAST]:
    """Parse an entry module from text, then walk its imports through the resolver."""
    ordered: list[ModuleAST] = []
    done: set[str] = set()
    in_progress: list[str] = []

    def visit(name: str, source: str):
        in_progress.append(name)
        module = parse_source(source, name)
        ordered.append(module)
        for imported in module.imports:
            if imported in in_progress:
                cycle = " -> ".join(in_progress[in_progress.index(imported):] + [imported])
                raise ModuleImportError(imported, name, f"closes an import cycle ({cycle})")
            if imported in done:
                continue
            imported_source = resolver(imported)
            if imported_source is None:
                raise ModuleImportError(imported, name)
            visit(imported, imported_source)
        in_progress.pop()
        done.add(name)

    visit(entry_name, entry_source)
    logger.debug("parsed %d module(s): %s", len(ordered), [m.name for m in ordered])
    return ordered
