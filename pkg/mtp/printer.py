"""Pretty-printer producing canonical `.mtp` source from a syntax tree."""

from .ast_nodes import (
    AssignStmt, Attribute, BinaryOp, ByClause, Call, ClassDecl, Expr, ExprStmt, FuncDecl,
    IfStmt, LetStmt, ListLiteral, Literal, MapLiteral, MethodCall, ModuleAST, Name, PrintStmt,
    ReturnStmt, Stmt, UnaryOp,
)
from .lexer import quote_string

INDENT = "    "

# Binding strength; parenthesize a child that binds looser than its parent.
PRECEDENCE = {"==": 1, "!=": 1, "<": 1, ">": 1, "<=": 1, ">=": 1, "+": 2, "-": 2, "*": 3, "/": 3}


def format_literal(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return quote_string(value)
    return repr(value)


def format_by_clause(by: ByClause) -> str:
    if not by.hyperparams:
        return f"by {by.model_ref}"
    hypers = ", ".join(f"{name}={format_literal(value)}" for name, value in by.hyperparams)
    return f"by {by.model_ref}({hypers})"


def format_expr(expr: Expr, parent_precedence: int = 0) -> str:
    if isinstance(expr, Literal):
        return format_literal(expr.value)
    if isinstance(expr, Name):
        return expr.ident
    if isinstance(expr, Call):
        text = f"{expr.callee}({_format_args(expr.args, expr.kwargs)})"
        return f"{text} {format_by_clause(expr.by)}" if expr.by else text
    if isinstance(expr, MethodCall):
        return f"{format_expr(expr.receiver, 9)}.{expr.method}({_format_args(expr.args, expr.kwargs)})"
    if isinstance(expr, Attribute):
        return f"{format_expr(expr.receiver, 9)}.{expr.name}"
    if isinstance(expr, ListLiteral):
        return "[" + ", ".join(format_expr(e) for e in expr.elements) + "]"
    if isinstance(expr, MapLiteral):
        return "{" + ", ".join(f"{format_expr(k)}: {format_expr(v)}" for k, v in expr.pairs) + "}"
    if isinstance(expr, UnaryOp):
        text = f"-{format_expr(expr.operand, 9)}"
        return f"({text})" if parent_precedence > 4 else text
    if isinstance(expr, BinaryOp):
        precedence = PRECEDENCE[expr.op]
        # Arithmetic is left-associative; comparisons do not chain.
        left_precedence = precedence + 1 if precedence == 1 else precedence
        text = f"{format_expr(expr.left, left_precedence)} {expr.op} {format_expr(expr.right, precedence + 1)}"
        return f"({text})" if precedence < parent_precedence else text
    raise TypeError(f"cannot format {type(expr).__name__}")


def _format_args(args, kwargs) -> str:
    parts = [format_expr(a) for a in args]
    parts += [f"{name}={format_expr(value)}" for name, value in kwargs]
    return ", ".join(parts)


def format_stmt(stmt: Stmt, depth: int = 0) -> list[str]:
    pad = INDENT * depth
    if isinstance(stmt, LetStmt):
        return [f"{pad}let {stmt.name} = {format_expr(stmt.value)}"]
    if isinstance(stmt, AssignStmt):
        return [f"{pad}{stmt.name} = {format_expr(stmt.value)}"]
    if isinstance(stmt, PrintStmt):
        return [f"{pad}print({format_expr(stmt.value)})"]
    if isinstance(stmt, ReturnStmt):
        return [f"{pad}return" if stmt.value is None else f"{pad}return {format_expr(stmt.value)}"]
    if isinstance(stmt, ExprStmt):
        return [f"{pad}{format_expr(stmt.expr)}"]
    if isinstance(stmt, IfStmt):
        lines = [f"{pad}if {format_expr(stmt.condition)} {{"]
        for inner in stmt.then_body:
            lines += format_stmt(inner, depth + 1)
        if stmt.else_body:
            lines.append(f"{pad}}} else {{")
            for inner in stmt.else_body:
                lines += format_stmt(inner, depth + 1)
        lines.append(f"{pad}}}")
        return lines
    raise TypeError(f"cannot format {type(stmt).__name__}")


def format_function(func: FuncDecl, depth: int = 0) -> list[str]:
    pad = INDENT * depth
    header = f"{pad}def {func.signature_text}"
    if func.by is not None:
        return [f"{header} {format_by_clause(func.by)}"]
    lines = [f"{header} {{"]
    for stmt in func.body or ():
        lines += format_stmt(stmt, depth + 1)
    lines.append(f"{pad}}}")
    return lines


def format_class(cls: ClassDecl) -> list[str]:
    lines = [f"class {cls.name} {{"]
    lines += [f"{INDENT}{f.name}: {f.type}" for f in cls.fields]
    for method in cls.methods:
        lines.append("")
        lines += format_function(method, 1)
    lines.append("}")
    return lines


def format_module(module: ModuleAST) -> str:
    """Render a module as source text that parses back to an equal tree."""
    blocks: list[list[str]] = []
    if module.imports:
        blocks.append([f"import {name}" for name in module.imports])
    for decl in module.decls:
        blocks.append(format_class(decl) if isinstance(decl, ClassDecl) else format_function(decl))
    if module.stmts:
        blocks.append([line for stmt in module.stmts for line in format_stmt(stmt)])
    return "\n\n".join("\n".join(block) for block in blocks) + "\n"
