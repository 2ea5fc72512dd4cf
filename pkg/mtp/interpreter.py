"""Tree-walking interpreter for `.mtp` programs.

By-bodied functions and methods are dispatched to the engine when called;
an object initialization with a by clause calls the model while the init
expression is evaluated.
"""

import logging
import math
import operator
from dataclasses import dataclass
from typing import Optional

from .ast_nodes import (
    AssignStmt, Attribute, BinaryOp, Call, ClassDecl, Expr, ExprStmt, FuncDecl, IfStmt, LetStmt,
    ListLiteral, ListType, Literal, Loc, MapLiteral, MapType, MethodCall, ModuleAST, Name, NamedType,
    PrintStmt, ReturnStmt, Stmt, TypeExpr, UnaryOp,
)
from .backends import TokenLedger
from .engine import RunConfig, eval_object_init_by, invoke_model
from .errors import MtpError, MtpRuntimeError, exit_code
from .mtir import MTIREntry, MTIRMap, site_id_for
from .registry import SemanticRegistry, SymbolId, SymbolKind, build_registry
from .values import (
    BoolValue, FloatValue, IntValue, ListValue, MapValue, ObjectValue, StrValue, Value, check_type,
    to_display,
)

logger = logging.getLogger(__name__)

LITERAL_VALUES = {"int": IntValue, "float": FloatValue, "str": StrValue, "bool": BoolValue}
_ARITHMETIC = {"+": operator.add, "-": operator.sub, "*": operator.mul, "/": operator.truediv}


class Environment:
    """Variable scopes of one activation, innermost last."""

    def __init__(self, module: str, module_scope: dict[str, Value], local_scope: Optional[dict[str, Value]] = None):
        self.module = module
        self.scopes = [module_scope] if local_scope is None else [module_scope, local_scope]

    def lookup(self, name: str) -> Value:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        raise MtpRuntimeError(f"variable '{name}' used before it has a value")

    def define(self, name: str, value: Value):
        self.scopes[-1][name] = value

    def assign(self, name: str, value: Value):
        for scope in reversed(self.scopes):
            if name in scope:
                scope[name] = value
                return
        raise MtpRuntimeError(f"assignment to undefined variable '{name}'")


class _Return(Exception):
    def __init__(self, value: Optional[Value]):
        self.value = value


@dataclass
class RunResult:
    stdout: str
    ledger: TokenLedger
    exit_status: int = 0
    diagnostic: Optional[str] = None
    error: Optional[MtpError] = None


class Interpreter:
    def __init__(self, modules: list[ModuleAST], mtir: MTIRMap, config: RunConfig,
                 registry: Optional[SemanticRegistry] = None):
        if not modules:
            raise MtpRuntimeError("no modules to run")
        self.modules = {m.name: m for m in modules}
        self.entry_module = modules[0]
        self.mtir = mtir
        self.config = config
        self.registry = registry or build_registry(modules)
        self.module_scopes: dict[str, dict[str, Value]] = {m.name: {} for m in modules}
        self.output: list[str] = []

    @property
    def stdout(self) -> str:
        return "".join(self.output)

    def run(self) -> str:
        """Execute the entry module's top-level statements."""
        name = self.entry_module.name
        env = Environment(name, self.module_scopes[name])
        try:
            self.exec_block(self.entry_module.stmts, env)
        except _Return:
            raise MtpRuntimeError("'return' outside a function")
        return self.stdout

    # -------------------- statements --------------------
    def exec_block(self, body: tuple[Stmt, ...], env: Environment):
        for stmt in body:
            self.exec_stmt(stmt, env)

    def exec_stmt(self, stmt: Stmt, env: Environment):
        if isinstance(stmt, LetStmt):
            env.define(stmt.name, self.eval(stmt.value, env))
        elif isinstance(stmt, AssignStmt):
            env.assign(stmt.name, self.eval(stmt.value, env))
        elif isinstance(stmt, ExprStmt):
            self.eval(stmt.expr, env)
        elif isinstance(stmt, PrintStmt):
            self.output.append(to_display(self.eval(stmt.value, env)) + "\n")
        elif isinstance(stmt, ReturnStmt):
            raise _Return(None if stmt.value is None else self.eval(stmt.value, env))
        elif isinstance(stmt, IfStmt):
            condition = self.eval(stmt.condition, env)
            if not isinstance(condition, BoolValue):
                raise self._error("condition is not a bool", env, stmt.loc)
            self.exec_block(stmt.then_body if condition.value else stmt.else_body, env)
        else:
            raise MtpRuntimeError(f"unsupported statement {type(stmt).__name__}")

    # -------------------- expressions --------------------
    def eval(self, expr: Expr, env: Environment) -> Value:
        if isinstance(expr, Literal):
            return LITERAL_VALUES[expr.kind](expr.value)
        if isinstance(expr, Name):
            return env.lookup(expr.ident)
        if isinstance(expr, Call):
            return self.eval_call(expr, env)
        if isinstance(expr, MethodCall):
            return self.eval_method_call(expr, env)
        if isinstance(expr, Attribute):
            receiver = self.eval(expr.receiver, env)
            value = receiver.get(expr.name) if isinstance(receiver, ObjectValue) else None
            if value is None:
                raise self._error(f"no attribute '{expr.name}'", env, expr.loc)
            return value
        if isinstance(expr, ListLiteral):
            return ListValue(tuple(self.eval(e, env) for e in expr.elements))
        if isinstance(expr, MapLiteral):
            pairs: dict[Value, Value] = {}
            for key, value in expr.pairs:
                pairs[self.eval(key, env)] = self.eval(value, env)
            return MapValue(tuple(pairs.items()))
        if isinstance(expr, UnaryOp):
            operand = self.eval(expr.operand, env)
            if isinstance(operand, IntValue):
                return IntValue(-operand.value)
            if isinstance(operand, FloatValue):
                return FloatValue(-operand.value)
            raise self._error("unary '-' needs a number", env, expr.loc)
        if isinstance(expr, BinaryOp):
            return self._binary(expr, env)
        raise MtpRuntimeError(f"unsupported expression {type(expr).__name__}")

    def _bind(self, names: list[str], call, env: Environment, what: str) -> dict[str, Value]:
        if len(call.args) > len(names):
            raise self._error(f"too many arguments for {what}", env, call.loc)
        bound = {name: self.eval(arg, env) for name, arg in zip(names, call.args)}
        for name, arg in call.kwargs:
            if name not in names or name in bound:
                raise self._error(f"bad argument '{name}' for {what}", env, call.loc)
            bound[name] = self.eval(arg, env)
        return bound

    def eval_call(self, call: Call, env: Environment) -> Value:
        symbol = self.registry.resolve(call.callee, env.module)
        if symbol is None:
            raise self._error(f"unknown function or class '{call.callee}'", env, call.loc)
        decl = self.modules[symbol.module].decl(symbol.name)

        if isinstance(decl, ClassDecl):
            names = [f.name for f in decl.fields]
            bound = self._bind(names, call, env, f"class {decl.name}")
            if call.by is not None:
                entry = self._entry(env.module, call.by.loc)
                provided = [(name, bound[name]) for name in names if name in bound]
                value = eval_object_init_by(decl.name, provided, entry, self.config)
                return self._stamp(value, NamedType(decl.name), symbol.module)
            if len(bound) != len(names):
                raise self._error(f"{decl.name} needs all of {names}", env, call.loc)
            schemas = self.registry.schemas_for(symbol.module)
            for f in decl.fields:
                report = check_type(bound[f.name], f.type, schemas)
                if not report.ok:
                    raise self._error(f"field {decl.name}.{f.name} {report.first}", env, call.loc)
            return ObjectValue(decl.name, tuple((name, bound[name]) for name in names), module=symbol.module)

        names = [p.name for p in decl.params]
        bound = self._bind(names, call, env, f"function {decl.name}")
        if len(bound) != len(names):
            raise self._error(f"{decl.name} needs all of {names}", env, call.loc)
        return self.call_function(decl, symbol.module, [(n, bound[n]) for n in names], None)

    def eval_method_call(self, call: MethodCall, env: Environment) -> Value:
        receiver = self.eval(call.receiver, env)
        if not isinstance(receiver, ObjectValue):
            raise self._error(f"'{call.method}' called on a non-object", env, call.loc)
        class_symbol = self._class_of(receiver, env)
        cls = self.modules[class_symbol.module].decl(class_symbol.name)
        method = cls.method(call.method)
        if method is None:
            raise self._error(f"{cls.name} has no method '{call.method}'", env, call.loc)
        names = [p.name for p in method.params]
        bound = self._bind(names, call, env, f"method {cls.name}.{method.name}")
        if len(bound) != len(names):
            raise self._error(f"{cls.name}.{method.name} needs all of {names}", env, call.loc)
        return self.call_function(method, class_symbol.module, [(n, bound[n]) for n in names], receiver)

    def call_function(self, func: FuncDecl, module: str, bound: list[tuple[str, Value]],
                      receiver: Optional[ObjectValue]) -> Value:
        if func.by is not None:
            value = invoke_model(self._entry(module, func.by.loc), bound, receiver, self.config)
            return self._stamp(value, func.return_type, module)

        local_scope: dict[str, Value] = {} if receiver is None else {"self": receiver}
        local_scope.update(bound)
        env = Environment(module, self.module_scopes[module], local_scope)
        try:
            self.exec_block(func.body, env)
        except _Return as r:
            value = r.value
        else:
            value = None
        if value is None:
            raise self._error(f"'{func.name}' finished without returning a value", env, func.loc)
        report = check_type(value, func.return_type, self.registry.schemas_for(module))
        if not report.ok:
            raise self._error(f"'{func.name}' returned a bad value {report.first}", env, func.loc)
        return value

    def _class_of(self, receiver: ObjectValue, env: Environment) -> SymbolId:
        if receiver.module is not None:
            return SymbolId(receiver.module, receiver.class_name, SymbolKind.CLASS)
        symbol = self.registry.resolve(receiver.class_name, env.module)
        if symbol is None or symbol.kind != SymbolKind.CLASS:
            return self.registry.resolve_class(receiver.class_name)
        return symbol

    def _stamp(self, value: Value, t: TypeExpr, module: str) -> Value:
        """Attach declaring modules to the objects inside a model-produced value.

        ``t`` is written in ``module``'s scope.
        """
        if isinstance(t, ListType) and isinstance(value, ListValue):
            return ListValue(tuple(self._stamp(e, t.element, module) for e in value.elements))
        if isinstance(t, MapType) and isinstance(value, MapValue):
            return MapValue(tuple(
                (self._stamp(k, t.key, module), self._stamp(v, t.value, module)) for k, v in value.pairs
            ))
        if isinstance(t, NamedType) and isinstance(value, ObjectValue):
            symbol = self.registry.schemas_for(module).resolve(t.name)
            if symbol is None:
                return value
            types = dict(self.registry.fields_of_class(symbol))
            fields = tuple(
                (name, self._stamp(v, types[name], symbol.module) if name in types else v)
                for name, v in value.fields
            )
            return ObjectValue(value.class_name, fields, module=symbol.module)
        return value

    def _entry(self, module: str, loc: Loc) -> MTIREntry:
        site_id = site_id_for(module, loc)
        entry = self.mtir.get(site_id)
        if entry is None:
            raise MtpRuntimeError("no MT-IR entry for this call-site", site_id)
        return entry

    def _binary(self, expr: BinaryOp, env: Environment) -> Value:
        left = self.eval(expr.left, env)
        right = self.eval(expr.right, env)
        op = expr.op
        if op == "==":
            return BoolValue(left == right)
        if op == "!=":
            return BoolValue(left != right)

        numbers = (IntValue, FloatValue)
        if isinstance(left, numbers) and isinstance(right, numbers):
            a, b = left.value, right.value
            if op in ("<", ">", "<=", ">="):
                return BoolValue({"<": a < b, ">": a > b, "<=": a <= b, ">=": a >= b}[op])
            if op == "/" and b == 0:
                raise self._error("division by zero", env, expr.loc)
            if isinstance(left, IntValue) and isinstance(right, IntValue) and op != "/":
                return IntValue(_ARITHMETIC[op](a, b))
            try:
                result = float(_ARITHMETIC[op](a, b))
            except OverflowError:
                result = math.inf
            if not math.isfinite(result):
                raise self._error(f"float result of '{op}' out of range", env, expr.loc)
            return FloatValue(result)

        if isinstance(left, StrValue) and isinstance(right, StrValue):
            if op == "+":
                return StrValue(left.value + right.value)
            if op in ("<", ">", "<=", ">="):
                a, b = left.value, right.value
                return BoolValue({"<": a < b, ">": a > b, "<=": a <= b, ">=": a >= b}[op])
        raise self._error(f"unsupported operands for '{op}'", env, expr.loc)

    @staticmethod
    def _error(message: str, env: Environment, loc: Loc) -> MtpRuntimeError:
        return MtpRuntimeError(message, site_id_for(env.module, loc))


def run_program(modules: list[ModuleAST], mtir: MTIRMap, config: RunConfig) -> RunResult:
    """Execute a program's entry module.

    Args:
        modules: Parsed program, entry module first
        mtir: MT-IR built from the same modules
        config: Backends, retry budget and ledger

    Returns:
        RunResult with captured stdout, the ledger and an exit status
        (0 ok, 1 type error, 2 program error, 3 backend error)
    """
    try:
        interpreter = Interpreter(modules, mtir, config)
    except MtpError as e:
        return RunResult("", config.ledger, exit_code(e), str(e), e)
    try:
        interpreter.run()
    except MtpError as e:
        logger.debug("run aborted: %s", e)
        return RunResult(interpreter.stdout, config.ledger, exit_code(e), str(e), e)
    except RecursionError:
        error = MtpRuntimeError("call depth exceeded")
        return RunResult(interpreter.stdout, config.ledger, exit_code(error), str(error), error)
    return RunResult(interpreter.stdout, config.ledger)
