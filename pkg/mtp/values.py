"""Runtime values shared by the interpreter, the prompt renderer and the output parser."""

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Protocol, Union

from .ast_nodes import ListType, MapType, NamedType, PrimitiveType, TypeExpr
from .lexer import quote_string


@dataclass(frozen=True)
class IntValue:
    value: int


@dataclass(frozen=True)
class FloatValue:
    value: float


@dataclass(frozen=True)
class StrValue:
    value: str


@dataclass(frozen=True)
class BoolValue:
    value: bool


@dataclass(frozen=True)
class ListValue:
    elements: tuple["Value", ...] = ()


@dataclass(frozen=True)
class MapValue:
    pairs: tuple[tuple["Value", "Value"], ...] = ()
    """Insertion order is preserved."""


@dataclass(frozen=True)
class ObjectValue:
    class_name: str
    fields: tuple[tuple[str, "Value"], ...] = ()
    """(name, value) pairs in declared field order."""
    module: Optional[str] = field(default=None, compare=False, repr=False)
    """Module declaring the class, when the interpreter knows it."""

    def get(self, name: str) -> Optional["Value"]:
        for field_name, value in self.fields:
            if field_name == name:
                return value
        return None

    @property
    def field_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.fields)


Value = Union[IntValue, FloatValue, StrValue, BoolValue, ListValue, MapValue, ObjectValue]

PRIMITIVE_VALUE_TYPES = {"int": IntValue, "float": FloatValue, "str": StrValue, "bool": BoolValue}


class SchemaSource(Protocol):
    """Anything that can answer "which fields does class X declare?"."""

    def fields_of(self, class_name: str) -> Optional[tuple[tuple[str, TypeExpr], ...]]:
        ...


@dataclass(frozen=True)
class SchemaTable:
    """Plain mapping-backed SchemaSource."""

    classes: Mapping[str, tuple[tuple[str, TypeExpr], ...]] = field(default_factory=dict)

    def fields_of(self, class_name: str) -> Optional[tuple[tuple[str, TypeExpr], ...]]:
        return self.classes.get(class_name)


# -------------------- type checking --------------------
@dataclass(frozen=True)
class Mismatch:
    path: str
    expected: str
    found: str

    def __str__(self) -> str:
        return f"at {self.path}: expected {self.expected}, found {self.found}"


@dataclass(frozen=True)
class TypeCheckReport:
    mismatches: tuple[Mismatch, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.mismatches

    @property
    def first(self) -> Optional[Mismatch]:
        return self.mismatches[0] if self.mismatches else None


def summarize_value(v: Value) -> str:
    """Short description of a value for diagnostics."""
    if isinstance(v, ObjectValue):
        return f"{v.class_name} object"
    if isinstance(v, ListValue):
        return f"list of {len(v.elements)}"
    if isinstance(v, MapValue):
        return f"map of {len(v.pairs)}"
    text = render_value(v)
    if len(text) > 40:
        text = text[:37] + "..."
    return f"{value_kind(v)} {text}"


def value_kind(v: Value) -> str:
    for name, cls in PRIMITIVE_VALUE_TYPES.items():
        if isinstance(v, cls):
            return name
    if isinstance(v, ListValue):
        return "list"
    if isinstance(v, MapValue):
        return "map"
    return v.class_name


def check_type(v: Value, t: TypeExpr, schemas: SchemaSource) -> TypeCheckReport:
    """Structurally check a value against a type.

    Primitives are checked by tag (an int is never a float), containers
    element-wise and objects by class name and then field by field.
    """
    mismatches: list[Mismatch] = []
    _check(v, t, schemas, "$", mismatches)
    return TypeCheckReport(tuple(mismatches))


def _check(v: Value, t: TypeExpr, schemas: SchemaSource, path: str, out: list[Mismatch]):
    if isinstance(t, PrimitiveType):
        if not isinstance(v, PRIMITIVE_VALUE_TYPES[t.name]):
            out.append(Mismatch(path, t.name, summarize_value(v)))
    elif isinstance(t, ListType):
        if not isinstance(v, ListValue):
            out.append(Mismatch(path, str(t), summarize_value(v)))
            return
        for i, element in enumerate(v.elements):
            _check(element, t.element, schemas, f"{path}[{i}]", out)
    elif isinstance(t, MapType):
        if not isinstance(v, MapValue):
            out.append(Mismatch(path, str(t), summarize_value(v)))
            return
        for key, value in v.pairs:
            _check(key, t.key, schemas, f"{path}.key({render_value(key)})", out)
            _check(value, t.value, schemas, f"{path}[{render_value(key)}]", out)
    elif isinstance(t, NamedType):
        if not isinstance(v, ObjectValue) or v.class_name != t.name:
            out.append(Mismatch(path, t.name, summarize_value(v)))
            return
        declared = schemas.fields_of(t.name)
        if declared is None:
            out.append(Mismatch(path, t.name, "unknown class"))
            return
        declared_names = [name for name, _ in declared]
        for name in v.field_names:
            if name not in declared_names:
                out.append(Mismatch(f"{path}.{name}", "no such field", summarize_value(v.get(name))))
        for name, field_type in declared:
            value = v.get(name)
            if value is None:
                out.append(Mismatch(f"{path}.{name}", str(field_type), "nothing"))
            else:
                _check(value, field_type, _field_scope(schemas, t.name), f"{path}.{name}", out)


def _field_scope(schemas: SchemaSource, class_name: str) -> SchemaSource:
    """Schemas that name the field types of class_name."""
    within = getattr(schemas, "within", None)
    return schemas if within is None else within(class_name)


# -------------------- rendering --------------------
def render_value(v: Value) -> str:
    """Render a value as a constructor expression.

    This text is what prompts show the model and what the output parser
    reads back, so it must stay byte-stable.
    """
    if isinstance(v, BoolValue):
        return "true" if v.value else "false"
    if isinstance(v, IntValue):
        return str(v.value)
    if isinstance(v, FloatValue):
        if not math.isfinite(v.value):
            raise ValueError(f"float {v.value} has no literal form")
        return repr(v.value)
    if isinstance(v, StrValue):
        return quote_string(v.value)
    if isinstance(v, ListValue):
        return "[" + ", ".join(render_value(e) for e in v.elements) + "]"
    if isinstance(v, MapValue):
        return "{" + ", ".join(f"{render_value(k)}: {render_value(val)}" for k, val in v.pairs) + "}"
    if isinstance(v, ObjectValue):
        args = ", ".join(f"{name}={render_value(val)}" for name, val in v.fields)
        return f"{v.class_name}({args})"
    raise TypeError(f"not a value: {v!r}")


def to_display(v: Value) -> str:
    """Text written by `print`: strings raw, everything else rendered."""
    if isinstance(v, StrValue):
        return v.value
    return render_value(v)
