"""Runtime values: type checking, rendering, and render/parse agreement."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from mtp.ast_nodes import BOOL, FLOAT, INT, STR, ListType, MapType, NamedType
from mtp.outparse import parse_typed_output
from mtp.values import (
    BoolValue, FloatValue, IntValue, ListValue, MapValue, ObjectValue, SchemaTable, StrValue, check_type,
    render_value, summarize_value, to_display,
)

SCHEMAS = SchemaTable({
    "Position": (("x", INT), ("y", INT)),
    "Person": (("name", STR), ("dob", STR)),
    "Box": (("label", STR), ("items", ListType(NamedType("Position"))), ("weights", MapType(STR, FLOAT)),
            ("sealed", BOOL)),
})


def position(x, y):
    return ObjectValue("Position", (("x", IntValue(x)), ("y", IntValue(y))))


# -------------------- check_type --------------------
def test_int_conforms():
    assert check_type(IntValue(145), INT, SCHEMAS).ok


def test_float_is_not_int():
    report = check_type(FloatValue(145.0), INT, SCHEMAS)
    assert not report.ok
    assert report.first.path == "$"
    assert report.first.expected == "int"


def test_bool_is_not_int():
    assert not check_type(BoolValue(True), INT, SCHEMAS).ok


def test_list_element_path():
    report = check_type(ListValue((IntValue(1), StrValue("2"))), ListType(INT), SCHEMAS)
    assert str(report.first) == 'at $[1]: expected int, found str "2"'


def test_missing_field_path():
    report = check_type(ObjectValue("Person", (("name", StrValue("Einstein")),)), NamedType("Person"), SCHEMAS)
    assert report.first.path == "$.dob"
    assert report.first.found == "nothing"


def test_extra_field_reported():
    value = ObjectValue("Position", (("x", IntValue(1)), ("y", IntValue(2)), ("z", IntValue(3))))
    report = check_type(value, NamedType("Position"), SCHEMAS)
    assert [m.path for m in report.mismatches] == ["$.z"]


def test_wrong_class():
    report = check_type(position(0, 0), NamedType("Person"), SCHEMAS)
    assert report.first.found == "Position object"


def test_unknown_class():
    value = ObjectValue("Dragon", ())
    assert check_type(value, NamedType("Dragon"), SCHEMAS).first.found == "unknown class"


def test_map_keys_and_values_checked():
    value = MapValue(((StrValue("a"), FloatValue(1.0)), (IntValue(2), IntValue(3))))
    report = check_type(value, MapType(STR, FLOAT), SCHEMAS)
    assert [m.path for m in report.mismatches] == ["$.key(2)", "$[2]"]


def test_nested_object_conforms():
    box = ObjectValue("Box", (
        ("label", StrValue("crate")),
        ("items", ListValue((position(0, 0), position(1, 2)))),
        ("weights", MapValue(((StrValue("lid"), FloatValue(0.5)),))),
        ("sealed", BoolValue(False)),
    ))
    assert check_type(box, NamedType("Box"), SCHEMAS).ok


# -------------------- render_value --------------------
@pytest.mark.parametrize("value, text", [
    (IntValue(-7), "-7"),
    (FloatValue(2.5), "2.5"),
    (FloatValue(3.0), "3.0"),
    (BoolValue(True), "true"),
    (StrValue('say "hi"\n'), '"say \\"hi\\"\\n"'),
    (ListValue(), "[]"),
    (MapValue(((StrValue("a"), IntValue(1)),)), '{"a": 1}'),
    (position(0, 6), "Position(x=0, y=6)"),
    (ObjectValue("Person", (("name", StrValue("Einstein")), ("dob", StrValue("March 14, 1879")))),
     'Person(name="Einstein", dob="March 14, 1879")'),
])
def test_render(value, text):
    assert render_value(value) == text


@pytest.mark.parametrize("number", [math.inf, -math.inf, math.nan])
def test_non_finite_floats_have_no_rendering(number):
    with pytest.raises(ValueError):
        render_value(FloatValue(number))


def test_display_prints_strings_raw():
    assert to_display(StrValue("Bonjour")) == "Bonjour"
    assert to_display(IntValue(145)) == "145"


def test_summary_is_truncated():
    summary = summarize_value(StrValue("x" * 100))
    assert summary.startswith('str "xxx')
    assert summary.endswith("...")
    assert len(summary) <= 44


# -------------------- render/parse agreement --------------------
BASE_TYPES = [INT, FLOAT, STR, BOOL, NamedType("Position"), NamedType("Person")]
KEY_TYPES = [INT, STR, BOOL]

finite_floats = st.floats(allow_nan=False, allow_infinity=False)


def types(depth):
    base = st.sampled_from(BASE_TYPES)
    if depth == 0:
        return base
    inner = types(depth - 1)
    return st.one_of(
        base,
        st.just(NamedType("Box")),
        inner.map(ListType),
        st.tuples(st.sampled_from(KEY_TYPES), inner).map(lambda kv: MapType(*kv)),
    )


def values_for(t):
    if t == INT:
        return st.integers().map(IntValue)
    if t == FLOAT:
        return finite_floats.map(FloatValue)
    if t == STR:
        return st.text(max_size=12).map(StrValue)
    if t == BOOL:
        return st.booleans().map(BoolValue)
    if isinstance(t, ListType):
        return st.lists(values_for(t.element), max_size=4).map(lambda xs: ListValue(tuple(xs)))
    if isinstance(t, MapType):
        pairs = st.lists(st.tuples(values_for(t.key), values_for(t.value)), max_size=4, unique_by=lambda kv: kv[0])
        return pairs.map(lambda ps: MapValue(tuple(ps)))
    declared = SCHEMAS.fields_of(t.name)
    names = [n for n, _ in declared]
    return st.tuples(*(values_for(ft) for _, ft in declared)).map(
        lambda vs: ObjectValue(t.name, tuple(zip(names, vs))))


typed_values = types(3).flatmap(lambda t: values_for(t).map(lambda v: (t, v)))


@settings(max_examples=1000, deadline=None)
@given(typed_values)
def test_rendered_values_parse_back(pair):
    t, value = pair
    assert check_type(value, t, SCHEMAS).ok
    outcome = parse_typed_output(render_value(value), t, SCHEMAS)
    assert outcome.ok, outcome.diagnostic
    assert outcome.value == value
    assert render_value(outcome.value) == render_value(value)
