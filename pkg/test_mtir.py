"""MT-IR construction, type closure and canonical serialization."""

import json
import os
from collections import deque

import pytest
from hypothesis import given, settings, strategies as st

import fixtures
from mtp.ast_nodes import INT, STR, ListType, NamedType
from mtp.errors import FormatError, UnresolvedNameError
from mtp.mtir import (
    CallSiteKind, MTIRMap, RETURN_SLOT, TypeSchema, build_mtir, collect_by_callsites, deserialize_mtir,
    extract_type_definition, mtir_to_dict, serialize_mtir,
)
from mtp.parser import load_modules, parse_program
from mtp.registry import build_registry

GOLDEN_GAME = os.path.join(fixtures.FIXTURES_DIR, "game", "game.mtir.json")


def names(schemas):
    return [s.name for s in schemas]


# -------------------- collect_by_callsites --------------------
def test_collect_single_function_site():
    modules = parse_program(fixtures.program_path("calculate_age"))
    sites = collect_by_callsites(modules)
    assert [(s.site_id, s.kind) for s in sites] == [("calculate_age:1:51", CallSiteKind.FUNCTION)]


def test_collect_method_and_init_sites(compile_source):
    modules, _, _ = compile_source(
        "class Person {\n"
        "    name: str\n"
        "    dob: str\n"
        "    def age(year: int) -> int by llm\n"
        "}\n"
        "let p = Person(\"Einstein\") by llm\n"
    )
    sites = collect_by_callsites(modules)
    assert [s.kind for s in sites] == [CallSiteKind.METHOD, CallSiteKind.INIT]
    assert sites[0].owner.name == "Person"
    assert sites[1].site_id == "main:6:28"


def test_collect_nothing():
    assert collect_by_callsites(load_modules("main", "let x = 1", {}.get)) == []


def test_collect_init_inside_function_body(compile_source):
    modules, _, mtir = compile_source(
        "class P { a: str  b: str }\n"
        "def make(a: str) -> P {\n"
        "    if a == \"\" { return P(\"?\") by llm }\n"
        "    return P(a) by llm\n"
        "}\n"
    )
    assert [s.site_id for s in collect_by_callsites(modules)] == ["main:3:32", "main:4:17"]
    assert len(mtir) == 2


# -------------------- extract_type_definition --------------------
def test_game_closure_order(game):
    _, registry, _ = game
    schemas = extract_type_definition(NamedType("Level"), registry, set(), "game")
    assert names(schemas) == ["Level", "Map", "Wall", "Position"]
    assert schemas[3] == TypeSchema("Position", (("x", INT), ("y", INT)))


def test_primitive_has_no_schemas(game):
    _, registry, _ = game
    assert extract_type_definition(INT, registry, set()) == []


def test_visited_set_is_shared(game):
    _, registry, _ = game
    visited = set()
    first = extract_type_definition(ListType(NamedType("Map")), registry, visited, "level")
    assert names(first) == ["Map", "Wall", "Position"]
    assert extract_type_definition(NamedType("Level"), registry, visited, "game") == [
        TypeSchema("Level", registry.class_fields["Level"]),
    ]
    assert visited == {"level.Map", "level.Level", "primitives.Wall", "primitives.Position"}


def test_self_referential_class_terminates(compile_source):
    _, registry, mtir = compile_source(
        "class Node { value: int  children: list[Node] }\n"
        "def walk(root: Node) -> int by llm\n"
    )
    entry = mtir.get("main:2:29")
    assert names(entry.type_explanations) == ["Node"]


def test_three_cycle_terminates(compile_source):
    _, registry, _ = compile_source(
        "class A { b: B }\nclass B { c: C }\nclass C { a: A  again: map[str, B] }\n"
    )
    assert names(extract_type_definition(NamedType("A"), registry, set(), "main")) == ["A", "B", "C"]
    assert names(extract_type_definition(NamedType("C"), registry, set(), "main")) == ["C", "A", "B"]


def test_unknown_type_is_unresolved(compile_fixture):
    _, registry, _ = compile_fixture("game")
    with pytest.raises(UnresolvedNameError):
        extract_type_definition(NamedType("Dragon"), registry, set(), "game")


PRIMITIVES = ["int", "float", "str", "bool"]


@st.composite
def class_graphs(draw):
    """Random class declarations C0..Cn-1 whose fields may reference any class."""
    count = draw(st.integers(min_value=1, max_value=10))
    classes = []
    for _ in range(count):
        fields = []
        for k in range(draw(st.integers(min_value=0, max_value=5))):
            target = draw(st.one_of(
                st.sampled_from(PRIMITIVES),
                st.integers(min_value=0, max_value=count - 1).map(lambda j: f"C{j}"),
            ))
            shape = draw(st.sampled_from(["{}", "list[{}]", "map[str, {}]", "list[list[{}]]"]))
            fields.append((f"f{k}", shape.format(target), target))
        classes.append(fields)
    return classes


def graph_source(classes):
    lines = []
    for i, fields in enumerate(classes):
        body = "\n".join(f"    {name}: {text}" for name, text, _ in fields)
        lines.append(f"class C{i} {{\n{body}\n}}")
    lines.append("def summarize(root: C0) -> int by llm")
    return "\n".join(lines) + "\n"


def reachable(classes, start=0):
    seen = {start}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        for _, _, target in classes[current]:
            if target.startswith("C"):
                j = int(target[1:])
                if j not in seen:
                    seen.add(j)
                    queue.append(j)
    return {f"C{j}" for j in seen}


@settings(max_examples=200, deadline=None)
@given(class_graphs())
def test_closure_matches_breadth_first_reachability(classes):
    modules = load_modules("main", graph_source(classes), {}.get)
    registry = build_registry(modules)
    entry = next(iter(build_mtir(modules, registry).entries.values()))

    closure = names(entry.type_explanations)
    assert len(closure) == len(set(closure))
    assert set(closure) == reachable(classes)
    assert closure[0] == "C0"
    for schema in entry.type_explanations:
        assert schema.fields == registry.class_fields[schema.name]


# -------------------- build_mtir --------------------
def test_game_entry(game):
    _, _, mtir = game
    assert len(mtir) == 1
    entry = mtir.get("game:4:55")
    assert entry.kind == CallSiteKind.FUNCTION
    assert entry.subject == "get_next_level"
    assert entry.params == (("prev_levels", ListType(NamedType("Level"))),)
    assert entry.outputs == ((RETURN_SLOT, NamedType("Level")),)
    assert names(entry.type_explanations) == ["Level", "Map", "Wall", "Position"]
    assert entry.signature_text == "get_next_level(prev_levels: list[Level]) -> Level"


def test_init_entry(compile_fixture):
    _, _, mtir = compile_fixture("einstein_init")
    entry = mtir.get("einstein_init:6:35")
    assert entry.kind == CallSiteKind.INIT
    assert entry.subject == "Person"
    assert entry.params == (("name", STR),)
    assert entry.outputs == (("dob", STR),)
    assert entry.output_type == NamedType("Person")
    assert names(entry.type_explanations) == ["Person"]


def test_method_entry(compile_fixture):
    _, _, mtir = compile_fixture("einstein_method")
    entry = mtir.get("einstein_method:5:45")
    assert entry.kind == CallSiteKind.METHOD
    assert entry.subject == "Person.calculate_age"
    assert entry.receiver == "Person"
    assert entry.params == (("cur_year", INT),)
    assert entry.hyperparams == (("temperature", 0.7),)
    assert names(entry.type_explanations) == ["Person"]


def test_hyperparams_are_sorted(compile_fixture):
    _, _, mtir = compile_fixture("translate")
    entry = mtir.get("translate:7:48")
    assert [k for k, _ in entry.hyperparams] == ["instructions", "temperature"]
    assert entry.hyperparam("temperature") == 0.2


def test_init_with_named_argument(compile_source):
    _, _, mtir = compile_source("class P { a: str  b: int  c: bool }\nlet p = P(b=3) by llm\n")
    entry = next(iter(mtir.entries.values()))
    assert entry.params == (("b", INT),)
    assert [n for n, _ in entry.outputs] == ["a", "c"]


def test_cross_module_closure(compile_source):
    others = {"shapes": "class Point { x: int  y: int }\nclass Segment { a: Point  b: Point }"}
    _, _, mtir = compile_source("import shapes\ndef longest(s: list[Segment]) -> Point by llm\n",
                                others=others)
    entry = next(iter(mtir.entries.values()))
    assert names(entry.type_explanations) == ["Segment", "Point"]


@pytest.mark.parametrize("name", fixtures.get_all_programs())
def test_closure_is_sound_and_minimal(name, compile_fixture):
    _, registry, mtir = compile_fixture(name)
    for entry in mtir.entries.values():
        present = set(names(entry.type_explanations))
        roots = [t for _, t in entry.params + entry.outputs] + [entry.output_type]
        if entry.receiver:
            roots.append(NamedType(entry.receiver))
        expected = set()
        for t in roots:
            expected |= set(names(extract_type_definition(t, registry, set())))
        assert present == expected
        for schema in entry.type_explanations:
            for _, field_type in schema.fields:
                for inner in names(extract_type_definition(field_type, registry, set())):
                    assert inner in present


# -------------------- serialization --------------------
def test_game_matches_golden(game):
    _, _, mtir = game
    with open(GOLDEN_GAME, "rb") as f:
        assert serialize_mtir(mtir) == f.read()


def test_empty_map_document():
    assert serialize_mtir(MTIRMap()) == b'{\n  "entries": {}\n}\n'
    assert len(deserialize_mtir(serialize_mtir(MTIRMap()))) == 0


@pytest.mark.parametrize("name", fixtures.get_all_programs())
def test_serialization_round_trip(name, compile_fixture):
    _, _, mtir = compile_fixture(name)
    data = serialize_mtir(mtir)
    assert deserialize_mtir(data) == mtir
    assert serialize_mtir(deserialize_mtir(data)) == data


@pytest.mark.parametrize("name", fixtures.get_all_programs())
def test_serialization_is_deterministic(name, compile_fixture):
    first = serialize_mtir(compile_fixture(name)[2])
    second = serialize_mtir(compile_fixture(name)[2])
    assert first == second


def test_hyperparam_number_kinds_survive(compile_source):
    _, _, mtir = compile_source("def f(x: int) -> int by llm(temperature=1.0, max_tokens=5, stream=false)\n")
    restored = next(iter(deserialize_mtir(serialize_mtir(mtir)).entries.values()))
    params = dict(restored.hyperparams)
    assert isinstance(params["temperature"], float)
    assert isinstance(params["max_tokens"], int) and not isinstance(params["max_tokens"], bool)
    assert params["stream"] is False


def test_truncated_document(game):
    data = serialize_mtir(game[2])
    with pytest.raises(FormatError) as info:
        deserialize_mtir(data[:40])
    assert 0 < info.value.offset <= 40


def test_invalid_utf8():
    with pytest.raises(FormatError) as info:
        deserialize_mtir(b'{"entries": {"\xff": 1}}')
    assert info.value.offset == 14


@pytest.mark.parametrize("doc", [
    {"entries": []},
    {"entries": {}, "extra": 1},
    {"entries": {"m:1:1": {"kind": "lambda"}}},
])
def test_wrong_shape(doc):
    with pytest.raises(FormatError) as info:
        deserialize_mtir(json.dumps(doc).encode())
    assert info.value.offset == 0


def test_bad_type_text(game):
    doc = mtir_to_dict(game[2])
    doc["entries"]["game:4:55"]["params"][0]["type"] = "list[Level"
    with pytest.raises(FormatError):
        deserialize_mtir(json.dumps(doc).encode())
