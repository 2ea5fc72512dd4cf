"""Prompt synthesis and correction prompts."""

import os

import pytest

import fixtures
from mtp.ast_nodes import NamedType
from mtp.errors import ArityError
from mtp.outparse import parse_typed_output
from mtp.prompt import (
    SYSTEM_MESSAGE, action_words, expected_schema, synthesize_correction_prompt, synthesize_prompt,
)
from mtp.values import IntValue, ListValue, ObjectValue, StrValue

EINSTEIN = ObjectValue("Person", (("name", StrValue("Einstein")), ("dob", StrValue("March 14, 1879"))))
TASK = ObjectValue("Task", (("description", StrValue("Write report")), ("minutes", IntValue(90))))


def only_entry(mtir):
    return next(iter(mtir.entries.values()))


def game_inputs(entry):
    level = parse_typed_output(fixtures.load_script("game")[0], NamedType("Level"), entry).value
    return [("prev_levels", ListValue((level,)))]


def test_calculate_age_prompt_text(compile_fixture):
    entry = only_entry(compile_fixture("calculate_age")[2])
    prompt = synthesize_prompt(entry, [("cur_year", IntValue(2024)), ("dob", StrValue("March 14, 1879"))])
    assert prompt.system == SYSTEM_MESSAGE
    assert prompt.user == (
        "[Action]\n"
        "calculate age\n"
        "calculate_age(cur_year: int, dob: str) -> int\n"
        "\n"
        "[Inputs]\n"
        "cur_year: int = 2024\n"
        'dob: str = "March 14, 1879"\n'
        "\n"
        "[Output_Format]\n"
        "Respond with a bare int literal such as 42 and nothing else.\n"
    )
    assert not prompt.is_correction


def test_game_prompt_sections(game):
    entry = only_entry(game[2])
    prompt = synthesize_prompt(entry, game_inputs(entry))
    sections = prompt.sections
    assert sections.action == "get next level"
    assert [line.split("(")[0] for line in sections.type_explanations] == ["Level", "Map", "Wall", "Position"]
    assert sections.type_explanations[3] == "Position(x: int, y: int)"
    assert sections.inputs[0][0] == "prev_levels"
    assert sections.inputs[0][1].startswith("[Level(level_id=2, difficulty=2")
    assert "Level(...) constructor expression" in sections.output_instruction


def test_method_prompt_shows_receiver(compile_fixture):
    entry = only_entry(compile_fixture("einstein_method")[2])
    prompt = synthesize_prompt(entry, [("cur_year", IntValue(2024))], EINSTEIN)
    assert prompt.sections.action == "calculate age for this person"
    assert '[Self]\nPerson(name="Einstein", dob="March 14, 1879")' in prompt.user
    assert "Person(name: str, dob: str)" in prompt.user


def test_init_prompt(compile_fixture):
    entry = only_entry(compile_fixture("einstein_init")[2])
    prompt = synthesize_prompt(entry, [("name", StrValue("Einstein"))])
    assert prompt.sections.action == "create person"
    assert prompt.sections.signature == "Person(name: str) -> Person"
    assert 'name: str = "Einstein"' in prompt.user
    assert "Person(...)" in prompt.user


def test_map_output_prompt(compile_fixture):
    entry = compile_fixture("taskman")[2].get("taskman:6:52")
    prompt = synthesize_prompt(entry, [("tasks", ListValue((TASK,)))])
    assert prompt.sections.signature == "rank_tasks(tasks: list[Task]) -> map[str, int]"
    assert prompt.sections.type_explanations == ("Task(description: str, minutes: int)",)
    assert 'tasks: list[Task] = [Task(description="Write report", minutes=90)]' in prompt.user
    assert "[Instructions]\nRank 1 is the most urgent.\n" in prompt.user
    assert "single map[str, int] value" in prompt.sections.output_instruction


def test_instructions_are_rendered(compile_fixture):
    entry = compile_fixture("translate")[2].get("translate:7:48")
    prompt = synthesize_prompt(entry, [("text", StrValue("Good morning, Albert")), ("language", StrValue("French"))])
    assert "[Instructions]\nKeep personal names untranslated.\n" in prompt.user


@pytest.mark.parametrize("bound", [
    [("year", IntValue(2024)), ("dob", StrValue("x"))],
    [("cur_year", IntValue(2024))],
    [("dob", StrValue("x")), ("cur_year", IntValue(2024))],
])
def test_argument_names_must_match(bound, compile_fixture):
    entry = only_entry(compile_fixture("calculate_age")[2])
    with pytest.raises(ArityError):
        synthesize_prompt(entry, bound)


def test_receiver_only_for_methods(compile_fixture):
    function_entry = only_entry(compile_fixture("calculate_age")[2])
    method_entry = only_entry(compile_fixture("einstein_method")[2])
    with pytest.raises(ArityError):
        synthesize_prompt(function_entry, [("cur_year", IntValue(1)), ("dob", StrValue("x"))], EINSTEIN)
    with pytest.raises(ArityError):
        synthesize_prompt(method_entry, [("cur_year", IntValue(1))])


@pytest.mark.parametrize("identifier, words", [
    ("get_next_level", "get next level"),
    ("calculateAge", "calculate age"),
    ("Person", "person"),
    ("HTTPServer", "httpserver"),
    ("Person.calculate_age", "person calculate age"),
])
def test_action_words(identifier, words):
    assert action_words(identifier) == words


def test_to_messages_keeps_braces(compile_fixture):
    entry = only_entry(compile_fixture("calculate_age")[2])
    prompt = synthesize_prompt(entry, [("cur_year", IntValue(2024)), ("dob", StrValue("{year}"))])
    system, human = prompt.to_messages()
    assert system.type == "system"
    assert human.type == "human"
    assert human.content == prompt.user
    assert '"{year}"' in human.content


# -------------------- correction prompts --------------------
def test_correction_prompt(compile_fixture):
    entry = only_entry(compile_fixture("einstein_init")[2])
    failure = parse_typed_output('Person(name="Einstein")', entry.output_type, entry, {"name": StrValue("Einstein")})
    assert not failure.ok
    prompt = synthesize_correction_prompt(entry, 'Person(name="Einstein")', failure)
    assert prompt.is_correction
    assert prompt.user.startswith('[Previous_Output]\nPerson(name="Einstein")\n\n[Error]\nmissing-field at $.dob')
    assert "[Expected_Schema]\nPerson(name: str, dob: str)\n" in prompt.user
    assert "[Inputs]" not in prompt.user


def test_correction_is_shorter_than_first_prompt(game):
    entry = only_entry(game[2])
    first = synthesize_prompt(entry, game_inputs(entry))
    failure = parse_typed_output("I cannot do that", entry.output_type, entry)
    correction = synthesize_correction_prompt(entry, "I cannot do that", failure)
    assert len(correction.user) < len(first.user)
    assert "[Type_Explanations]" not in correction.user
    assert correction.correction.expected_schema == "Level(level_id: int, difficulty: int, width: int, height: int, " \
                                                    "num_wall: int, num_enemies: int, map: Map)"


def test_expected_schema_for_primitive_output(compile_fixture):
    entry = only_entry(compile_fixture("einstein_method")[2])
    assert expected_schema(entry) == "int"


# -------------------- completeness and minimality --------------------
def bound_for(name, entry):
    if name == "game":
        return game_inputs(entry), None
    samples = {
        "calculate_age": [("cur_year", IntValue(2024)), ("dob", StrValue("March 14, 1879"))],
        "unused": [("cur_year", IntValue(2024)), ("dob", StrValue("March 14, 1879"))],
        "einstein_init": [("name", StrValue("Einstein"))],
        "einstein_method": [("cur_year", IntValue(2024))],
        "odd_word_out": [("options", ListValue((StrValue("pen"), StrValue("skirt"))))],
        "taskman": [("tasks", ListValue((TASK,)))],
    }
    if name in samples:
        return samples[name], EINSTEIN if entry.receiver else None
    if entry.subject == "translate":
        return [("text", StrValue("Good morning")), ("language", StrValue("French"))], None
    return [("source_text", StrValue("Good morning")), ("target_language", StrValue("German"))], None


@pytest.mark.parametrize("name", fixtures.get_all_programs())
def test_prompt_shows_every_schema_and_input(name, compile_fixture):
    for entry in compile_fixture(name)[2].entries.values():
        bound, receiver = bound_for(name, entry)
        prompt = synthesize_prompt(entry, bound, receiver)
        for schema in entry.type_explanations:
            assert schema.render() in prompt.user
        for param, _ in entry.params:
            assert f"\n{param}: " in prompt.user
        assert synthesize_prompt(entry, bound, receiver) == prompt


def test_unreachable_class_stays_out_of_the_prompt(compile_source):
    game_dir = os.path.join(fixtures.FIXTURES_DIR, "game")
    with open(os.path.join(game_dir, "game.mtp"), encoding="utf-8") as f:
        game_source = f.read()
    with open(os.path.join(game_dir, "level.mtp"), encoding="utf-8") as f:
        level_source = f.read().replace("walls: list[Wall]", "walls: list[Position]")
    with open(os.path.join(game_dir, "primitives.mtp"), encoding="utf-8") as f:
        primitives_source = f.read()
    game_source = game_source.replace("[Wall(Position(0, 0), Position(0, 4))]", "[Position(0, 4)]")

    _, _, mtir = compile_source(game_source, "game", {"level": level_source, "primitives": primitives_source})
    entry = only_entry(mtir)
    assert [s.name for s in entry.type_explanations] == ["Level", "Map", "Position"]
    level = ObjectValue("Level", (
        ("level_id", IntValue(1)), ("difficulty", IntValue(1)), ("width", IntValue(5)), ("height", IntValue(5)),
        ("num_wall", IntValue(1)), ("num_enemies", IntValue(0)),
        ("map", ObjectValue("Map", (
            ("walls", ListValue()), ("enemies", ListValue()),
            ("player_pos", ObjectValue("Position", (("x", IntValue(0)), ("y", IntValue(0))))),
        ))),
    ))
    prompt = synthesize_prompt(entry, [("prev_levels", ListValue((level,)))])
    assert "Wall" not in prompt.user
