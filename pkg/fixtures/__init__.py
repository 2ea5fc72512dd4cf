"""Fixtures Module - Bundled example programs and their mock scripts."""

import os
from typing import Dict, List

# Path to fixtures directory
FIXTURES_DIR = os.path.dirname(os.path.abspath(__file__))

# Program name -> (directory, entry file stem)
PROGRAMS: Dict[str, tuple] = {
    "game": ("game", "game"),
    "calculate_age": ("person", "calculate_age"),
    "einstein_init": ("person", "einstein_init"),
    "einstein_method": ("person", "einstein_method"),
    "unused": ("person", "unused"),
    "translate": ("translation", "translate"),
    "odd_word_out": ("benchmarks", "odd_words"),
    "taskman": ("benchmarks", "taskman"),
}


def _lookup(name: str) -> tuple:
    if name not in PROGRAMS:
        raise ValueError(f"Unknown fixture: {name}. Valid fixtures: {list(PROGRAMS.keys())}")
    return PROGRAMS[name]


def program_path(name: str) -> str:
    """Path of a fixture's entry `.mtp` file.

    Args:
        name: Fixture name (see PROGRAMS)

    Returns:
        Absolute path to the entry file

    Raises:
        ValueError: If the fixture is unknown
    """
    directory, stem = _lookup(name)
    return os.path.join(FIXTURES_DIR, directory, f"{stem}.mtp")


def script_path(name: str) -> str:
    """Path of the mock script that answers a fixture's by-calls."""
    directory, stem = _lookup(name)
    return os.path.join(FIXTURES_DIR, directory, f"{stem}.script")


def load_script(name: str) -> List[str]:
    """Mock responses for a fixture, one per line."""
    with open(script_path(name), "r", encoding="utf-8") as f:
        return f.read().splitlines()


def recording_path(name: str) -> str:
    """Path of a fixture's frozen replay recording (JSON Lines).

    Raises:
        ValueError: If the fixture is unknown
    """
    directory, stem = _lookup(name)
    return os.path.join(FIXTURES_DIR, directory, f"{stem}.jsonl")


def get_all_programs() -> List[str]:
    return list(PROGRAMS.keys())
