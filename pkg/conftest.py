"""Shared pytest fixtures."""

import pytest

import fixtures
from mtp.backends import mock_backend
from mtp.engine import RunConfig
from mtp.mtir import build_mtir
from mtp.parser import load_modules, parse_program
from mtp.registry import build_registry


def _compile(modules):
    registry = build_registry(modules)
    return modules, registry, build_mtir(modules, registry)


@pytest.fixture
def compile_fixture():
    """Compile a bundled program by fixture name -> (modules, registry, mtir)."""
    def _run(name: str):
        return _compile(parse_program(fixtures.program_path(name)))
    return _run


@pytest.fixture
def compile_source():
    """Compile in-memory sources: an entry text plus {module name: text} for imports."""
    def _run(source: str, name: str = "main", others: dict = None):
        return _compile(load_modules(name, source, (others or {}).get))
    return _run


@pytest.fixture
def game(compile_fixture):
    return compile_fixture("game")


@pytest.fixture
def mock_config():
    """RunConfig over a fresh scripted backend; returns (config, backend)."""
    def _make(script=(), max_retries: int = 3, **kwargs):
        backend = mock_backend(script)
        return RunConfig(default_backend=backend, max_retries=max_retries, **kwargs), backend
    return _make
