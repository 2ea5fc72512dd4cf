"""Compiler and runtime for programs whose `by` clauses delegate to a language model."""

from .engine import RunConfig, eval_object_init_by, invoke_model
from .interpreter import RunResult, run_program
from .lexer import tokenize
from .mtir import build_mtir, collect_by_callsites, deserialize_mtir, extract_type_definition, serialize_mtir
from .outparse import parse_typed_output
from .parser import parse_module, parse_program
from .prompt import synthesize_correction_prompt, synthesize_prompt
from .registry import build_registry, lookup_type
from .values import check_type, render_value

__version__ = "0.1.0"
