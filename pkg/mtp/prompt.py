"""Prompt synthesis from MT-IR entries and bound runtime values."""

import re
from dataclasses import dataclass
from typing import Optional, Union

from langchain_core.messages import BaseMessage
from langchain_core.prompts import ChatPromptTemplate

from .ast_nodes import ListType, MapType, NamedType, PrimitiveType, TypeExpr, named_types_in
from .errors import ArityError
from .mtir import CallSiteKind, MTIREntry
from .outparse import ParseFail
from .values import TypeCheckReport, Value, render_value

SYSTEM_MESSAGE = (
    "You are the runtime of a typed program: carry out the requested operation "
    "and answer with a single value in the requested format."
)

INSTRUCTIONS_HYPERPARAM = "instructions"
"""By-clause hyperparameter rendered into the prompt instead of sent to the backend."""

# The human message is pre-rendered; braces in values are never template variables.
PROMPT_FRAME = ChatPromptTemplate.from_messages([
    ("system", "{system}"),
    ("human", "{user}"),
])

_CAMEL_RE = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")


@dataclass(frozen=True)
class PromptSections:
    """Structured copy of what the user text says."""

    action: str
    signature: str
    type_explanations: tuple[str, ...] = ()
    inputs: tuple[tuple[str, str], ...] = ()
    """(name, rendered value)."""
    input_types: tuple[str, ...] = ()
    receiver: Optional[str] = None
    instructions: Optional[str] = None
    output_instruction: str = ""


@dataclass(frozen=True)
class CorrectionPrompt:
    prior_output: str
    diagnostic: str
    expected_schema: str


@dataclass(frozen=True)
class Prompt:
    system: str
    user: str
    sections: Optional[PromptSections] = None
    correction: Optional[CorrectionPrompt] = None

    @property
    def is_correction(self) -> bool:
        return self.correction is not None

    def to_messages(self) -> list[BaseMessage]:
        return PROMPT_FRAME.format_messages(system=self.system, user=self.user)


def action_words(identifier: str) -> str:
    """``get_next_level`` -> ``get next level``; ``calculateAge`` -> ``calculate age``."""
    words = []
    for part in re.split(r"[._]+", identifier):
        words += [w for w in _CAMEL_RE.sub(" ", part).split() if w]
    return " ".join(w.lower() for w in words)


def _action(entry: MTIREntry) -> str:
    if entry.kind == CallSiteKind.INIT:
        return f"create {action_words(entry.subject)}"
    if entry.kind == CallSiteKind.METHOD:
        method = entry.subject.split(".", 1)[1]
        return f"{action_words(method)} for this {action_words(entry.receiver)}"
    return action_words(entry.subject)


def output_instruction(t: TypeExpr) -> str:
    """Tell the model the exact output shape for a type."""
    if isinstance(t, PrimitiveType):
        shapes = {
            "int": "a bare int literal such as 42",
            "float": "a bare float literal such as 3.5",
            "str": 'a double-quoted string literal such as "text"',
            "bool": "true or false",
        }
        return f"Respond with {shapes[t.name]} and nothing else."
    if isinstance(t, NamedType):
        return (f"Respond with one complete {t.name}(...) constructor expression that gives every field "
                f"as field=value, and nothing else.")
    if isinstance(t, (ListType, MapType)):
        return (f"Respond with a single {t} value and nothing else. Write lists as [a, b], maps as "
                f"{{key: value}}, objects as ClassName(field=value, ...), strings in double quotes.")
    raise TypeError(f"not a type expression: {t!r}")


def render_sections(sections: PromptSections) -> str:
    blocks = [f"[Action]\n{sections.action}\n{sections.signature}"]
    if sections.type_explanations:
        blocks.append("[Type_Explanations]\n" + "\n".join(sections.type_explanations))
    if sections.inputs:
        types = sections.input_types or ("",) * len(sections.inputs)
        blocks.append("[Inputs]\n" + "\n".join(
            f"{name}: {t} = {text}" if t else f"{name} = {text}" for (name, text), t in zip(sections.inputs, types)
        ))
    if sections.receiver is not None:
        blocks.append(f"[Self]\n{sections.receiver}")
    if sections.instructions:
        blocks.append(f"[Instructions]\n{sections.instructions}")
    blocks.append(f"[Output_Format]\n{sections.output_instruction}")
    return "\n\n".join(blocks) + "\n"


def synthesize_prompt(entry: MTIREntry, bound_values: list[tuple[str, Value]],
                      receiver: Optional[Value] = None) -> Prompt:
    """Build the first prompt for a by-call.

    Args:
        entry: MT-IR entry of the call-site
        bound_values: (name, value) pairs in parameter order
        receiver: The object a method is called on

    Returns:
        Prompt whose user text is a pure function of its sections

    Raises:
        ArityError: The bound names differ from the entry's parameters, or a
            receiver is given (or missing) for the wrong kind of site
    """
    expected = [name for name, _ in entry.params]
    given = [name for name, _ in bound_values]
    if expected != given:
        raise ArityError(f"{entry.site_id}: expected arguments {expected}, got {given}")
    if (receiver is not None) != (entry.kind == CallSiteKind.METHOD):
        raise ArityError(f"{entry.site_id}: receiver must be given exactly for method call-sites")

    instructions = entry.hyperparam(INSTRUCTIONS_HYPERPARAM)
    sections = PromptSections(
        action=_action(entry),
        signature=entry.signature_text,
        type_explanations=tuple(s.render() for s in entry.type_explanations),
        inputs=tuple((name, render_value(value)) for name, value in bound_values),
        input_types=tuple(str(t) for _, t in entry.params),
        receiver=None if receiver is None else render_value(receiver),
        instructions=str(instructions) if instructions is not None else None,
        output_instruction=output_instruction(entry.output_type),
    )
    return Prompt(SYSTEM_MESSAGE, render_sections(sections), sections=sections)


def expected_schema(entry: MTIREntry) -> str:
    """The output type plus the schema line of each class it names directly."""
    t = entry.output_type
    lines = [] if isinstance(t, NamedType) else [str(t)]
    for name in dict.fromkeys(named_types_in(t)):
        schema = entry.schema(name)
        lines.append(schema.render() if schema else name)
    return "\n".join(lines)


def failure_diagnostic(failure: Union[ParseFail, TypeCheckReport, str]) -> str:
    if isinstance(failure, ParseFail):
        return failure.diagnostic
    if isinstance(failure, TypeCheckReport):
        first = failure.first
        return "type-mismatch " + str(first) if first else "type check failed"
    return str(failure)


def synthesize_correction_prompt(entry: MTIREntry, prior_output: str,
                                 failure: Union[ParseFail, TypeCheckReport, str]) -> Prompt:
    """Build the short follow-up prompt after an unusable answer.

    It quotes the previous output verbatim, states the first failure and
    the expected schema, and leaves out inputs and the full type closure.
    """
    correction = CorrectionPrompt(prior_output, failure_diagnostic(failure), expected_schema(entry))
    user = (
        f"[Previous_Output]\n{correction.prior_output}\n\n"
        f"[Error]\n{correction.diagnostic}\n\n"
        f"[Expected_Schema]\n{correction.expected_schema}\n\n"
        f"[Output_Format]\n{output_instruction(entry.output_type)}\n"
    )
    return Prompt(SYSTEM_MESSAGE, user, correction=correction)
