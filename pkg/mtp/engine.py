"""The by-call engine: prompt, model call, typed parse, corrective retries.

Nothing here touches source code or the registry; an MT-IR entry and the
bound values are all a call needs.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from .ast_nodes import NamedType
from .backends import CompletionRequest, ModelBackend, TokenLedger
from .errors import ArgTypeError, ArityError, BackendConfigError, MtpRuntimeError, MtpTypeError
from .mtir import CallSiteKind, MTIREntry
from .outparse import parse_typed_output
from .prompt import INSTRUCTIONS_HYPERPARAM, synthesize_correction_prompt, synthesize_prompt
from .values import ObjectValue, Value, check_type

logger = logging.getLogger(__name__)

DEFAULT_MAX_RETRIES = 3


@dataclass
class RunConfig:
    """Knobs for by-calls.

    Hyperparameter precedence is by clause, then ``default_hyperparams``
    (CLI flags), then whatever the backend itself defaults to.
    """

    backends: Mapping[str, ModelBackend] = field(default_factory=dict)
    """model_ref -> backend."""
    default_backend: Optional[ModelBackend] = None
    """Serves every model_ref without an explicit binding."""
    max_retries: int = DEFAULT_MAX_RETRIES
    default_hyperparams: dict[str, Any] = field(default_factory=dict)
    model_name: Optional[str] = None
    ledger: TokenLedger = field(default_factory=TokenLedger)
    verify_returns: bool = True
    """Re-check every returned value against the output type."""

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    def backend_for(self, model_ref: str) -> ModelBackend:
        backend = self.backends.get(model_ref, self.default_backend)
        if backend is None:
            raise BackendConfigError(f"no backend bound to model '{model_ref}'")
        return backend


def backend_hyperparams(entry: MTIREntry, config: RunConfig) -> dict[str, Any]:
    params = dict(config.default_hyperparams)
    params.update((k, v) for k, v in entry.hyperparams if k != INSTRUCTIONS_HYPERPARAM)
    return params


def _check_arguments(entry: MTIREntry, bound_values: list[tuple[str, Value]], receiver: Optional[Value]):
    expected = [name for name, _ in entry.params]
    given = [name for name, _ in bound_values]
    if expected != given:
        raise ArityError(f"{entry.site_id}: expected arguments {expected}, got {given}")
    for (name, t), (_, value) in zip(entry.params, bound_values):
        report = check_type(value, t, entry)
        if not report.ok:
            raise ArgTypeError(entry.site_id, f"argument '{name}' {report.first}")
    if entry.kind == CallSiteKind.METHOD:
        if receiver is None:
            raise ArityError(f"{entry.site_id}: method call-site needs a receiver")
        report = check_type(receiver, NamedType(entry.receiver), entry)
        if not report.ok:
            raise ArgTypeError(entry.site_id, f"receiver {report.first}")


def invoke_model(entry: MTIREntry, bound_values: list[tuple[str, Value]], receiver: Optional[Value],
                 config: RunConfig) -> Value:
    """Run one by-call to completion.

    The first attempt sends the full prompt; each later attempt sends a
    correction prompt built from the previous answer. Every attempt is
    recorded in the ledger.

    Args:
        entry: MT-IR entry of the call-site
        bound_values: (name, value) pairs in parameter order (for object
            initialization, the provided fields in declared order)
        receiver: The object a method is called on
        config: Backends, retry budget and ledger

    Returns:
        A value conforming to the entry's output type

    Raises:
        ArgTypeError: An input violates its declared type; no backend call is made
        MtpTypeError: No conforming output after 1 + max_retries attempts
    """
    _check_arguments(entry, bound_values, receiver)
    backend = config.backend_for(entry.model_ref)
    model_name = config.model_name or backend.default_model or entry.model_ref
    hyperparams = backend_hyperparams(entry, config)
    provided = dict(bound_values) if entry.kind == CallSiteKind.INIT else None
    output_type = entry.output_type

    prompt = synthesize_prompt(entry, bound_values, receiver)
    attempts = 1 + config.max_retries
    last_diagnostic = ""
    for attempt in range(1, attempts + 1):
        request = CompletionRequest(prompt, model_name, hyperparams, entry.site_id)
        result = backend.complete(request)
        config.ledger.record(entry.site_id, result, model_name)

        outcome = parse_typed_output(result.text, output_type, entry, provided)
        if outcome.ok:
            logger.info("%s answered on attempt %d/%d", entry.site_id, attempt, attempts)
            if config.verify_returns:
                _verify(entry, outcome.value, provided)
            return outcome.value

        last_diagnostic = outcome.diagnostic
        logger.warning("%s attempt %d/%d rejected: %s", entry.site_id, attempt, attempts, last_diagnostic)
        prompt = synthesize_correction_prompt(entry, result.text, outcome)

    raise MtpTypeError(entry.site_id, attempts, last_diagnostic)


def _verify(entry: MTIREntry, value: Value, provided: Optional[dict[str, Value]]):
    report = check_type(value, entry.output_type, entry)
    if not report.ok:
        raise MtpRuntimeError(f"returned value fails its type: {report.first}", entry.site_id)
    if provided:
        for name, given in provided.items():
            if value.get(name) != given:
                raise MtpRuntimeError(f"provided field '{name}' was not kept", entry.site_id)


def eval_object_init_by(class_name: str, provided: list[tuple[str, Value]], entry: MTIREntry,
                        config: RunConfig) -> ObjectValue:
    """Complete a partially initialized object through the model.

    Provided fields keep the developer's values; the model supplies the rest.
    """
    if entry.kind != CallSiteKind.INIT or entry.subject != class_name:
        raise MtpRuntimeError(f"call-site does not initialize {class_name}", entry.site_id)
    if len(provided) >= len(entry.params) + len(entry.outputs):
        raise ArityError(f"{entry.site_id}: object initialization by a model must leave a field open")
    return invoke_model(entry, provided, None, config)
