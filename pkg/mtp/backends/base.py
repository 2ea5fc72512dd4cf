"""Backend interface shared by every model binding."""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Optional

from ..prompt import Prompt


@dataclass(frozen=True)
class CompletionRequest:
    prompt: Prompt
    model_name: str
    hyperparams: dict[str, Any] = field(default_factory=dict)
    """Passed through untouched from the by clause (after CLI defaults)."""
    site_id: Optional[str] = None

    def __post_init__(self):
        if not self.model_name:
            raise ValueError("model_name must be nonempty")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be non-negative")


def estimate_tokens(text: str) -> int:
    """Whitespace-separated token count; deterministic stand-in for a tokenizer."""
    return len(text.split())


def estimated_result(request: CompletionRequest, text: str) -> CompletionResult:
    prompt_tokens = estimate_tokens(request.prompt.system) + estimate_tokens(request.prompt.user)
    return CompletionResult(text, prompt_tokens, estimate_tokens(text))


class ModelBackend(ABC):
    """A model binding.

    Implementations must tolerate concurrent ``complete`` calls.
    """

    name: str = "backend"
    default_model: Optional[str] = None
    """Model name used when neither the CLI nor the call-site picks one."""

    @abstractmethod
    def complete(self, request: CompletionRequest) -> CompletionResult:
        ...
