"""Deterministic scripted backend for tests and offline runs."""

import logging
import threading
from collections import deque
from pathlib import Path
from typing import Callable, Iterable, Optional, Union

from ..errors import BackendConfigError, ScriptExhausted
from .base import CompletionRequest, CompletionResult, ModelBackend, estimated_result

logger = logging.getLogger(__name__)

Matcher = Union[str, Callable[[CompletionRequest], bool]]
"""A substring of the user text, or a predicate over the request."""


class MockBackend(ModelBackend):
    """Answers from rules first, then from an ordered script.

    Every request is recorded in ``requests``.
    """

    name = "mock"

    def __init__(self, script: Iterable[str] = (), rules: Iterable[tuple[Matcher, str]] = ()):
        self._script = deque(script)
        self._rules = list(rules)
        self._lock = threading.Lock()
        self.requests: list[CompletionRequest] = []

    @property
    def calls(self) -> int:
        return len(self.requests)

    @property
    def remaining(self) -> int:
        return len(self._script)

    def _match(self, request: CompletionRequest) -> Optional[str]:
        for matcher, response in self._rules:
            if isinstance(matcher, str):
                if matcher in request.prompt.user:
                    return response
            elif matcher(request):
                return response
        return None

    def complete(self, request: CompletionRequest) -> CompletionResult:
        with self._lock:
            self.requests.append(request)
            text = self._match(request)
            if text is None:
                if not self._script:
                    raise ScriptExhausted(len(self.requests) - 1)
                text = self._script.popleft()
        logger.debug("mock answer #%d for %s: %r", len(self.requests), request.site_id, text[:60])
        return estimated_result(request, text)


def mock_backend(script: Iterable[str] = (), rules: Iterable[tuple[Matcher, str]] = ()) -> MockBackend:
    """Build a scripted backend.

    Args:
        script: Responses returned in order
        rules: (matcher, response) pairs; the first matching rule answers
            before the script is consulted

    Returns:
        MockBackend raising ScriptExhausted once nothing answers
    """
    return MockBackend(script, rules)


def load_mock_script(path: Union[str, Path]) -> list[str]:
    """Read a script file: one response per line, in order."""
    path = Path(path)
    if not path.is_file():
        raise BackendConfigError(f"mock script not found: {path}")
    return path.read_text(encoding="utf-8").splitlines()
