"""Record and replay of backend exchanges as JSON Lines."""

import difflib
import json
import logging
import threading
from pathlib import Path
from typing import Any, Union

from pydantic import BaseModel, ConfigDict, ValidationError

from ..errors import BackendConfigError, ReplayExhausted, ReplayMismatch
from .base import CompletionRequest, CompletionResult, ModelBackend

logger = logging.getLogger(__name__)


class RecordedRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    system: str
    user: str
    model: str
    hyperparams: dict[str, Any] = {}


class RecordedResult(BaseModel):
    model_config = ConfigDict(extra="forbid")
    text: str
    prompt_tokens: int
    completion_tokens: int


class RecordedExchange(BaseModel):
    """One line of a recording file."""

    model_config = ConfigDict(extra="forbid")
    request: RecordedRequest
    result: RecordedResult

    @classmethod
    def capture(cls, request: CompletionRequest, result: CompletionResult) -> "RecordedExchange":
        return cls(
            request=RecordedRequest(
                system=request.prompt.system,
                user=request.prompt.user,
                model=request.model_name,
                hyperparams=dict(request.hyperparams),
            ),
            result=RecordedResult(
                text=result.text,
                prompt_tokens=result.prompt_tokens,
                completion_tokens=result.completion_tokens,
            ),
        )

    def to_line(self) -> str:
        return json.dumps(self.model_dump(), sort_keys=True, ensure_ascii=False) + "\n"


class RecordingBackend(ModelBackend):
    """Wraps another backend and appends every exchange to a file.

    The file is truncated when the recorder is created.
    """

    def __init__(self, inner: ModelBackend, path: Union[str, Path]):
        self.inner = inner
        self.path = Path(path)
        self.name = f"record({inner.name})"
        self.default_model = inner.default_model
        self._lock = threading.Lock()
        try:
            self.path.write_text("", encoding="utf-8")
        except OSError as e:
            raise BackendConfigError(f"cannot write recording {self.path}: {e}") from e

    def complete(self, request: CompletionRequest) -> CompletionResult:
        result = self.inner.complete(request)
        line = RecordedExchange.capture(request, result).to_line()
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(line)
        return result


def load_recording(path: Union[str, Path]) -> list[RecordedExchange]:
    path = Path(path)
    if not path.is_file():
        raise BackendConfigError(f"replay file not found: {path}")
    exchanges = []
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            exchanges.append(RecordedExchange.model_validate_json(line))
        except ValidationError as e:
            raise BackendConfigError(f"{path}:{number}: malformed recording line ({e.error_count()} error(s))") from e
    return exchanges


def _diff_summary(recorded: str, actual: str, label: str, limit: int = 20) -> str:
    diff = difflib.unified_diff(
        recorded.splitlines(), actual.splitlines(),
        fromfile=f"recorded {label}", tofile=f"actual {label}", lineterm="",
    )
    lines = list(diff)
    if len(lines) > limit:
        lines = lines[:limit] + [f"... ({len(lines) - limit} more diff line(s))"]
    return "\n".join(lines)


class ReplayBackend(ModelBackend):
    """Answers from a recording, in order, after checking the prompt text byte for byte."""

    name = "replay"

    def __init__(self, exchanges: list[RecordedExchange]):
        self.exchanges = exchanges
        self._index = 0
        self._lock = threading.Lock()

    @property
    def consumed(self) -> int:
        return self._index

    def complete(self, request: CompletionRequest) -> CompletionResult:
        with self._lock:
            index = self._index
            if index >= len(self.exchanges):
                raise ReplayExhausted(len(self.exchanges))
            recorded = self.exchanges[index]
            for label, expected, actual in (
                ("system", recorded.request.system, request.prompt.system),
                ("user", recorded.request.user, request.prompt.user),
            ):
                if expected != actual:
                    raise ReplayMismatch(index, _diff_summary(expected, actual, label))
            self._index += 1
        logger.debug("replayed exchange #%d for %s", index, request.site_id)
        return CompletionResult(
            recorded.result.text, recorded.result.prompt_tokens, recorded.result.completion_tokens,
        )


def replay_backend(recording_path: Union[str, Path]) -> ReplayBackend:
    """Backend that replays a recording file.

    Raises:
        BackendConfigError: The file is missing or malformed
    """
    return ReplayBackend(load_recording(recording_path))


def recording_backend(inner: ModelBackend, path: Union[str, Path]) -> RecordingBackend:
    """Wrap a backend so every exchange is appended to ``path``."""
    return RecordingBackend(inner, path)
