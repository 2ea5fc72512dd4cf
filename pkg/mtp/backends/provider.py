"""Backend factory and metadata, one entry per selectable backend."""

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Optional, Union

import httpx

from ..errors import BackendConfigError
from .base import ModelBackend
from .mock import load_mock_script, mock_backend
from .openai_compat import http_backend
from .replay import recording_backend, replay_backend

BackendKind = Literal["mock", "replay", "http"]


@dataclass
class BackendInfo:
    """Metadata for a selectable backend."""

    name: str
    """Display name"""

    description: str
    """What the backend does"""

    needs: list[str] = field(default_factory=list)
    """CLI options it requires"""

    env_vars: list[str] = field(default_factory=list)
    """Environment variables it reads"""


BACKEND_REGISTRY: dict[str, BackendInfo] = {
    "mock": BackendInfo(
        name="Mock",
        description="Returns scripted responses in order; deterministic token estimates",
        needs=["--mock-script"],
    ),
    "replay": BackendInfo(
        name="Replay",
        description="Answers from a recording after checking each prompt byte for byte",
        needs=["--replay"],
    ),
    "http": BackendInfo(
        name="OpenAI-compatible HTTP",
        description="Chat-completions endpoint with transport backoff",
        env_vars=["MTP_API_KEY", "MTP_BASE_URL"],
    ),
}


def get_backend(
    kind: BackendKind,
    mock_script: Optional[Union[str, Path]] = None,
    replay_path: Optional[Union[str, Path]] = None,
    record_path: Optional[Union[str, Path]] = None,
    model: Optional[str] = None,
    defaults: Optional[dict[str, Any]] = None,
    http_client: Optional[httpx.Client] = None,
) -> ModelBackend:
    """Get a backend instance by kind.

    Args:
        kind: "mock", "replay" or "http"
        mock_script: Script file for the mock backend
        replay_path: Recording to replay
        record_path: When set, every exchange is also recorded here
        model: Default model name for the http backend
        defaults: Backend-level hyperparameters for the http backend
        http_client: Injected httpx client for the http backend

    Returns:
        Ready ModelBackend

    Raises:
        BackendConfigError: If required options or environment are missing
    """
    if kind == "mock":
        if mock_script is None:
            raise BackendConfigError("the mock backend requires --mock-script")
        backend = mock_backend(load_mock_script(mock_script))
    elif kind == "replay":
        if replay_path is None:
            raise BackendConfigError("the replay backend requires --replay")
        if record_path is not None:
            raise BackendConfigError("--record and --replay are mutually exclusive")
        backend = replay_backend(replay_path)
    elif kind == "http":
        backend = http_backend(
            os.getenv("MTP_BASE_URL"), os.getenv("MTP_API_KEY"), defaults,
            model=model, http_client=http_client,
        )
    else:
        raise BackendConfigError(f"Unsupported backend: {kind}. Choose one of {', '.join(BACKEND_REGISTRY)}")

    if record_path is not None:
        backend = recording_backend(backend, record_path)
    return backend


def get_backend_info(kind: str) -> Optional[BackendInfo]:
    return BACKEND_REGISTRY.get(kind)
