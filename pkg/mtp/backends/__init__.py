"""Pluggable model backends and token accounting."""

from .base import CompletionRequest, CompletionResult, ModelBackend, estimate_tokens
from .ledger import MODEL_PRICING, SiteUsage, TokenLedger
from .mock import MockBackend, load_mock_script, mock_backend
from .openai_compat import HttpBackend, http_backend
from .provider import BACKEND_REGISTRY, BackendInfo, get_backend, get_backend_info
from .replay import ReplayBackend, RecordingBackend, RecordedExchange, recording_backend, replay_backend

__all__ = [
    "CompletionRequest", "CompletionResult", "ModelBackend", "estimate_tokens",
    "MODEL_PRICING", "SiteUsage", "TokenLedger",
    "MockBackend", "load_mock_script", "mock_backend",
    "HttpBackend", "http_backend",
    "BACKEND_REGISTRY", "BackendInfo", "get_backend", "get_backend_info",
    "ReplayBackend", "RecordingBackend", "RecordedExchange", "recording_backend", "replay_backend",
]
