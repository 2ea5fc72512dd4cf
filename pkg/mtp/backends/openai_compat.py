"""OpenAI-compatible chat-completions backend built on LangChain's ChatOpenAI."""

import logging
from typing import Any, Optional

import httpx
import openai
from langchain_openai import ChatOpenAI

from ..errors import BackendConfigError, ProviderError, TransportError
from .base import CompletionRequest, CompletionResult, ModelBackend

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://api.openai.com/v1"
DEFAULT_MODEL = "gpt-4o-mini"
DEFAULT_TRANSPORT_RETRIES = 2

# Request fields the chat-completions endpoint takes directly; anything else goes in extra_body.
WIRE_PARAMS = frozenset({
    "temperature", "max_tokens", "top_p", "frequency_penalty", "presence_penalty", "seed", "stop",
})


def _retryable(status: int) -> bool:
    return status == 429 or status >= 500


class HttpBackend(ModelBackend):
    """Chat-completions client for any OpenAI-compatible endpoint.

    Transport failures are retried with exponential backoff by the OpenAI
    SDK underneath ChatOpenAI (``transport_retries``); this budget is
    separate from the runtime's corrective retries.
    """

    name = "http"

    def __init__(self, base_url: str, api_key: str, defaults: Optional[dict[str, Any]] = None,
                 model: Optional[str] = None, transport_retries: int = DEFAULT_TRANSPORT_RETRIES,
                 timeout: float = 60.0, http_client: Optional[httpx.Client] = None):
        self.base_url = base_url
        self.defaults = dict(defaults or {})
        self.default_model = model or DEFAULT_MODEL
        self.llm = ChatOpenAI(
            model=self.default_model,
            api_key=api_key,
            base_url=base_url,
            max_retries=transport_retries,
            timeout=timeout,
            http_client=http_client,
        )

    def _call_kwargs(self, request: CompletionRequest) -> dict[str, Any]:
        params = {**self.defaults, **request.hyperparams}
        kwargs: dict[str, Any] = {"model": request.model_name}
        extra = {}
        for name, value in params.items():
            if name in WIRE_PARAMS:
                kwargs[name] = value
            else:
                extra[name] = value
        if extra:
            kwargs["extra_body"] = extra
        return kwargs

    def complete(self, request: CompletionRequest) -> CompletionResult:
        messages = request.prompt.to_messages()
        try:
            message = self.llm.invoke(messages, **self._call_kwargs(request))
        except openai.APIStatusError as e:
            body = (e.response.text if e.response is not None else str(e))[:200]
            if _retryable(e.status_code):
                raise TransportError(f"provider kept failing with HTTP {e.status_code}: {body}") from e
            raise ProviderError(e.status_code, body) from e
        except openai.APIConnectionError as e:
            raise TransportError(f"cannot reach {self.base_url}: {e}") from e

        prompt_tokens, completion_tokens = _usage(message)
        text = message.content if isinstance(message.content, str) else str(message.content)
        logger.info("http completion for %s: %d prompt / %d completion tokens",
                    request.site_id, prompt_tokens, completion_tokens)
        return CompletionResult(text, prompt_tokens, completion_tokens)


def _usage(message) -> tuple[int, int]:
    usage = getattr(message, "usage_metadata", None)
    if usage:
        return int(usage.get("input_tokens", 0)), int(usage.get("output_tokens", 0))
    token_usage = (getattr(message, "response_metadata", None) or {}).get("token_usage") or {}
    return int(token_usage.get("prompt_tokens", 0)), int(token_usage.get("completion_tokens", 0))


def http_backend(base_url: Optional[str], api_key: Optional[str], defaults: Optional[dict[str, Any]] = None,
                 **kwargs) -> HttpBackend:
    """Build the HTTP backend.

    Args:
        base_url: Endpoint root such as ``https://api.openai.com/v1``
        api_key: Bearer token
        defaults: Backend-level hyperparameters (lowest precedence)

    Raises:
        BackendConfigError: Missing API key or a malformed base URL
    """
    if not api_key:
        raise BackendConfigError("MTP_API_KEY is not set; the http backend needs an API key")
    base_url = base_url or DEFAULT_BASE_URL
    try:
        scheme = httpx.URL(base_url).scheme
    except httpx.InvalidURL as e:
        raise BackendConfigError(f"malformed base URL {base_url!r}") from e
    if scheme not in ("http", "https"):
        raise BackendConfigError(f"malformed base URL {base_url!r}")
    return HttpBackend(base_url, api_key, defaults, **kwargs)
