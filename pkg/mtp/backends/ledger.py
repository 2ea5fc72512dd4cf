"""Token accounting per call-site."""

import threading
from dataclasses import dataclass
from typing import Optional

from .base import CompletionResult

# USD per million tokens: (prompt, completion).
MODEL_PRICING: dict[str, tuple[float, float]] = {
    "gpt-4o": (2.50, 10.00),
    "gpt-4o-mini": (0.15, 0.60),
    "gpt-4-turbo": (10.00, 30.00),
    "gpt-3.5-turbo": (0.50, 1.50),
}


@dataclass
class SiteUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    calls: int = 0
    model: Optional[str] = None

    @property
    def estimated_cost(self) -> Optional[float]:
        price = MODEL_PRICING.get(self.model or "")
        if price is None:
            return None
        return (self.prompt_tokens * price[0] + self.completion_tokens * price[1]) / 1_000_000


class TokenLedger:
    """Thread-safe accumulator of prompt/completion tokens and call counts.

    Every backend call is recorded, including attempts whose output was
    rejected; totals are always the sum over sites.
    """

    def __init__(self):
        self._sites: dict[str, SiteUsage] = {}
        self._lock = threading.Lock()

    def record(self, site_id: str, result: CompletionResult, model: Optional[str] = None):
        with self._lock:
            usage = self._sites.setdefault(site_id, SiteUsage())
            usage.prompt_tokens += result.prompt_tokens
            usage.completion_tokens += result.completion_tokens
            usage.calls += 1
            if model:
                usage.model = model

    @property
    def sites(self) -> dict[str, SiteUsage]:
        with self._lock:
            return {k: SiteUsage(v.prompt_tokens, v.completion_tokens, v.calls, v.model)
                    for k, v in sorted(self._sites.items())}

    @property
    def prompt_tokens(self) -> int:
        return sum(s.prompt_tokens for s in self.sites.values())

    @property
    def completion_tokens(self) -> int:
        return sum(s.completion_tokens for s in self.sites.values())

    @property
    def calls(self) -> int:
        return sum(s.calls for s in self.sites.values())

    @property
    def estimated_cost(self) -> Optional[float]:
        costs = [s.estimated_cost for s in self.sites.values()]
        if not costs or any(c is None for c in costs):
            return None
        return sum(costs)

    def to_dict(self) -> dict:
        sites = self.sites
        return {
            "sites": {
                site_id: {
                    "prompt_tokens": s.prompt_tokens,
                    "completion_tokens": s.completion_tokens,
                    "calls": s.calls,
                    "model": s.model,
                    "estimated_cost_usd": s.estimated_cost,
                }
                for site_id, s in sites.items()
            },
            "total": {
                "prompt_tokens": sum(s.prompt_tokens for s in sites.values()),
                "completion_tokens": sum(s.completion_tokens for s in sites.values()),
                "calls": sum(s.calls for s in sites.values()),
                "estimated_cost_usd": self.estimated_cost,
            },
        }

    def render_text(self) -> str:
        """Fixed-column summary, one row per site plus a total row."""
        rows = [f"{'site':<28} {'calls':>6} {'prompt':>9} {'completion':>11}"]
        sites = self.sites
        for site_id, s in sites.items():
            rows.append(f"{site_id:<28} {s.calls:>6} {s.prompt_tokens:>9} {s.completion_tokens:>11}")
        rows.append(
            f"{'total':<28} {sum(s.calls for s in sites.values()):>6} "
            f"{sum(s.prompt_tokens for s in sites.values()):>9} "
            f"{sum(s.completion_tokens for s in sites.values()):>11}"
        )
        cost = self.estimated_cost
        if cost is not None:
            rows.append(f"estimated cost: ${cost:.6f}")
        return "\n".join(rows) + "\n"
