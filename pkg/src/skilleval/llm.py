"""Minimal chat-completions client for hosted vision LLMs.

Endpoint-agnostic: any server speaking the common `/chat/completions` request
shape works. Credentials and routing come from EVAL_LLM_API_BASE,
EVAL_LLM_MODEL, and EVAL_LLM_API_KEY.
"""

from __future__ import annotations

import base64
import mimetypes
import os
from dataclasses import dataclass
from pathlib import Path

import httpx

ENV_API_BASE = "EVAL_LLM_API_BASE"
ENV_MODEL = "EVAL_LLM_MODEL"
ENV_API_KEY = "EVAL_LLM_API_KEY"


class LLMError(Exception):
    pass


@dataclass(frozen=True)
class LLMConfig:
    api_base: str
    model: str
    api_key: str = ""
    temperature: float = 0.0
    timeout: float = 120.0
    transport_retries: int = 2

    @classmethod
    def from_env(cls, **overrides) -> "LLMConfig":
        base = os.environ.get(ENV_API_BASE, "")
        model = os.environ.get(ENV_MODEL, "")
        if not base or not model:
            raise LLMError(
                f"LLM endpoint not configured: set {ENV_API_BASE} and {ENV_MODEL}"
            )
        return cls(
            api_base=base,
            model=model,
            api_key=os.environ.get(ENV_API_KEY, ""),
            **overrides,
        )


def env_configured() -> bool:
    return bool(os.environ.get(ENV_API_BASE)) and bool(os.environ.get(ENV_MODEL))


def image_data_url(path: str | Path) -> str:
    """Inline an image file as a base64 data URL attachment."""
    path = Path(path)
    mime = mimetypes.guess_type(path.name)[0] or "image/png"
    data = base64.b64encode(path.read_bytes()).decode("ascii")
    return f"data:{mime};base64,{data}"


def text_content(text: str) -> dict:
    return {"type": "text", "text": text}


def image_content(path: str | Path) -> dict:
    return {"type": "image_url", "image_url": {"url": image_data_url(path)}}


class ChatClient:
    """Thin synchronous wrapper over the chat endpoint with transport retries."""

    def __init__(self, cfg: LLMConfig):
        self.cfg = cfg
        headers = {"Content-Type": "application/json"}
        if cfg.api_key:
            headers["Authorization"] = f"Bearer {cfg.api_key}"
        self._client = httpx.Client(
            base_url=cfg.api_base.rstrip("/"), headers=headers, timeout=cfg.timeout
        )

    def complete(self, messages: list[dict]) -> str:
        body = {
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": messages,
        }
        last_error: Exception | None = None
        for _attempt in range(self.cfg.transport_retries + 1):
            try:
                response = self._client.post("/chat/completions", json=body)
                response.raise_for_status()
                data = response.json()
                return data["choices"][0]["message"]["content"]
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as e:
                last_error = e
        raise LLMError(f"chat completion failed after retries: {last_error}")

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ChatClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
