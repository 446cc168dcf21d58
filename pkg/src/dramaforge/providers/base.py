"""Provider abstraction: role registry, schema firewall, record/replay fixtures.

Every external model sits behind a named role.  Calls go through
:meth:`ProviderRegistry.call`, which hashes the canonicalized request
envelope, consults the fixture store, validates the response through the
caller's parser, and retries schema failures up to the role's budget.  No raw
provider output crosses into domain types without passing a parser.

The request envelope hashed for fixtures is ``{"role", "attempt", "body"}``
— deterministic content only, never timestamps.  The attempt counter is part
of the envelope so that scripted failure-then-success sequences replay
byte-identically.
"""

from __future__ import annotations

import json
import os
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from ..canonical import canonical_bytes, hash_of
from ..errors import FixtureMissError, ProviderError, ProviderSchemaError

ROLES = (
    "text_judge_a",
    "text_judge_b",
    "text_judge_c",
    "decider",
    "writer",
    "embedder",
    "image_gen",
    "video_gen",
    "world_model",
    "geometry_model",
    "trajectory_model",
    "human_model",
    "segmentation_model",
    "vision_judge",
    "audio_judge",
    "web_search",
)

DEFAULT_ATTEMPTS = 3  # initial call plus retries, total


class Provider:
    """A bound model endpoint. Subclasses implement ``handle``."""

    def handle(self, body: dict) -> dict:
        raise NotImplementedError


@dataclass
class Binding:
    provider: Provider
    attempts: int = DEFAULT_ATTEMPTS
    timeout_s: float = 120.0


class FixtureStore:
    """request-hash -> canned-response cache under ``fixtures/<role>/<hash>.json``."""

    MODES = ("record", "replay", "strict_replay")

    def __init__(self, root: str | Path, mode: str = "replay"):
        if mode not in self.MODES:
            raise ValueError(f"unknown fixture mode {mode!r}")
        self.root = Path(root)
        self.mode = mode

    def _path(self, role: str, request_hash: str) -> Path:
        return self.root / role / f"{request_hash}.json"

    def get(self, role: str, request_hash: str) -> Optional[dict]:
        path = self._path(role, request_hash)
        if path.exists():
            with open(path, "rb") as fh:
                return json.loads(fh.read().decode("utf-8"))["response"]
        if self.mode == "strict_replay":
            raise FixtureMissError(role, request_hash)
        return None

    def put(self, role: str, request_hash: str, envelope: dict, response: dict) -> None:
        if self.mode == "strict_replay":
            return
        path = self._path(role, request_hash)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {"request": envelope, "response": response}
        with open(path, "wb") as fh:
            fh.write(canonical_bytes(payload))


class ProviderRegistry:
    """Binds roles to providers and mediates every call."""

    def __init__(self, fixtures: Optional[FixtureStore] = None):
        self._bindings: dict[str, Binding] = {}
        self.fixtures = fixtures
        self.recorder: Optional[Callable[[str, str, str], None]] = None

    def bind(self, role: str, provider: Provider, attempts: int = DEFAULT_ATTEMPTS) -> None:
        if role not in ROLES:
            raise ValueError(f"unknown provider role {role!r}")
        self._bindings[role] = Binding(provider, attempts=attempts)

    def bound_roles(self) -> list[str]:
        return sorted(self._bindings)

    def provider(self, role: str) -> Provider:
        return self._binding(role).provider

    def _binding(self, role: str) -> Binding:
        try:
            return self._bindings[role]
        except KeyError:
            raise ProviderError(f"role {role!r} is not bound") from None

    def call(self, role: str, body: dict, parse: Optional[Callable[[dict], object]] = None):
        """Call a role with schema validation and per-role retry budget.

        ``parse`` turns the raw response dict into a domain value and raises
        ``ProviderSchemaError`` (or ValueError/KeyError/TypeError) on contract
        violations; the call is retried with a fresh attempt counter until the
        budget is exhausted.
        """
        binding = self._binding(role)
        last_err: Optional[Exception] = None
        for attempt in range(binding.attempts):
            envelope = {"role": role, "attempt": attempt, "body": body}
            request_hash = hash_of(envelope)
            response = None
            if self.fixtures is not None:
                response = self.fixtures.get(role, request_hash)
            if response is None:
                response = binding.provider.handle(dict(body, _attempt=attempt))
                if self.fixtures is not None:
                    self.fixtures.put(role, request_hash, envelope, response)
            if self.recorder is not None:
                self.recorder(role, request_hash, hash_of(response))
            if parse is None:
                return response
            try:
                return parse(response)
            except (ProviderSchemaError, ValueError, KeyError, TypeError) as err:
                last_err = err
        raise ProviderSchemaError(
            f"{role}: response failed validation after {binding.attempts} attempts: {last_err}"
        )


class ChatCompletionProvider(Provider):
    """Generic chat-completion HTTP adapter.

    Sends ``{"model", "messages"}`` to an OpenAI-style endpoint and expects
    the assistant message content to be a strict-JSON document.  Model names
    and endpoints are configuration, never architecture.
    """

    def __init__(self, endpoint: str, model: str, api_key: str = "", timeout_s: float = 120.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout_s = timeout_s

    def handle(self, body: dict) -> dict:
        prompt = body.get("prompt", "")
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": prompt},
                {"role": "user", "content": json.dumps(body.get("payload", {}), ensure_ascii=False)},
            ],
        }
        req = urllib.request.Request(
            self.endpoint,
            data=json.dumps(payload).encode("utf-8"),
            headers={
                "Content-Type": "application/json",
                **({"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}),
            },
        )
        with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
            reply = json.loads(resp.read().decode("utf-8"))
        content = reply["choices"][0]["message"]["content"]
        try:
            return json.loads(content)
        except json.JSONDecodeError as err:
            raise ProviderSchemaError(f"non-JSON model output: {err}") from err


def _interpolate_env(value: str) -> str:
    # ${VAR} substitution for credentials in config files
    out = value
    for key, val in os.environ.items():
        out = out.replace("${" + key + "}", val)
    return out


def load_role_config(path: str | Path) -> dict[str, dict]:
    """Read a role->endpoint config file with env-var interpolation.

    Format: JSON object mapping role name to ``{"endpoint", "model",
    "api_key", "attempts"}``.  Every role must be bound exactly once.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    seen = set()
    out = {}
    for role, cfg in raw.items():
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r} in config")
        if role in seen:
            raise ValueError(f"role {role!r} bound twice")
        seen.add(role)
        out[role] = {
            k: (_interpolate_env(v) if isinstance(v, str) else v) for k, v in cfg.items()
        }
    return out


def registry_from_config(path: str | Path, fixtures: Optional[FixtureStore] = None) -> ProviderRegistry:
    registry = ProviderRegistry(fixtures=fixtures)
    for role, cfg in load_role_config(path).items():
        provider = ChatCompletionProvider(
            endpoint=cfg["endpoint"],
            model=cfg.get("model", ""),
            api_key=cfg.get("api_key", ""),
            timeout_s=cfg.get("timeout_s", 120.0),
        )
        registry.bind(role, provider, attempts=cfg.get("attempts", DEFAULT_ATTEMPTS))
    return registry
