"""Speech synthesis client for narration text.

All TTS network traffic in the package goes through synthesize(). The
endpoint is any HTTP service accepting POST {"text", "voice", "format"}
and answering with audio bytes; the response Content-Type header is
authoritative. Clips are cached in-process, keyed by a digest of the
voice configuration and the text.
"""

from __future__ import annotations

import hashlib
import os
import threading
from dataclasses import dataclass
from typing import Optional

import requests

from .errors import FeatureDisabled, TTSUnavailable

ENDPOINT_ENV = "TTS_ENDPOINT"
VOICE_ENV = "TTS_VOICE"
FORMAT_ENV = "TTS_FORMAT"

DEFAULT_FORMAT = "mp3"


@dataclass(frozen=True)
class TTSConfig:
    endpoint: Optional[str] = None
    voice: str = ""
    audio_format: str = DEFAULT_FORMAT

    @classmethod
    def from_env(cls) -> "TTSConfig":
        return cls(
            endpoint=os.environ.get(ENDPOINT_ENV) or None,
            voice=os.environ.get(VOICE_ENV, ""),
            audio_format=os.environ.get(FORMAT_ENV) or DEFAULT_FORMAT,
        )

    @property
    def enabled(self) -> bool:
        return bool(self.endpoint)


@dataclass(frozen=True)
class AudioClip:
    content_type: str
    data: bytes
    text_hash: str


_cache: dict[str, AudioClip] = {}
_cache_lock = threading.Lock()


def text_hash(text: str, config: TTSConfig) -> str:
    """Digest over voice configuration and text; distinct configs never collide."""
    key = "|".join([config.endpoint or "", config.voice, config.audio_format, text])
    return hashlib.sha256(key.encode("utf-8")).hexdigest()


def clear_cache() -> None:
    with _cache_lock:
        _cache.clear()


def synthesize(text: str, config: TTSConfig, timeout_s: float = 30.0) -> AudioClip:
    if not config.enabled:
        raise FeatureDisabled(
            "Text-to-speech is not configured; set TTS_ENDPOINT to enable it."
        )
    if not text:
        raise ValueError("text must be nonempty")

    key = text_hash(text, config)
    cached = _cache.get(key)
    if cached is not None:
        return cached

    try:
        response = requests.post(
            config.endpoint,
            json={"text": text, "voice": config.voice, "format": config.audio_format},
            timeout=timeout_s,
        )
    except requests.RequestException as exc:
        raise TTSUnavailable(f"Text-to-speech request failed: {exc}") from exc
    if response.status_code != 200:
        raise TTSUnavailable(
            f"Text-to-speech endpoint answered with status {response.status_code}."
        )
    body = response.content
    if not body:
        raise TTSUnavailable("Text-to-speech endpoint returned an empty body.")

    clip = AudioClip(
        content_type=response.headers.get("Content-Type", "application/octet-stream"),
        data=body,
        text_hash=key,
    )
    with _cache_lock:
        return _cache.setdefault(key, clip)
