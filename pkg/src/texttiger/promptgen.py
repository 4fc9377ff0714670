"""Final image-generation prompts for the five method variants, plus the
request contract for an out-of-process generation backend.

Every method keeps the original caption verbatim as the first section; all
but the caption-only baseline append a ``Note:`` section carrying either the
raw entity descriptions (as a bullet list) or a summarized description.
"""

from __future__ import annotations

import base64
import binascii
import enum
import hashlib
import os
from dataclasses import dataclass
from pathlib import Path

import requests

from . import tokenizer
from .errors import GenError, GenTimeout, MissingDescription
from .tokenizer import TokenBudget

DEFAULT_IMAGE_ENDPOINT_ENV = "TEXTTIGER_IMAGE_ENDPOINT"


class PromptMethod(enum.Enum):
    """The five prompt variants: two baselines, three refinement methods."""

    CAP_ONLY = "cap-only"
    CAP_AUG_ONLY = "cap-aug-only"
    TEXTTIGER_WO_LEN = "texttiger-wo-len"
    TEXTTIGER = "texttiger"
    ITERATIVE_TEXTTIGER = "iterative-texttiger"


@dataclass(frozen=True)
class AssembledPrompt:
    """A finished prompt with its token count and truncation flags."""

    method: PromptMethod
    text: str
    token_count: int
    truncated_at_t5: bool
    truncated_at_clip: bool


def render_bullet_list(per_entity) -> str:
    """One ``- name: description`` line per entity."""
    return "\n".join(f"- {name}: {description}" for name, description in per_entity)


def assemble_prompt(
    method: PromptMethod,
    caption: str,
    description=None,
    budget: TokenBudget = TokenBudget(),
    vocab=None,
) -> AssembledPrompt:
    """Build the prompt text for one method and measure it.

    The caption-only baseline emits just ``Caption: {caption}``; every other
    method appends a blank line and ``Note: {description}``. ``description``
    is a string, or a sequence of (entity, description) pairs which is
    rendered as a bullet list (the augmentation-only baseline's format).
    Truncation flags compare the token count against the T5 and CLIP limits.
    """
    if not caption:
        raise ValueError("caption must be nonempty")
    if method is PromptMethod.CAP_ONLY:
        text = f"Caption: {caption}"
    else:
        if description is None or (not isinstance(description, str) and not description):
            raise MissingDescription(f"{method.value} requires a description")
        note = description if isinstance(description, str) else render_bullet_list(description)
        if not note:
            raise MissingDescription(f"{method.value} requires a nonempty description")
        text = f"Caption: {caption}\n\nNote: {note}"
    count = tokenizer.count_tokens(text, vocab)
    return AssembledPrompt(
        method=method,
        text=text,
        token_count=count,
        truncated_at_t5=count > budget.t5_limit,
        truncated_at_clip=count > budget.clip_limit,
    )


@dataclass(frozen=True)
class ImageGenRequest:
    """Generation request with the pipeline's fixed sampling settings."""

    prompt: str
    seed: int = 42
    guidance_scale: float = 3.5
    steps: int = 50
    width: int = 1024
    height: int = 1024
    max_sequence_length: int = 512

    def __post_init__(self):
        if self.steps <= 0 or self.width <= 0 or self.height <= 0:
            raise ValueError("steps, width, and height must be positive")

    def to_body(self, model: str) -> dict:
        return {
            "prompt": self.prompt,
            "seed": self.seed,
            "guidance_scale": self.guidance_scale,
            "num_steps": self.steps,
            "width": self.width,
            "height": self.height,
            "max_sequence_length": self.max_sequence_length,
            "model": model,
        }


@dataclass(frozen=True)
class GeneratedImageRef:
    """Where the produced image landed, plus the request for provenance."""

    image_ref: str
    request: dict


class ImageGenClient:
    """JSON-over-HTTP client for an image-generation service.

    POSTs the request body to the endpoint and expects ``{"image": ...}``
    holding either a path/URL or base64 PNG bytes; base64 responses are
    decoded into ``out_dir``.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        model: str = "",
        out_dir=None,
        timeout: float = 300.0,
        session: requests.Session | None = None,
    ):
        endpoint = endpoint or os.environ.get(DEFAULT_IMAGE_ENDPOINT_ENV)
        if not endpoint:
            raise ValueError(
                f"no endpoint: pass endpoint or set {DEFAULT_IMAGE_ENDPOINT_ENV}"
            )
        self.endpoint = endpoint
        self.model = model
        self.out_dir = Path(out_dir) if out_dir else Path.cwd()
        self.timeout = timeout
        self.session = session or requests.Session()

    def generate(self, request: ImageGenRequest) -> GeneratedImageRef:
        body = request.to_body(self.model)
        try:
            response = self.session.post(self.endpoint, json=body, timeout=self.timeout)
        except requests.Timeout as exc:
            raise GenTimeout(f"generation timed out after {self.timeout}s") from exc
        except requests.RequestException as exc:
            raise GenError(f"generation request failed: {exc}") from exc
        if response.status_code >= 400:
            raise GenError(
                f"backend returned {response.status_code}", status=response.status_code
            )
        try:
            image = response.json()["image"]
        except (ValueError, KeyError) as exc:
            raise GenError(f"malformed backend response: {exc}") from exc
        return GeneratedImageRef(image_ref=self._materialize(image, body), request=body)

    def _materialize(self, image: str, body: dict) -> str:
        if image.startswith(("http://", "https://", "file://", "/", "./")):
            return image
        try:
            data = base64.b64decode(image, validate=True)
        except (binascii.Error, ValueError):
            return image  # a relative path
        digest = hashlib.sha1(
            f"{body['prompt']}|{body['seed']}|{body['model']}".encode()
        ).hexdigest()[:16]
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / f"gen-{digest}.png"
        path.write_bytes(data)
        return str(path)


def generate_image(request: ImageGenRequest, backend: ImageGenClient) -> GeneratedImageRef:
    """Submit one generation request and return the produced image reference."""
    return backend.generate(request)
