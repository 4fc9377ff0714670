"""Entity augmentation and length-controlled LLM summarization.

Step one gathers the descriptions of the entities matched in a caption into
one augmented text. Step two asks an LLM to compress that text under the
summary token budget, with three variants: no length hint, an explicit
current-token count, and an iterative loop that re-asks (up to three rounds
by default) while the output still overshoots the budget. Model output must
wrap the summary in ``SummaryStart:`` / ``<SummaryEnd>`` markers; the text
between them is extracted and re-counted each round.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass

import requests

from . import tokenizer
from .errors import (
    LlmError,
    LlmTimeout,
    MalformedSummary,
    MissingTokenCount,
    SummaryError,
)
from .tokenizer import TokenBudget
from .witcub import WitCubInstance, match_entities

START_MARKER = "SummaryStart:"
END_MARKER = "<SummaryEnd>"

DEFAULT_LLM_ENDPOINT_ENV = "TEXTTIGER_LLM_ENDPOINT"
DEFAULT_LLM_API_KEY_ENV = "TEXTTIGER_LLM_API_KEY"


class SummaryMethod(enum.Enum):
    """The three summarization variants."""

    WITHOUT_LENGTH = "without-length"
    WITH_LENGTH = "with-length"
    ITERATIVE = "iterative"


_COUNT_SENTENCES = {
    SummaryMethod.WITHOUT_LENGTH: None,
    SummaryMethod.WITH_LENGTH: "The current tokens are {} tokens.",
    SummaryMethod.ITERATIVE: "The current tokens are still {} tokens.",
}

_EXAMPLE_SUBJECTS = {
    SummaryMethod.WITHOUT_LENGTH: "the summary",
    SummaryMethod.WITH_LENGTH: "the prompt",
    SummaryMethod.ITERATIVE: "the prompt",
}


@dataclass(frozen=True)
class AugmentedDescription:
    """Matched entities and their descriptions joined into one text."""

    per_entity: tuple[tuple[str, str], ...]
    joined_text: str


def build_augmentation(instance: WitCubInstance) -> AugmentedDescription:
    """Collect descriptions for the entities matched in the caption.

    Entities appear in caption order; descriptions are joined with one blank
    line. No entities gives an empty joined text.
    """
    matched = match_entities(instance.caption, instance.entities)
    per_entity = tuple((e.name, e.description) for e in matched)
    joined = "\n\n".join(description for _, description in per_entity)
    return AugmentedDescription(per_entity=per_entity, joined_text=joined)


def render_summary_prompt(
    method: SummaryMethod,
    description: str,
    current_tokens: int | None = None,
    target_tokens: int = 180,
) -> str:
    """Render the summarization prompt for one variant.

    The length-aware variants open with the current token count ("are still"
    for the iterative one) and require ``current_tokens``. Every prompt ends
    with a primed ``SummaryStart:`` line.
    """
    if not description:
        raise ValueError("description must be nonempty")
    count_sentence = _COUNT_SENTENCES[method]
    if count_sentence is not None and current_tokens is None:
        raise MissingTokenCount(f"{method.value} prompt needs the current token count")
    lines = []
    if count_sentence is not None:
        lines.append(count_sentence.format(current_tokens))
    lines += [
        f"Please generate a summary so that there are {target_tokens} tokens.",
        "However, please do not delete proper nouns or other important information.",
        "Please begin the output with SummaryStart: and write the summary of the text.",
        "Please end the output with <SummaryEnd> as the last token.",
        "",
        "Example:",
        "SummaryStart: The summary of the text is as follows. "
        f"The text is about {_EXAMPLE_SUBJECTS[method]} of the text. <SummaryEnd>",
        "",
        "Complement:",
        description,
        "",
        START_MARKER,
    ]
    return "\n".join(lines)


def extract_summary(llm_output: str) -> str:
    """Text between the first start marker and the first end marker after it.

    Output that continues straight from the primed ``SummaryStart:`` (so the
    literal marker is absent) is treated as starting at offset zero. A
    missing end marker raises MalformedSummary.
    """
    start = llm_output.find(START_MARKER)
    begin = start + len(START_MARKER) if start != -1 else 0
    end = llm_output.find(END_MARKER, begin)
    if end == -1:
        raise MalformedSummary(f"no {END_MARKER} in model output")
    return llm_output[begin:end].strip()


@dataclass(frozen=True)
class LlmParams:
    """Completion request parameters."""

    model_name: str
    seed: int = 0
    max_output_tokens: int = 180
    temperature: float = 0.0

    def __post_init__(self):
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


def params_for_method(method: SummaryMethod, model_name: str, seed: int = 0) -> LlmParams:
    """Per-method defaults: 512 output tokens without a length hint, 180 with."""
    limit = 512 if method is SummaryMethod.WITHOUT_LENGTH else 180
    return LlmParams(model_name=model_name, seed=seed, max_output_tokens=limit)


@dataclass(frozen=True)
class SummarizeConfig:
    method: SummaryMethod
    llm: LlmParams
    budget: TokenBudget = TokenBudget()
    max_iterations: int = 3

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class SummaryResult:
    """A budget-checked summary with its audit trail."""

    text: str
    token_count: int
    iterations_used: int
    compliant: bool
    raw_outputs: tuple[str, ...]


class LlmClient:
    """Chat-completion JSON-over-HTTP client (OpenAI-style contract).

    POSTs {model, messages, max_tokens, seed, temperature} and reads
    choices[0].message.content. Transient failures (5xx, connection errors,
    timeouts) get one retry; auth-style 4xx responses fail immediately.
    """

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        timeout: float = 120.0,
        session: requests.Session | None = None,
    ):
        base_url = base_url or os.environ.get(DEFAULT_LLM_ENDPOINT_ENV)
        if not base_url:
            raise ValueError(
                f"no endpoint: pass base_url or set {DEFAULT_LLM_ENDPOINT_ENV}"
            )
        self.url = base_url.rstrip("/") + "/chat/completions"
        self.api_key = api_key or os.environ.get(DEFAULT_LLM_API_KEY_ENV)
        self.timeout = timeout
        self.session = session or requests.Session()

    def complete(self, messages, params: LlmParams) -> str:
        body = {
            "model": params.model_name,
            "messages": list(messages),
            "max_tokens": params.max_output_tokens,
            "seed": params.seed,
            "temperature": params.temperature,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last: LlmError | None = None
        for attempt in range(2):
            try:
                response = self.session.post(
                    self.url, json=body, headers=headers, timeout=self.timeout
                )
            except requests.Timeout:
                last = LlmTimeout(f"completion request timed out after {self.timeout}s")
                continue
            except requests.RequestException as exc:
                last = LlmError(f"completion request failed: {exc}")
                continue
            if response.status_code >= 500:
                last = LlmError(
                    f"completion service returned {response.status_code}",
                    status=response.status_code,
                )
                continue
            if response.status_code >= 400:
                raise LlmError(
                    f"completion request rejected: {response.status_code}",
                    status=response.status_code,
                )
            try:
                return response.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError) as exc:
                raise LlmError(f"malformed completion response: {exc}") from exc
        raise last


def llm_complete(messages, params: LlmParams, client) -> str:
    """One completion call; the request carries seed and token limit verbatim."""
    return client.complete(messages, params)


def summarize(description: str, config: SummarizeConfig, client, vocab=None) -> SummaryResult:
    """Summarize a description under the token budget.

    The single-call variants ask once. The iterative variant opens with the
    explicit-count prompt, then re-asks with the "are still N tokens" prompt
    on the previous round's summary while the count exceeds the budget, up
    to ``max_iterations`` rounds, stopping early once compliant. The result
    is returned either way, flagged compliant or not. Rounds whose output
    lacks the end marker are kept in the audit trail and re-asked; if every
    round is malformed, SummaryError carries the raw outputs.
    """
    if not description:
        raise ValueError("description must be nonempty")
    if vocab is None:
        vocab = tokenizer.default_vocabulary()
    budget = config.budget.summary_budget
    rounds = config.max_iterations if config.method is SummaryMethod.ITERATIVE else 1
    current_text = description
    current_count = tokenizer.count_tokens(description, vocab)
    raw_outputs: list[str] = []
    extracted: tuple[str, int] | None = None
    for round_index in range(rounds):
        if config.method is SummaryMethod.ITERATIVE and round_index == 0:
            prompt_method = SummaryMethod.WITH_LENGTH
        else:
            prompt_method = config.method
        prompt = render_summary_prompt(
            prompt_method, current_text, current_count, target_tokens=budget
        )
        raw = llm_complete([{"role": "user", "content": prompt}], config.llm, client)
        raw_outputs.append(raw)
        try:
            text = extract_summary(raw)
        except MalformedSummary:
            continue
        count = tokenizer.count_tokens(text, vocab)
        extracted = (text, count)
        current_text, current_count = text, count
        if count <= budget:
            break
    if extracted is None:
        raise SummaryError(
            f"all {len(raw_outputs)} round(s) produced malformed output", raw_outputs
        )
    text, count = extracted
    return SummaryResult(
        text=text,
        token_count=count,
        iterations_used=len(raw_outputs),
        compliant=count <= budget,
        raw_outputs=tuple(raw_outputs),
    )
