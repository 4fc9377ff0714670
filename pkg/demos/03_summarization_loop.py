"""Length-controlled summarization: the three prompt variants and the
iterative retry loop, driven by a scripted stand-in for the LLM.

The scripted client replays canned outputs, so the demo runs offline while
exercising exactly the code the live pipeline uses.
"""

from texttiger import (
    SummarizeConfig,
    SummaryMethod,
    count_tokens,
    params_for_method,
    render_summary_prompt,
    summarize,
)

description = (
    "Davenport is a city in and the county seat of Scott County, Iowa, "
    "United States, located along the Mississippi River on the eastern "
    "border of the state."
)

# The three prompt variants differ only in the leading token-count sentence.
print("=== with explicit count ===")
print(render_summary_prompt(SummaryMethod.WITH_LENGTH, description, count_tokens(description)))
print("\n=== iterative retry wording (first line) ===")
print(render_summary_prompt(SummaryMethod.ITERATIVE, description, 210).splitlines()[0])
print("\n=== no length hint (first line) ===")
print(render_summary_prompt(SummaryMethod.WITHOUT_LENGTH, description).splitlines()[0])


class ScriptedClient:
    """Replays canned completions; stands in for the HTTP client."""

    def __init__(self, outputs):
        self.outputs = list(outputs)

    def complete(self, messages, params):
        return self.outputs.pop(0)


def fake_summary(n_tokens):
    return "SummaryStart: " + "scenic " * n_tokens + "<SummaryEnd>"


# An iterative run that needs all three rounds: 300 -> 200 -> 170 tokens.
config = SummarizeConfig(
    method=SummaryMethod.ITERATIVE,
    llm=params_for_method(SummaryMethod.ITERATIVE, "demo-model"),
)
client = ScriptedClient([fake_summary(300), fake_summary(200), fake_summary(170)])
result = summarize("words " * 400, config, client)
print("\niterative run:")
print(f"  rounds used : {result.iterations_used}")
print(f"  final tokens: {result.token_count} (budget {config.budget.summary_budget})")
print(f"  compliant   : {result.compliant}")

# A stubborn model that never fits: the result still comes back, flagged.
client = ScriptedClient([fake_summary(300)] * 3)
result = summarize("words " * 400, config, client)
print("\nstubborn model:")
print(f"  rounds used : {result.iterations_used}")
print(f"  compliant   : {result.compliant} (kept anyway, and counted as a violation downstream)")
