"""Assembling the final image-generation prompt for all five methods and
auditing token-limit violations across them.
"""

from texttiger import PromptMethod, assemble_prompt, audit_prompts, format_audit_table

caption = "The River Nore at Kilkenny"
summary = (
    "The Nore is one of the three sister rivers of the southeast of Ireland, "
    "rising in the Devil's Bit Mountain and flowing through Kilkenny city "
    "beneath its medieval castle."
)
raw_entities = [
    ("Nore", "The Nore is one of the three sister rivers of the southeast of Ireland. " * 12),
    ("Kilkenny", "Kilkenny is a city in County Kilkenny, Ireland, on the River Nore. " * 12),
]

prompts = [
    assemble_prompt(PromptMethod.CAP_ONLY, caption),
    assemble_prompt(PromptMethod.CAP_AUG_ONLY, caption, raw_entities),
    assemble_prompt(PromptMethod.TEXTTIGER_WO_LEN, caption, summary + " " + summary),
    assemble_prompt(PromptMethod.TEXTTIGER, caption, summary),
    assemble_prompt(PromptMethod.ITERATIVE_TEXTTIGER, caption, summary),
]

for prompt in prompts:
    flags = []
    if prompt.truncated_at_clip:
        flags.append("over CLIP 77")
    if prompt.truncated_at_t5:
        flags.append("over T5 256")
    print(f"{prompt.method.value:22s} {prompt.token_count:4d} tokens  {', '.join(flags) or 'fits'}")

print("\ncaption-only prompt:")
print(" ", prompts[0].text)
print("\nrefined prompt (caption kept verbatim, summary in the Note section):")
for line in prompts[3].text.splitlines():
    print(" ", line)

# The audit groups by method and counts prompts above the limit, mirroring
# the per-method mean/violation accounting used to compare the approaches.
print()
print(format_audit_table(audit_prompts(prompts, limit=256, clip_limit=77)))
