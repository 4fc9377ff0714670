"""Counting CLIP tokens and checking prompt budgets.

This walks the length machinery everything else is built on:
- exact BPE token counts (same ids as the published CLIP tokenizer)
- the three limits in play: 77 (CLIP window), 256 (T5 window), and the
  180-token summary budget carved out of the T5 window
"""

from texttiger import TokenBudget, check_budget, count_tokens, default_vocabulary, encode

vocab = default_vocabulary()
print(f"vocabulary: {len(vocab.encoder):,} tokens, {len(vocab.merges):,} merges\n")

captions = [
    "The River Nore at Kilkenny",
    "Davenport as viewed from Credit Island",
    "Former seat of the Constitutional Court at Lord Rattanathibet's Mansion on Phahurat Road.",
]

for caption in captions:
    ids = encode(caption, vocab)
    print(f"{caption!r}")
    print(f"  ids    : {ids}")
    print(f"  tokens : {len(ids)}\n")

# Counting is case- and whitespace-insensitive, like the encoder itself.
print("count('HELLO  World') ==", count_tokens("HELLO  World"), "== count('hello world') ==",
      count_tokens("hello world"))

# Budget checks are inclusive at the limit and report the excess beyond it.
budget = TokenBudget()
print(f"\nlimits: clip={budget.clip_limit} t5={budget.t5_limit} summary={budget.summary_budget}")
for tokens in (180, 181, 487):
    status = check_budget(tokens, budget.summary_budget)
    if status.within:
        print(f"  {tokens} tokens vs {budget.summary_budget}: within budget")
    else:
        print(f"  {tokens} tokens vs {budget.summary_budget}: over by {status.excess}")

# A long concatenation blows straight through the T5 window; the counter
# never truncates, it just reports the real length so audits stay honest.
wall_of_text = " ".join(["an encyclopedic description of the entity"] * 70)
tokens = count_tokens(wall_of_text)
status = check_budget(tokens, budget.t5_limit)
print(f"\nraw augmentation: {tokens} tokens, exceeds the T5 window by {status.excess}")
