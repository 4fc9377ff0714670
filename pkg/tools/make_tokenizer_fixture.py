"""Regenerate the tokenizer conformance fixture from a reference implementation.

The committed fixture (tests/fixtures/tokenizer_reference.json) is frozen;
this tool exists to re-derive it if the corpus changes. It uses the CLIP
tokenizer from `transformers` (Rust `tokenizers` backend) built offline from
the vendored vocabulary files, so it needs no network.

Usage:
    python3 tools/make_tokenizer_fixture.py \
        --corpus tests/fixtures/corpus.json \
        --out tests/fixtures/tokenizer_reference.json

The corpus is a JSON list of strings. The output is a JSON list of
{"text": ..., "ids": [...]} records with ids from the reference tokenizer,
without begin/end specials.
"""

import argparse
import json
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
DATA = REPO / "src" / "texttiger" / "data"


def reference_tokenizer():
    from transformers import CLIPTokenizer

    with open(DATA / "vocab.json", encoding="utf-8") as f:
        vocab = json.load(f)
    with open(DATA / "merges.txt", encoding="utf-8") as f:
        merges = [tuple(line.split(" ")) for line in f.read().split("\n")[1:] if line]
    return CLIPTokenizer(vocab=vocab, merges=merges)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--corpus", required=True, help="JSON list of strings")
    parser.add_argument("--out", required=True, help="fixture path to write")
    args = parser.parse_args()

    with open(args.corpus, encoding="utf-8") as f:
        corpus = json.load(f)
    tokenizer = reference_tokenizer()
    records = [
        {"text": text, "ids": tokenizer(text, add_special_tokens=False)["input_ids"]}
        for text in corpus
    ]
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(records, f, ensure_ascii=False)
    print(f"{len(records)} strings -> {args.out}")


if __name__ == "__main__":
    main()
