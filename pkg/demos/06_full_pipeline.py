"""The whole pipeline end to end against in-process stub services:

    build-dataset -> summarize -> assemble -> generate -> audit -> evaluate

No network, no models: the stub plays Wikipedia, the chat-completion
service, and the image backend. Swap the endpoints for real services and the
commands are identical.
"""

import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

import numpy as np
from stubserver import TINY_PNG, StubServer

from texttiger.cli import main
from texttiger.featureio import write_features

with StubServer() as stub, tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "run"

    # --- stub world: two articles, two reachable images, canned completions
    stub.state.images["nore.png"] = TINY_PNG
    stub.state.images["castle.png"] = TINY_PNG
    stub.state.wiki_pages.update({
        "Nore": {"pageid": 1, "title": "Nore",
                 "extract": "The Nore is one of the three sister rivers of the southeast of Ireland."},
        "Kilkenny": {"pageid": 2, "title": "Kilkenny",
                     "extract": "Kilkenny is a city in County Kilkenny, Ireland, on the River Nore."},
    })
    stub.state.completions = [
        "SummaryStart: The Nore flows through Kilkenny city. <SummaryEnd>",
        "SummaryStart: Kilkenny, a medieval city on the Nore. <SummaryEnd>",
    ]

    rows = Path(tmp) / "rows.jsonl"
    rows.write_text(
        "\n".join(
            json.dumps(row)
            for row in [
                {"caption": "The River Nore at Kilkenny",
                 "image_ref": stub.image_url("nore.png"),
                 "entity_urls": [stub.base_url + "/wiki/Nore", stub.base_url + "/wiki/Kilkenny"]},
                {"caption": "Kilkenny Castle in the evening",
                 "image_ref": stub.image_url("castle.png"),
                 "entity_urls": [stub.base_url + "/wiki/Kilkenny"]},
            ]
        ) + "\n",
        encoding="utf-8",
    )

    steps = [
        ["build-dataset", "--wit-rows", str(rows),
         "--api-url", stub.wiki_api_url, "--output-dir", str(out)],
        ["summarize", "--dataset", str(out / "dataset.jsonl"), "--method", "texttiger",
         "--llm-endpoint", stub.llm_base_url, "--model", "demo-model", "--output-dir", str(out)],
        ["assemble", "--dataset", str(out / "dataset.jsonl"), "--method", "texttiger",
         "--summaries", str(out / "summaries-texttiger.jsonl"), "--output-dir", str(out)],
        ["assemble", "--dataset", str(out / "dataset.jsonl"), "--method", "cap-only",
         "--output-dir", str(out)],
        ["generate", "--prompts", str(out / "prompts-texttiger.jsonl"),
         "--backend-url", stub.generate_url, "--model", "demo-image-model",
         "--output-dir", str(out)],
        ["audit", "--prompts", str(out / "prompts-cap-only.jsonl"),
         "--prompts", str(out / "prompts-texttiger.jsonl"),
         "--clip-column", "--output-dir", str(out)],
    ]
    for argv in steps:
        print(f"\n$ texttiger {' '.join(argv)}")
        code = main(argv)
        assert code == 0, f"step failed: {argv[0]}"

    # evaluate needs feature files; in production the extractor writes them.
    rng = np.random.default_rng(7)
    write_features(out / "labels.tfv1", rng.dirichlet(np.ones(10), size=32), kind="label_dist")
    write_features(out / "real.tfv1", rng.normal(size=(64, 16)), kind="pool_features")
    write_features(out / "gen.tfv1", rng.normal(loc=0.2, size=(64, 16)), kind="pool_features")
    emb = rng.normal(size=(32, 24))
    write_features(out / "clip_gen.tfv1", emb + 0.05 * rng.normal(size=emb.shape), kind="clip_img")
    write_features(out / "clip_txt.tfv1", emb, kind="clip_txt")
    write_features(out / "clip_real.tfv1", emb + 0.2 * rng.normal(size=emb.shape), kind="clip_img")
    argv = ["evaluate",
            "--label-dists", str(out / "labels.tfv1"),
            "--real-features", str(out / "real.tfv1"),
            "--gen-features", str(out / "gen.tfv1"),
            "--clip-gen", str(out / "clip_gen.tfv1"),
            "--clip-txt", str(out / "clip_txt.tfv1"),
            "--clip-real", str(out / "clip_real.tfv1"),
            "--output-dir", str(out)]
    print(f"\n$ texttiger {' '.join(argv)}")
    assert main(argv) == 0

    print("\noutputs under the run directory:")
    for path in sorted(out.rglob("*")):
        if path.is_file():
            print("  ", path.relative_to(out))
