import json
from pathlib import Path

import numpy as np
import pytest

from stubserver import TINY_PNG

from texttiger.cli import main
from texttiger.featureio import write_features


def write_rows(path, stub):
    rows = [
        {
            "caption": "The River Nore at Kilkenny",
            "image_ref": stub.image_url("a.png"),
            "entity_urls": [stub.base_url + "/wiki/Nore", stub.base_url + "/wiki/Kilkenny"],
        },
        {
            "caption": "A broken image row",
            "image_ref": stub.image_url("missing.png"),
            "entity_urls": [stub.base_url + "/wiki/Nore"],
        },
    ]
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")
    return path


def seed_stub(stub):
    stub.state.images["a.png"] = TINY_PNG
    stub.state.wiki_pages.update(
        {
            "Nore": {"pageid": 1, "title": "Nore", "extract": "The Nore is a river in Ireland."},
            "Kilkenny": {"pageid": 2, "title": "Kilkenny", "extract": "Kilkenny is a city in Ireland."},
        }
    )


def build(tmp_path, stub):
    rows = write_rows(tmp_path / "rows.jsonl", stub)
    out_dir = tmp_path / "out"
    code = main(
        [
            "build-dataset",
            "--wit-rows", str(rows),
            "--output-dir", str(out_dir),
            "--api-url", stub.wiki_api_url,
        ]
    )
    assert code == 0
    return out_dir


class TestBuildDataset:
    def test_filters_dead_rows(self, stub, tmp_path, capsys):
        seed_stub(stub)
        out_dir = build(tmp_path, stub)
        lines = (out_dir / "dataset.jsonl").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 2  # header + 1 surviving instance
        assert "1 instances" in capsys.readouterr().out

    def test_rerun_is_byte_identical(self, stub, tmp_path):
        seed_stub(stub)
        out_dir = build(tmp_path, stub)
        first = (out_dir / "dataset.jsonl").read_bytes()
        build(tmp_path, stub)
        assert (out_dir / "dataset.jsonl").read_bytes() == first

    def test_manifest_written(self, stub, tmp_path):
        seed_stub(stub)
        out_dir = build(tmp_path, stub)
        manifest = json.loads((out_dir / "build-dataset-manifest.json").read_text())
        assert manifest["command"] == "build-dataset"
        assert manifest["outputs"] == ["dataset.jsonl"]
        assert "created_at" in manifest

    def test_all_rows_dead_fails(self, stub, tmp_path):
        # no images seeded at all
        stub.state.wiki_pages["Nore"] = {"pageid": 1, "title": "Nore", "extract": "x"}
        rows = write_rows(tmp_path / "rows.jsonl", stub)
        code = main(
            [
                "build-dataset",
                "--wit-rows", str(rows),
                "--output-dir", str(tmp_path / "out"),
                "--api-url", stub.wiki_api_url,
            ]
        )
        assert code == 1


class TestSummarizeAssembleAudit:
    def summarize(self, stub, tmp_path, method="texttiger", script=None):
        seed_stub(stub)
        out_dir = build(tmp_path, stub)
        stub.state.completions = script or ["SummaryStart: A river and a city. <SummaryEnd>"]
        code = main(
            [
                "summarize",
                "--dataset", str(out_dir / "dataset.jsonl"),
                "--method", method,
                "--llm-endpoint", stub.llm_base_url,
                "--model", "stub-model",
                "--output-dir", str(out_dir),
            ]
        )
        return code, out_dir

    def test_summarize_writes_records(self, stub, tmp_path):
        code, out_dir = self.summarize(stub, tmp_path)
        assert code == 0
        records = [json.loads(l) for l in (out_dir / "summaries-texttiger.jsonl").read_text().splitlines()]
        assert len(records) == 1
        assert records[0]["compliant"] is True
        assert records[0]["iterations_used"] == 1
        assert records[0]["text"] == "A river and a city."

    def test_summarize_iterative_records_rounds(self, stub, tmp_path):
        long = "SummaryStart: " + "hello " * 300 + "<SummaryEnd>"
        short = "SummaryStart: compact. <SummaryEnd>"
        code, out_dir = self.summarize(
            stub, tmp_path, method="iterative-texttiger", script=[long, short]
        )
        assert code == 0
        record = json.loads((out_dir / "summaries-iterative-texttiger.jsonl").read_text().splitlines()[0])
        assert record["iterations_used"] == 2
        assert record["compliant"] is True
        assert len(record["raw_outputs"]) == 2

    def test_summarize_missing_endpoint(self, stub, tmp_path, monkeypatch):
        seed_stub(stub)
        monkeypatch.delenv("TEXTTIGER_LLM_ENDPOINT", raising=False)
        out_dir = build(tmp_path, stub)
        code = main(
            [
                "summarize",
                "--dataset", str(out_dir / "dataset.jsonl"),
                "--method", "texttiger",
                "--output-dir", str(out_dir),
            ]
        )
        assert code == 1

    def test_assemble_cap_only(self, stub, tmp_path):
        seed_stub(stub)
        out_dir = build(tmp_path, stub)
        code = main(
            [
                "assemble",
                "--dataset", str(out_dir / "dataset.jsonl"),
                "--method", "cap-only",
                "--output-dir", str(out_dir),
            ]
        )
        assert code == 0
        record = json.loads((out_dir / "prompts-cap-only.jsonl").read_text().splitlines()[0])
        assert record["text"] == "Caption: The River Nore at Kilkenny"

    def test_assemble_cap_aug_only_bullets(self, stub, tmp_path):
        seed_stub(stub)
        out_dir = build(tmp_path, stub)
        code = main(
            [
                "assemble",
                "--dataset", str(out_dir / "dataset.jsonl"),
                "--method", "cap-aug-only",
                "--output-dir", str(out_dir),
            ]
        )
        assert code == 0
        record = json.loads((out_dir / "prompts-cap-aug-only.jsonl").read_text().splitlines()[0])
        assert "Note: - Nore: The Nore is a river in Ireland." in record["text"]

    def test_assemble_texttiger_needs_summaries(self, stub, tmp_path):
        seed_stub(stub)
        out_dir = build(tmp_path, stub)
        code = main(
            [
                "assemble",
                "--dataset", str(out_dir / "dataset.jsonl"),
                "--method", "texttiger",
                "--output-dir", str(out_dir),
            ]
        )
        assert code == 1

    def test_audit_table_shape(self, stub, tmp_path, capsys):
        code, out_dir = self.summarize(stub, tmp_path)
        assert code == 0
        assert main(
            [
                "assemble",
                "--dataset", str(out_dir / "dataset.jsonl"),
                "--method", "texttiger",
                "--summaries", str(out_dir / "summaries-texttiger.jsonl"),
                "--output-dir", str(out_dir),
            ]
        ) == 0
        assert main(
            [
                "audit",
                "--prompts", str(out_dir / "prompts-texttiger.jsonl"),
                "--output-dir", str(out_dir),
            ]
        ) == 0
        out = capsys.readouterr().out
        assert "Avg. # of Tokens" in out
        assert "Num. of Violation" in out
        data = json.loads((out_dir / "audit.json").read_text())
        assert data["limit"] == 256
        assert data["per_method"]["texttiger"]["violations"] == 0


class TestGenerate:
    def test_generate_writes_images(self, stub, tmp_path):
        seed_stub(stub)
        out_dir = build(tmp_path, stub)
        assert main(
            [
                "assemble",
                "--dataset", str(out_dir / "dataset.jsonl"),
                "--method", "cap-only",
                "--output-dir", str(out_dir),
            ]
        ) == 0
        code = main(
            [
                "generate",
                "--prompts", str(out_dir / "prompts-cap-only.jsonl"),
                "--backend-url", stub.generate_url,
                "--model", "stub-image-model",
                "--output-dir", str(out_dir),
            ]
        )
        assert code == 0
        record = json.loads((out_dir / "generations.jsonl").read_text().splitlines()[0])
        assert Path(record["image_ref"]).read_bytes() == TINY_PNG
        assert record["request"]["seed"] == 42
        assert record["request"]["guidance_scale"] == 3.5
        manifest = json.loads((out_dir / "generate-manifest.json").read_text())
        assert any(p.startswith("images/") for p in manifest["outputs"])


class TestEvaluate:
    def write_closed_form_features(self, d):
        real = np.array([[-1.0], [1.0]])           # mean 0, unbiased var 2
        gen = np.array([[1.0 - 2.0], [1.0 + 2.0]])  # mean 1, unbiased var 8
        label = np.full((8, 4), 0.25)
        emb = np.tile(np.array([[3.0, 4.0]]), (5, 1))
        write_features(d / "label.tfv1", label, kind="label_dist")
        write_features(d / "real.tfv1", real, kind="pool_features")
        write_features(d / "gen.tfv1", gen, kind="pool_features")
        write_features(d / "clip_gen.tfv1", emb, kind="clip_img")
        write_features(d / "clip_txt.tfv1", emb, kind="clip_txt")
        write_features(d / "clip_real.tfv1", emb, kind="clip_img")

    def test_closed_form_fixtures(self, tmp_path, capsys):
        self.write_closed_form_features(tmp_path)
        code = main(
            [
                "evaluate",
                "--label-dists", str(tmp_path / "label.tfv1"),
                "--real-features", str(tmp_path / "real.tfv1"),
                "--gen-features", str(tmp_path / "gen.tfv1"),
                "--clip-gen", str(tmp_path / "clip_gen.tfv1"),
                "--clip-txt", str(tmp_path / "clip_txt.tfv1"),
                "--clip-real", str(tmp_path / "clip_real.tfv1"),
                "--output-dir", str(tmp_path),
            ]
        )
        assert code == 0
        report = json.loads((tmp_path / "metrics.json").read_text())
        # real: mean 0 var 2; gen: mean 1 var 8 -> 1 + (sqrt2 - sqrt8)^2 = 3.0
        assert report["fid"] == pytest.approx(1.0 + (2.0**0.5 - 8.0**0.5) ** 2, abs=1e-9)
        assert report["is_mean"] == 1.0
        assert report["clip_txt_img_mean"] == 1.0
        out = capsys.readouterr().out
        assert "IS (up)" in out and "FID (down)" in out


class TestRunConfig:
    def test_config_paths_validated(self, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"dataset_path": "missing.jsonl"}))
        code = main(
            [
                "assemble",
                "--config", str(config),
                "--method", "cap-only",
                "--output-dir", str(tmp_path),
            ]
        )
        assert code == 1

    def test_methods_must_be_known(self, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"methods": ["unknown-method"]}))
        code = main(["audit", "--config", str(config), "--prompts", "x.jsonl", "--output-dir", str(tmp_path)])
        assert code == 1

    def test_flags_override_config(self, stub, tmp_path):
        seed_stub(stub)
        out_dir = build(tmp_path, stub)
        config = tmp_path / "run.json"
        config.write_text(
            json.dumps({"dataset_path": str(out_dir / "dataset.jsonl"), "budget": {"t5_limit": 50, "clip_limit": 10, "summary_budget": 40}})
        )
        assert main(
            [
                "assemble",
                "--config", str(config),
                "--method", "cap-only",
                "--output-dir", str(out_dir),
            ]
        ) == 0
        record = json.loads((out_dir / "prompts-cap-only.jsonl").read_text().splitlines()[0])
        # budget came from the config (t5 limit 50 -> 8-token caption prompt not truncated)
        assert record["truncated_at_t5"] is False
        assert main(
            [
                "audit",
                "--config", str(config),
                "--prompts", str(out_dir / "prompts-cap-only.jsonl"),
                "--output-dir", str(out_dir),
                "--limit", "5",
            ]
        ) == 0
        data = json.loads((out_dir / "audit.json").read_text())
        assert data["limit"] == 5  # flag beat the config's t5_limit
        assert data["per_method"]["cap-only"]["violations"] == 1
