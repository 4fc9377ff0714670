import json

import pytest

from conftest import golden
from stubserver import TINY_PNG

from texttiger import count_tokens
from texttiger.errors import GenError, MissingDescription
from texttiger.promptgen import (
    AssembledPrompt,
    ImageGenClient,
    ImageGenRequest,
    PromptMethod,
    assemble_prompt,
    generate_image,
    render_bullet_list,
)
from texttiger.tokenizer import TokenBudget

CAPTION = "The River Nore at Kilkenny"
NOTE = (
    "The Nore is one of the three sister rivers of the southeast of Ireland, "
    "flowing through Kilkenny city."
)
BULLETS = [
    ("Nore", "The Nore is one of the three sister rivers of the southeast of Ireland."),
    ("Kilkenny", "Kilkenny is a city in County Kilkenny, Ireland, on the River Nore."),
]


class TestAssemblePrompt:
    def test_cap_only_matches_golden(self):
        prompt = assemble_prompt(PromptMethod.CAP_ONLY, CAPTION)
        assert prompt.text == golden("image_prompt_cap_only.txt")

    def test_note_layout_matches_golden(self):
        prompt = assemble_prompt(PromptMethod.TEXTTIGER, CAPTION, NOTE)
        assert prompt.text == golden("image_prompt_with_note.txt")

    def test_bullet_list_matches_golden(self):
        prompt = assemble_prompt(PromptMethod.CAP_AUG_ONLY, CAPTION, BULLETS)
        assert prompt.text == golden("image_prompt_bullets.txt")

    def test_bullet_rendering(self):
        assert render_bullet_list([("E1", "D1"), ("E2", "D2")]) == "- E1: D1\n- E2: D2"

    def test_cap_only_has_no_note(self):
        prompt = assemble_prompt(PromptMethod.CAP_ONLY, CAPTION)
        assert "Note:" not in prompt.text

    def test_caption_preserved_verbatim_in_all_methods(self):
        for method in PromptMethod:
            description = None if method is PromptMethod.CAP_ONLY else NOTE
            prompt = assemble_prompt(method, CAPTION, description)
            assert CAPTION in prompt.text

    def test_missing_description_rejected(self):
        for method in PromptMethod:
            if method is PromptMethod.CAP_ONLY:
                continue
            with pytest.raises(MissingDescription):
                assemble_prompt(method, CAPTION)
            with pytest.raises(MissingDescription):
                assemble_prompt(method, CAPTION, [])

    def test_empty_caption_rejected(self):
        with pytest.raises(ValueError):
            assemble_prompt(PromptMethod.CAP_ONLY, "")

    def test_token_count_matches_tokenizer(self, vocab):
        prompt = assemble_prompt(PromptMethod.TEXTTIGER, CAPTION, NOTE)
        assert prompt.token_count == count_tokens(prompt.text, vocab)

    def test_truncation_flags(self):
        short = assemble_prompt(PromptMethod.TEXTTIGER, "a caption", "a note")
        assert not short.truncated_at_clip and not short.truncated_at_t5

        medium = assemble_prompt(PromptMethod.TEXTTIGER, "hello " * 40, "hello " * 40)
        assert medium.truncated_at_clip and not medium.truncated_at_t5

        long = assemble_prompt(PromptMethod.CAP_AUG_ONLY, "hello " * 40, [("E", "hello " * 250)])
        assert long.truncated_at_clip and long.truncated_at_t5

    def test_flags_are_pure_functions_of_count_and_budget(self):
        budget = TokenBudget(clip_limit=5, t5_limit=10, summary_budget=8)
        prompt = assemble_prompt(PromptMethod.TEXTTIGER, "hello " * 4, "hello " * 3, budget=budget)
        assert prompt.truncated_at_clip == (prompt.token_count > 5)
        assert prompt.truncated_at_t5 == (prompt.token_count > 10)

    def test_compliant_summary_and_short_caption_fit_t5(self):
        # caption + summary + the 4 scaffold tokens ("Caption", ":", "Note", ":")
        # stay within 256 whenever caption_tokens + summary_tokens <= 252
        caption = ("hello " * 72).strip()
        summary = ("hello " * 180).strip()
        prompt = assemble_prompt(PromptMethod.TEXTTIGER, caption, summary)
        assert prompt.token_count == 72 + 180 + 4
        assert not prompt.truncated_at_t5


class TestImageGenRequest:
    def test_defaults(self):
        request = ImageGenRequest(prompt="p")
        assert request.seed == 42
        assert request.guidance_scale == 3.5
        assert request.steps == 50
        assert (request.width, request.height) == (1024, 1024)
        assert request.max_sequence_length == 512

    def test_body_fields(self):
        body = ImageGenRequest(prompt="p").to_body("model-x")
        assert body == {
            "prompt": "p",
            "seed": 42,
            "guidance_scale": 3.5,
            "num_steps": 50,
            "width": 1024,
            "height": 1024,
            "max_sequence_length": 512,
            "model": "model-x",
        }

    def test_positivity_validation(self):
        with pytest.raises(ValueError):
            ImageGenRequest(prompt="p", steps=0)
        with pytest.raises(ValueError):
            ImageGenRequest(prompt="p", width=0)


class TestGenerateImage:
    def test_stub_round_trip_writes_png(self, stub, tmp_path):
        backend = ImageGenClient(endpoint=stub.generate_url, model="m", out_dir=tmp_path)
        ref = generate_image(ImageGenRequest(prompt="a prompt"), backend)
        with open(ref.image_ref, "rb") as f:
            assert f.read() == TINY_PNG
        assert ref.request["prompt"] == "a prompt"

    def test_request_serialization_golden(self, stub, tmp_path):
        backend = ImageGenClient(endpoint=stub.generate_url, model="m", out_dir=tmp_path)
        generate_image(ImageGenRequest(prompt="a prompt"), backend)
        (body,) = stub.state.recorded("/generate")
        assert body["seed"] == 42
        assert body["guidance_scale"] == 3.5
        assert body["num_steps"] == 50
        assert body["max_sequence_length"] == 512

    def test_backend_failure(self, stub, tmp_path):
        stub.state.generation_status = 503
        backend = ImageGenClient(endpoint=stub.generate_url, model="m", out_dir=tmp_path)
        with pytest.raises(GenError) as err:
            generate_image(ImageGenRequest(prompt="p"), backend)
        assert err.value.status == 503

    def test_unreachable_endpoint(self, tmp_path):
        backend = ImageGenClient(endpoint="http://127.0.0.1:1/generate", out_dir=tmp_path, timeout=0.5)
        with pytest.raises(GenError):
            generate_image(ImageGenRequest(prompt="p"), backend)

    def test_rerun_same_request_same_path(self, stub, tmp_path):
        backend = ImageGenClient(endpoint=stub.generate_url, model="m", out_dir=tmp_path)
        a = generate_image(ImageGenRequest(prompt="p"), backend)
        b = generate_image(ImageGenRequest(prompt="p"), backend)
        assert a.image_ref == b.image_ref

    def test_requires_endpoint(self, monkeypatch):
        monkeypatch.delenv("TEXTTIGER_IMAGE_ENDPOINT", raising=False)
        with pytest.raises(ValueError):
            ImageGenClient()
