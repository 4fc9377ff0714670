import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for stubserver

from stubserver import StubServer  # noqa: E402

from texttiger import default_vocabulary  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def vocab():
    return default_vocabulary()


@pytest.fixture(scope="session")
def tokenizer_reference():
    with open(FIXTURES / "tokenizer_reference.json", encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture()
def stub():
    with StubServer() as server:
        yield server


def golden(name: str) -> str:
    with open(FIXTURES / "golden" / name, encoding="utf-8", newline="") as f:
        return f.read()
