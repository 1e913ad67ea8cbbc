from __future__ import annotations

import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from causalfn import corpus as corpus_mod, dsl


@pytest.fixture(scope="session")
def corpus_dir() -> pathlib.Path:
    return corpus_mod.shipped_corpus_dir()


@pytest.fixture(scope="session")
def corpus_models(corpus_dir):
    """All eleven corpus models, parsed once."""
    models = {}
    for path in sorted(corpus_dir.glob("*.cm")):
        parsed = dsl.parse_file(path)
        assert parsed.ok, f"{path.name}: " + "; ".join(
            d.format() for d in parsed.diagnostics)
        models[path.stem] = parsed.model
    return models


def load(corpus_models, name):
    return corpus_models[name]
