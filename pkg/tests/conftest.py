import shutil
from pathlib import Path

import pytest

from ontoready.core import KnowledgeCore
from ontoready.ontology import parse_ontology

FIXTURES = Path(__file__).parent / "fixtures"

TOURISM_IRI = "http://example.org/onto/tourism"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def catalog_dir() -> Path:
    return FIXTURES / "catalog"


@pytest.fixture
def seed_core() -> KnowledgeCore:
    return KnowledgeCore.load(FIXTURES / "workspace" / "core.snapshot")


@pytest.fixture
def tourism_ontology():
    text = (FIXTURES / "catalog" / "tourism.ttl").read_text(encoding="utf-8")
    return parse_ontology(text, TOURISM_IRI)


@pytest.fixture
def golden_ws(tmp_path):
    """Workspace preloaded with the tourism fixture: core, catalog, decisions, CQs."""
    ws = tmp_path / "ws"
    (ws / "catalog").mkdir(parents=True)
    (ws / "decisions").mkdir()
    (ws / "cqs").mkdir()
    shutil.copy(FIXTURES / "workspace" / "core.snapshot", ws / "core.snapshot")
    for source in (FIXTURES / "catalog").iterdir():
        shutil.copy(source, ws / "catalog" / source.name)
    for source in (FIXTURES / "decisions" / "cq").iterdir():
        shutil.copy(source, ws / "decisions" / source.name)
    for name in ("structure.tsv", "formalize.tsv", "context.tsv", "tourism.tsv"):
        shutil.copy(FIXTURES / "decisions" / name, ws / "decisions" / name)
    shutil.copy(FIXTURES / "cqs" / "tourism.cqs", ws / "cqs" / "tourism.cqs")
    return ws
