"""Regenerates the committed fixtures: the seed core snapshot and the
golden outputs of the end-to-end tourism run.

Run from the repository root:

    python3 tests/gen_fixtures.py
"""

import contextlib
import io
import shutil
import tempfile
from pathlib import Path

from ontoready.cli import main
from ontoready.core import KnowledgeCore

FIXTURES = Path(__file__).parent / "fixtures"


def build_seed_core() -> KnowledgeCore:
    """A small core for the tourism fixtures: a space subtree under `place`,
    a time subtree under `time period`, and a handful of domain concepts."""
    core = KnowledgeCore()
    core.ensure_language("en")

    def concept(parents, gloss, words):
        gid = core.create_concept(frozenset(parents), gloss)
        for rank, word in enumerate(words, start=1):
            core.attach_sense(gid, "en", word, rank)
        core.set_synset_gloss(gid, "en", gloss)
        return gid

    entity = concept([], "anything that can be talked about", ["entity"])
    place = concept([entity], "an entity with a fixed location on earth", ["place"])
    concept([place], "a city in the italian alps", ["Trento"])
    period = concept([entity], "an entity that spans an extent of time", ["time period"])
    concept([period], "a recurring time period of the year", ["season"])
    facility = concept([entity], "an entity equipped to serve tourists", ["facility"])
    concept([facility], "a facility where guests stay overnight", ["accommodation", "lodging"])
    concept([facility], "a facility that prepares and serves meals", ["restaurant"])
    concept([entity], "food prepared and served on one occasion", ["meal"])
    concept([entity], "the action of making something available", ["offers"])
    concept([entity], "a person who travels for pleasure", ["tourist"])
    return core


def write_seed_snapshot() -> None:
    target = FIXTURES / "workspace" / "core.snapshot"
    build_seed_core().persist(target)
    print(f"wrote {target}")


def write_goldens() -> None:
    """Replay the full command sequence on a scratch workspace and copy the
    stable outputs into fixtures/golden/."""
    golden = FIXTURES / "golden"
    with tempfile.TemporaryDirectory() as scratch:
        ws = Path(scratch)
        (ws / "catalog").mkdir()
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

        def run(*argv) -> str:
            out = io.StringIO()
            with contextlib.redirect_stdout(out):
                code = main(["--workspace", str(ws), *argv])
            assert code == 0, (argv, out.getvalue())
            return out.getvalue()

        run("annotate", str(ws / "catalog" / "tourism.ttl"),
            "--decisions", str(ws / "decisions" / "tourism.tsv"))
        shutil.copy(ws / "sheets" / "tourism.csv", golden / "tourism-sheet.csv")
        run("sheet", "import", str(ws / "sheets" / "tourism.csv"))
        staged = run("cq", "run", str(ws / "cqs" / "tourism.cqs"),
                     "--decisions", str(ws / "decisions"))
        (golden / "staged.txt").write_text(staged, encoding="utf-8")
        run("etg", "formalize")
        ground = run("ground")
        (golden / "ground.txt").write_text(ground, encoding="utf-8")
        run("export")
        shutil.copy(ws / "models" / "tourism.ttl", golden / "domain.ttl")
    for name in ("tourism-sheet.csv", "staged.txt", "ground.txt", "domain.ttl"):
        print(f"wrote {golden / name}")


if __name__ == "__main__":
    write_seed_snapshot()
    write_goldens()
