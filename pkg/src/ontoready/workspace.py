"""Directory layout and bookkeeping shared by all CLI subcommands.

A workspace is a plain directory: the core snapshot at its root, the catalog
manifest under catalog/, and sheets/, decisions/, cqs/, models/ for the
artifacts the commands exchange.  Mutating commands append a line to
session.log recording what they ran on, as content hashes, so a workspace
state can be audited without trusting timestamps.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

from .core import KnowledgeCore


def digest(path: Path) -> str:
    """Short content hash of a file; 'absent' when the file does not exist."""
    path = Path(path)
    if not path.is_file():
        return "absent"
    return hashlib.sha256(path.read_bytes()).hexdigest()[:12]


class Workspace:
    def __init__(self, root):
        self.root = Path(root)

    @property
    def core_path(self) -> Path:
        return self.root / "core.snapshot"

    @property
    def catalog_dir(self) -> Path:
        return self.root / "catalog"

    @property
    def manifest_path(self) -> Path:
        return self.catalog_dir / "manifest.tsv"

    @property
    def sheets_dir(self) -> Path:
        return self.root / "sheets"

    @property
    def decisions_dir(self) -> Path:
        return self.root / "decisions"

    @property
    def cqs_dir(self) -> Path:
        return self.root / "cqs"

    @property
    def models_dir(self) -> Path:
        return self.root / "models"

    @property
    def log_path(self) -> Path:
        return self.root / "session.log"

    def ensure(self) -> None:
        for directory in (
            self.root,
            self.catalog_dir,
            self.sheets_dir,
            self.decisions_dir,
            self.cqs_dir,
            self.models_dir,
        ):
            directory.mkdir(parents=True, exist_ok=True)

    def load_core(self) -> KnowledgeCore:
        if self.core_path.is_file():
            return KnowledgeCore.load(self.core_path)
        return KnowledgeCore()

    def save_core(self, core: KnowledgeCore) -> None:
        self.ensure()
        core.persist(self.core_path)

    def log(self, command: str, inputs) -> None:
        self.ensure()
        hashes = " ".join(f"{Path(p).name}={digest(p)}" for p in inputs)
        with open(self.log_path, "a", encoding="utf-8") as handle:
            handle.write(f"{command} {hashes}".rstrip() + "\n")
