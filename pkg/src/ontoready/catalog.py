"""Reuse catalog: a manifest of candidate ontologies ranked by incoming links.

An incoming link is another catalog entry that either owl:imports this entry
or mentions any IRI in this entry's namespace.  Entries that are referenced
more are better anchors for reuse, so the ranking is by link count
descending, ties broken by IRI.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from . import turtle
from .turtle import Document


class ManifestError(Exception):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class CatalogEntry:
    iri: str
    title: str
    path: str  # relative to the manifest's directory
    tags: tuple[str, ...] = ()
    incoming_links: int = 0


def load_manifest(path: str | Path) -> list[CatalogEntry]:
    """Read a tab-separated manifest: iri, title, path, optional comma tags."""
    entries: list[CatalogEntry] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 3:
                raise ManifestError("expected iri, title and path separated by tabs", number)
            iri, title, relpath = (f.strip() for f in fields[:3])
            if not iri or not relpath:
                raise ManifestError("iri and path must be non-empty", number)
            if iri in seen:
                raise ManifestError(f"duplicate entry for {iri}", number)
            seen.add(iri)
            tags = ()
            if len(fields) > 3 and fields[3].strip():
                tags = tuple(t.strip() for t in fields[3].split(",") if t.strip())
            entries.append(CatalogEntry(iri=iri, title=title, path=relpath, tags=tags))
    return entries


def read_entry_document(entry: CatalogEntry, root: str | Path) -> Document:
    text = (Path(root) / entry.path).read_text(encoding="utf-8")
    return turtle.parse(text, base=entry.iri)


def _in_namespace(term: str, namespace: str) -> bool:
    if term == namespace:
        return True
    if namespace.endswith(("#", "/")):
        return term.startswith(namespace)
    return term.startswith(namespace + "#") or term.startswith(namespace + "/")


def _owning_entry(term: str, entry_iris: list[str]) -> str | None:
    # Longest namespace wins so nested namespaces attribute correctly.
    best = None
    for namespace in entry_iris:
        if _in_namespace(term, namespace):
            if best is None or len(namespace) > len(best):
                best = namespace
    return best


def references(doc: Document, source_iri: str, entry_iris: list[str]) -> set[str]:
    """The set of other catalog entries this document links to.

    Covers owl:imports (the target IRI is an exact namespace match) and any
    subject, predicate or object IRI that falls in another entry's namespace.
    """
    found: set[str] = set()
    for s, p, o in doc.triples:
        terms = [s, p]
        if isinstance(o, str):
            terms.append(o)
        for term in terms:
            owner = _owning_entry(term, entry_iris)
            if owner is not None and owner != source_iri:
                found.add(owner)
    return found


def compute_incoming_links(entries: list[CatalogEntry], root: str | Path) -> list[CatalogEntry]:
    """Parse every entry and count, per entry, how many others reference it."""
    iris = [e.iri for e in entries]
    counts = {iri: 0 for iri in iris}
    for entry in entries:
        doc = read_entry_document(entry, root)
        for target in references(doc, entry.iri, iris):
            counts[target] += 1
    return [replace(e, incoming_links=counts[e.iri]) for e in entries]


def rank_catalog(entries: list[CatalogEntry]) -> list[CatalogEntry]:
    """Most-referenced first; equal counts fall back to IRI order."""
    return sorted(entries, key=lambda e: (-e.incoming_links, e.iri))
