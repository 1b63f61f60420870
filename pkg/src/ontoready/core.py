"""Concept core and language core.

The concept core is a DAG of alinguistic concepts, each identified only by a
positive integer GID; hypernym edges are the structural relation and every
insertion is cycle-guarded.  The language core is a union of per-language
synset modules; synsets in different languages sharing a GID express the same
concept.

Concurrency: single writer, multiple readers.  Mutators take the internal
lock and commit by replacing whole containers, so a reader never observes a
half-applied operation.
"""

from __future__ import annotations

import heapq
import threading
import unicodedata
from dataclasses import dataclass, field, replace
from typing import Iterator


class CoreError(Exception):
    """Base class for concept/language core failures."""


class UnknownGID(CoreError):
    def __init__(self, gid: int):
        super().__init__(f"no concept with GID {gid}")
        self.gid = gid


class UnknownParent(CoreError):
    def __init__(self, gid: int):
        super().__init__(f"parent GID {gid} is not a committed concept")
        self.gid = gid


class EmptyGloss(CoreError):
    def __init__(self) -> None:
        super().__init__("concept gloss must be non-empty")


class CycleDetected(CoreError):
    def __init__(self, child: int, parent: int):
        super().__init__(f"edge {child} -> {parent} would create a cycle")
        self.child = child
        self.parent = parent


class UnknownLanguage(CoreError):
    def __init__(self, language: str):
        super().__init__(f"no language module for {language!r}")
        self.language = language


class DuplicateLemma(CoreError):
    def __init__(self, word: str, gid: int, language: str):
        super().__init__(f"lemma {word!r} already present in synset ({gid}, {language})")
        self.word = word


class RankGap(CoreError):
    def __init__(self, wsr: int, size: int):
        super().__init__(f"rank {wsr} would leave a gap (synset has {size} lemmas)")
        self.wsr = wsr


class CorruptSnapshot(CoreError):
    def __init__(self, line: int, message: str):
        super().__init__(f"snapshot line {line}: {message}")
        self.line = line


def fold(text: str) -> str:
    """Case-folded, whitespace-normalized form used for all lemma matching."""
    return " ".join(unicodedata.normalize("NFC", text).casefold().split())


@dataclass(frozen=True)
class Provenance:
    """Where a concept came from: an ontology hierarchy, or the core itself."""

    source_iri: str | None = None
    kind: str | None = None

    def describe(self) -> str:
        if self.source_iri is None:
            return "native"
        return f"{self.source_iri} ({self.kind})"


NATIVE = Provenance()


@dataclass
class Concept:
    gid: int
    parents: frozenset[int]
    gloss: str
    provenance: Provenance = NATIVE


@dataclass
class Synset:
    """Synonyms for one concept in one language, ordered by word sense rank."""

    gid: int
    language: str
    words: tuple[str, ...] = ()
    gloss: str = ""
    examples: tuple[str, ...] = ()

    @property
    def lemmas(self) -> tuple[tuple[str, int], ...]:
        return tuple((word, rank + 1) for rank, word in enumerate(self.words))

    @property
    def preferred(self) -> str:
        return self.words[0] if self.words else ""

    def rank_of(self, lemma: str) -> int | None:
        target = fold(lemma)
        for rank, word in enumerate(self.words, start=1):
            if fold(word) == target:
                return rank
        return None


@dataclass(frozen=True)
class SearchHit:
    gid: int
    synset: Synset
    wsr: int


@dataclass
class LabeledEdge:
    """Non-structural semantic relation; not part of the acyclicity contract."""

    source: int
    target: int
    label: str


SNAPSHOT_HEADER = "knowledge-core 1"

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}


def _escape(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def _unescape(text: str, line: int) -> str:
    out: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= len(text):
            raise CorruptSnapshot(line, "dangling escape at end of field")
        nxt = text[i + 1]
        mapped = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(nxt)
        if mapped is None:
            raise CorruptSnapshot(line, f"unknown escape \\{nxt}")
        out.append(mapped)
        i += 2
    return "".join(out)


class KnowledgeCore:
    """Concept DAG plus language modules, with single-writer mutation."""

    def __init__(self) -> None:
        self._concepts: dict[int, Concept] = {}
        self._languages: dict[str, dict[int, Synset]] = {}
        self._relations: list[LabeledEdge] = []
        self._next_gid = 1
        self.revision = 0
        self._lock = threading.RLock()

    # ------------------------------------------------------------------ DAG

    def __contains__(self, gid: int) -> bool:
        return gid in self._concepts

    def __len__(self) -> int:
        return len(self._concepts)

    def concept(self, gid: int) -> Concept:
        try:
            return self._concepts[gid]
        except KeyError:
            raise UnknownGID(gid) from None

    def gids(self) -> list[int]:
        return sorted(self._concepts)

    def roots(self) -> list[int]:
        return sorted(g for g, c in self._concepts.items() if not c.parents)

    def create_concept(
        self,
        parents: set[int] | frozenset[int],
        gloss: str,
        provenance: Provenance = NATIVE,
    ) -> int:
        """Commit a fresh concept under the given parents and return its GID.

        A concept created with no parents is a designated root.  GIDs are
        allocated monotonically and never reused.
        """
        if not gloss.strip():
            raise EmptyGloss()
        with self._lock:
            for parent in parents:
                if parent not in self._concepts:
                    raise UnknownParent(parent)
            gid = self._next_gid
            self._next_gid += 1
            self._concepts[gid] = Concept(gid, frozenset(parents), gloss, provenance)
            self.revision += 1
            return gid

    def add_hypernym(self, child: int, parent: int) -> None:
        """Add a hypernym edge; rejected (core unchanged) if it would cycle."""
        with self._lock:
            if child not in self._concepts:
                raise UnknownGID(child)
            if parent not in self._concepts:
                raise UnknownGID(parent)
            if child == parent or child in self.ancestors(parent):
                raise CycleDetected(child, parent)
            concept = self._concepts[child]
            self._concepts[child] = replace(concept, parents=concept.parents | {parent})
            self.revision += 1

    def ancestors(self, gid: int) -> set[int]:
        """All concepts reachable from `gid` by following hypernym edges."""
        seen: set[int] = set()
        stack = list(self.concept(gid).parents)
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            stack.extend(self._concepts[node].parents)
        return seen

    def topological_order(self) -> list[int]:
        """Parents-before-children order over all concepts; the acyclicity witness."""
        children: dict[int, list[int]] = {gid: [] for gid in self._concepts}
        pending = {gid: len(c.parents) for gid, c in self._concepts.items()}
        for gid, concept in self._concepts.items():
            for parent in concept.parents:
                children[parent].append(gid)
        ready = [gid for gid, n in pending.items() if n == 0]
        heapq.heapify(ready)
        order: list[int] = []
        while ready:
            gid = heapq.heappop(ready)
            order.append(gid)
            for child in children[gid]:
                pending[child] -= 1
                if pending[child] == 0:
                    heapq.heappush(ready, child)
        if len(order) != len(self._concepts):
            raise CycleDetected(-1, -1)
        return order

    def add_relation(self, source: int, target: int, label: str) -> None:
        """Record a labeled, non-structural semantic relation between concepts."""
        with self._lock:
            if source not in self._concepts:
                raise UnknownGID(source)
            if target not in self._concepts:
                raise UnknownGID(target)
            self._relations.append(LabeledEdge(source, target, label))
            self.revision += 1

    @property
    def relations(self) -> list[LabeledEdge]:
        return list(self._relations)

    # ------------------------------------------------------- language core

    def ensure_language(self, language: str) -> None:
        with self._lock:
            if language not in self._languages:
                self._languages[language] = {}
                self.revision += 1

    def languages(self) -> list[str]:
        return sorted(self._languages)

    def has_language(self, language: str) -> bool:
        return language in self._languages

    def synsets(self, language: str) -> list[Synset]:
        module = self._languages.get(language)
        if module is None:
            raise UnknownLanguage(language)
        return [module[gid] for gid in sorted(module)]

    def synset(self, gid: int, language: str) -> Synset | None:
        module = self._languages.get(language)
        if module is None:
            raise UnknownLanguage(language)
        return module.get(gid)

    def attach_sense(self, gid: int, language: str, word: str, wsr: int) -> None:
        """Insert `word` at rank `wsr`; existing ranks >= wsr shift down by one.

        The language module is created on first use.  Ranks stay gapless:
        wsr must fall in 1..len(lemmas)+1.
        """
        if not word.strip():
            raise CoreError("lemma must be non-empty")
        with self._lock:
            if gid not in self._concepts:
                raise UnknownGID(gid)
            module = self._languages.setdefault(language, {})
            synset = module.get(gid) or Synset(gid, language)
            if synset.rank_of(word) is not None:
                raise DuplicateLemma(word, gid, language)
            if wsr < 1 or wsr > len(synset.words) + 1:
                raise RankGap(wsr, len(synset.words))
            words = list(synset.words)
            words.insert(wsr - 1, word)
            module[gid] = replace(synset, words=tuple(words))
            self.revision += 1

    def set_synset_gloss(self, gid: int, language: str, gloss: str) -> None:
        with self._lock:
            if gid not in self._concepts:
                raise UnknownGID(gid)
            module = self._languages.setdefault(language, {})
            synset = module.get(gid) or Synset(gid, language)
            module[gid] = replace(synset, gloss=gloss)
            self.revision += 1

    def add_synset_example(self, gid: int, language: str, example: str) -> None:
        with self._lock:
            if gid not in self._concepts:
                raise UnknownGID(gid)
            module = self._languages.setdefault(language, {})
            synset = module.get(gid) or Synset(gid, language)
            module[gid] = replace(synset, examples=synset.examples + (example,))
            self.revision += 1

    def search_synonymous(self, lemma: str, language: str) -> list[SearchHit]:
        """All synsets in `language` containing `lemma`, ordered by WSR then GID.

        An empty result is the no-synonymous-match outcome: the concept is new
        with respect to the core.
        """
        module = self._languages.get(language)
        if module is None:
            raise UnknownLanguage(language)
        hits: list[SearchHit] = []
        for gid in sorted(module):
            rank = module[gid].rank_of(lemma)
            if rank is not None:
                hits.append(SearchHit(gid, module[gid], rank))
        hits.sort(key=lambda h: (h.wsr, h.gid))
        return hits

    def preferred_lemma(self, gid: int, language: str) -> str:
        """Preferred term for a concept in a language, '' when unlexicalized."""
        module = self._languages.get(language)
        if module is None:
            return ""
        synset = module.get(gid)
        return synset.preferred if synset else ""

    # ---------------------------------------------------------- persistence

    def dumps(self) -> str:
        """Serialize to the versioned line-oriented snapshot format."""
        lines = [SNAPSHOT_HEADER]
        lines.append(f"meta\tnext_gid\t{self._next_gid}")
        lines.append(f"meta\trevision\t{self.revision}")
        for gid in sorted(self._concepts):
            concept = self._concepts[gid]
            src = _escape(concept.provenance.source_iri or "-")
            kind = _escape(concept.provenance.kind or "-")
            lines.append(f"concept\t{gid}\t{_escape(concept.gloss)}\t{src}\t{kind}")
        for gid in sorted(self._concepts):
            for parent in sorted(self._concepts[gid].parents):
                lines.append(f"parent\t{gid}\t{parent}")
        for language in sorted(self._languages):
            lines.append(f"language\t{_escape(language)}")
            module = self._languages[language]
            for gid in sorted(module):
                synset = module[gid]
                lines.append(f"synset\t{gid}\t{_escape(language)}\t{_escape(synset.gloss)}")
                for word in synset.words:
                    lines.append(f"lemma\t{gid}\t{_escape(language)}\t{_escape(word)}")
                for example in synset.examples:
                    lines.append(f"example\t{gid}\t{_escape(language)}\t{_escape(example)}")
        for edge in self._relations:
            lines.append(f"relation\t{edge.source}\t{edge.target}\t{_escape(edge.label)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "KnowledgeCore":
        core = cls()
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines:
            raise CorruptSnapshot(1, "empty snapshot")
        if lines[0] != SNAPSHOT_HEADER:
            raise CorruptSnapshot(1, f"bad header {lines[0]!r}, expected {SNAPSHOT_HEADER!r}")

        def parse_int(token: str, lineno: int, what: str) -> int:
            try:
                return int(token)
            except ValueError:
                raise CorruptSnapshot(lineno, f"{what} is not an integer: {token!r}") from None

        pending_parents: list[tuple[int, int, int]] = []
        seen_meta = False
        for lineno, line in enumerate(lines[1:], start=2):
            if not line:
                raise CorruptSnapshot(lineno, "blank line inside snapshot")
            fields = line.split("\t")
            tag = fields[0]
            if tag == "meta":
                if len(fields) != 3:
                    raise CorruptSnapshot(lineno, "meta record needs 3 fields")
                if fields[1] == "next_gid":
                    core._next_gid = parse_int(fields[2], lineno, "next_gid")
                    seen_meta = True
                elif fields[1] == "revision":
                    core.revision = parse_int(fields[2], lineno, "revision")
                else:
                    raise CorruptSnapshot(lineno, f"unknown meta key {fields[1]!r}")
            elif tag == "concept":
                if len(fields) != 5:
                    raise CorruptSnapshot(lineno, "concept record needs 5 fields")
                gid = parse_int(fields[1], lineno, "GID")
                if gid <= 0:
                    raise CorruptSnapshot(lineno, f"committed GID must be positive, got {gid}")
                if gid in core._concepts:
                    raise CorruptSnapshot(lineno, f"duplicate concept {gid}")
                gloss = _unescape(fields[2], lineno)
                src = _unescape(fields[3], lineno)
                kind = _unescape(fields[4], lineno)
                prov = NATIVE if src == "-" else Provenance(src, None if kind == "-" else kind)
                core._concepts[gid] = Concept(gid, frozenset(), gloss, prov)
            elif tag == "parent":
                if len(fields) != 3:
                    raise CorruptSnapshot(lineno, "parent record needs 3 fields")
                child = parse_int(fields[1], lineno, "child GID")
                parent = parse_int(fields[2], lineno, "parent GID")
                pending_parents.append((lineno, child, parent))
            elif tag == "language":
                if len(fields) != 2:
                    raise CorruptSnapshot(lineno, "language record needs 2 fields")
                core._languages.setdefault(_unescape(fields[1], lineno), {})
            elif tag == "synset":
                if len(fields) != 4:
                    raise CorruptSnapshot(lineno, "synset record needs 4 fields")
                gid = parse_int(fields[1], lineno, "GID")
                language = _unescape(fields[2], lineno)
                if gid not in core._concepts:
                    raise CorruptSnapshot(lineno, f"synset references unknown concept {gid}")
                module = core._languages.setdefault(language, {})
                if gid in module:
                    raise CorruptSnapshot(lineno, f"duplicate synset ({gid}, {language})")
                module[gid] = Synset(gid, language, gloss=_unescape(fields[3], lineno))
            elif tag == "lemma":
                if len(fields) != 4:
                    raise CorruptSnapshot(lineno, "lemma record needs 4 fields")
                gid = parse_int(fields[1], lineno, "GID")
                language = _unescape(fields[2], lineno)
                synset = core._languages.get(language, {}).get(gid)
                if synset is None:
                    raise CorruptSnapshot(lineno, f"lemma before synset ({gid}, {language})")
                word = _unescape(fields[3], lineno)
                module = core._languages[language]
                module[gid] = replace(synset, words=synset.words + (word,))
            elif tag == "example":
                if len(fields) != 4:
                    raise CorruptSnapshot(lineno, "example record needs 4 fields")
                gid = parse_int(fields[1], lineno, "GID")
                language = _unescape(fields[2], lineno)
                synset = core._languages.get(language, {}).get(gid)
                if synset is None:
                    raise CorruptSnapshot(lineno, f"example before synset ({gid}, {language})")
                module = core._languages[language]
                module[gid] = replace(synset, examples=synset.examples + (_unescape(fields[3], lineno),))
            elif tag == "relation":
                if len(fields) != 4:
                    raise CorruptSnapshot(lineno, "relation record needs 4 fields")
                source = parse_int(fields[1], lineno, "source GID")
                target = parse_int(fields[2], lineno, "target GID")
                for gid in (source, target):
                    if gid not in core._concepts:
                        raise CorruptSnapshot(lineno, f"relation references unknown concept {gid}")
                core._relations.append(LabeledEdge(source, target, _unescape(fields[3], lineno)))
            else:
                raise CorruptSnapshot(lineno, f"unknown record tag {tag!r}")

        if not seen_meta:
            raise CorruptSnapshot(len(lines), "truncated snapshot: missing next_gid meta record")
        for lineno, child, parent in pending_parents:
            if child not in core._concepts:
                raise CorruptSnapshot(lineno, f"edge references unknown concept {child}")
            if parent not in core._concepts:
                raise CorruptSnapshot(lineno, f"edge references unknown concept {parent}")
            concept = core._concepts[child]
            core._concepts[child] = replace(concept, parents=concept.parents | {parent})
        if core._concepts and max(core._concepts) >= core._next_gid:
            raise CorruptSnapshot(1, "next_gid does not exceed the largest committed GID")
        try:
            core.topological_order()
        except CycleDetected:
            raise CorruptSnapshot(1, "hypernym edges contain a cycle") from None
        return core

    def persist(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "KnowledgeCore":
        with open(path, "r", encoding="utf-8", newline="") as fh:
            return cls.loads(fh.read())

    # ----------------------------------------------------- copy-and-commit

    def clone(self) -> "KnowledgeCore":
        """Independent copy sharing no mutable state; used for atomic imports."""
        other = KnowledgeCore()
        other._concepts = dict(self._concepts)
        other._languages = {lang: dict(module) for lang, module in self._languages.items()}
        other._relations = list(self._relations)
        other._next_gid = self._next_gid
        other.revision = self.revision
        return other

    def adopt(self, other: "KnowledgeCore") -> None:
        """Atomically take over another core's state (the commit of a clone)."""
        with self._lock:
            self._concepts = other._concepts
            self._languages = other._languages
            self._relations = other._relations
            self._next_gid = other._next_gid
            self.revision = other.revision

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeCore):
            return NotImplemented
        return (
            self._concepts == other._concepts
            and self._languages == other._languages
            and self._relations == other._relations
            and self._next_gid == other._next_gid
            and self.revision == other.revision
        )

    def __repr__(self) -> str:
        return (
            f"KnowledgeCore(concepts={len(self._concepts)}, "
            f"languages={sorted(self._languages)}, revision={self.revision})"
        )
