"""Annotation sessions: resolving concept candidates against the core.

Each candidate of an informal ontology is walked top-down and either matched
to an existing core concept (a synonymous match, recording GID and word
sense rank) or marked as a new concept with a gloss and a negative
placeholder. The resulting sheet is validated and then imported, which mints
real GIDs for the placeholders in one atomic step.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

from .core import KnowledgeCore, Provenance, SearchHit, fold
from .cq import default_stopwords
from .ontology import HIERARCHY_KINDS, ConceptCandidate, InformalOntology, iterate_top_down

SHEET_COLUMNS = (
    "label",
    "language",
    "gid_or_placeholder",
    "wsr",
    "parent_label",
    "parent_gid",
    "gloss",
    "hierarchy_kind",
    "source_iri",
)

ACCEPT = "accept"
NEW = "new"
SKIP = "skip"

SEVERITY_ERROR = "error"
SEVERITY_WARNING = "warning"


class AnnotationError(Exception):
    pass


class MissingDecision(AnnotationError):
    def __init__(self, label: str, kind: str):
        super().__init__(f"no decision for {kind} candidate {label!r}")
        self.label = label
        self.kind = kind


class MissingGloss(AnnotationError):
    def __init__(self, label: str):
        super().__init__(f"new concept {label!r} needs a gloss")
        self.label = label


class ForwardParentReference(AnnotationError):
    def __init__(self, label: str, parent: str):
        super().__init__(f"record {label!r} refers to parent {parent!r} that has not been annotated yet")
        self.label = label
        self.parent = parent


class SheetError(AnnotationError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class ValidationFailed(AnnotationError):
    def __init__(self, violations):
        lines = "; ".join(f"{v.code} (row {v.row})" for v in violations)
        super().__init__(f"sheet has validation errors: {lines}")
        self.violations = list(violations)


@dataclass(frozen=True)
class AnnotationRecord:
    """One sheet row. gid > 0 is a synonymous match; gid < 0 a placeholder."""

    label: str
    language: str
    gid: int
    wsr: int  # rank of the matched lemma; 0 on new-concept rows
    parent_label: str  # "" for forest roots
    parent_gid: int  # 0 for forest roots; may be an earlier placeholder
    gloss: str
    hierarchy_kind: str
    source_iri: str

    @property
    def is_match(self) -> bool:
        return self.gid > 0


@dataclass
class SessionMeta:
    ontology_iri: str
    language: str
    annotator: str = ""
    created: str = ""
    core_revision: int = 0
    skipped: tuple[str, ...] = ()


@dataclass
class AnnotationSheet:
    meta: SessionMeta
    records: list[AnnotationRecord] = field(default_factory=list)

    def placeholders(self) -> list[int]:
        out = []
        for record in self.records:
            if record.gid < 0 and record.gid not in out:
                out.append(record.gid)
        return out


@dataclass(frozen=True)
class Decision:
    verb: str  # ACCEPT, NEW or SKIP
    gid: int = 0
    gloss: str = ""
    override: bool = False  # allows accepting a GID that is not among the hits


class AcceptFirst:
    """Headless policy: take the best-ranked hit, otherwise propose a new
    concept (the candidate's own gloss must then carry the definition)."""

    def decide(self, kind: str, label: str, gloss: str, hits: list[SearchHit]) -> Decision:
        if hits:
            return Decision(ACCEPT, gid=hits[0].gid)
        return Decision(NEW)


class DecisionScript:
    """Keyed decisions for a headless run: (hierarchy kind, folded label).

    File format, one decision per line, tab-separated:

        kind TAB label TAB skip
        kind TAB label TAB new TAB gloss
        kind TAB label TAB accept TAB gid [TAB override]
    """

    def __init__(self, decisions: dict):
        self._decisions = decisions
        self._consumed: set = set()

    @classmethod
    def parse(cls, text: str) -> "DecisionScript":
        decisions: dict = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 3:
                raise SheetError("expected: kind TAB label TAB verb [TAB argument]", number)
            kind, label, verb = fields[0].strip(), fields[1].strip(), fields[2].strip()
            key = (kind, fold(label))
            if key in decisions:
                raise SheetError(f"duplicate decision for {kind} {label!r}", number)
            if verb == SKIP:
                decisions[key] = Decision(SKIP)
            elif verb == NEW:
                gloss = fields[3].strip() if len(fields) > 3 else ""
                decisions[key] = Decision(NEW, gloss=gloss)
            elif verb == ACCEPT:
                if len(fields) < 4:
                    raise SheetError("accept needs a GID argument", number)
                try:
                    gid = int(fields[3])
                except ValueError:
                    raise SheetError(f"accept argument {fields[3]!r} is not a GID", number)
                override = len(fields) > 4 and fields[4].strip() == "override"
                decisions[key] = Decision(ACCEPT, gid=gid, override=override)
            else:
                raise SheetError(f"unknown verb {verb!r}", number)
        return cls(decisions)

    @classmethod
    def load(cls, path) -> "DecisionScript":
        with open(path, encoding="utf-8") as handle:
            return cls.parse(handle.read())

    def decide(self, kind: str, label: str, gloss: str, hits) -> Decision:
        decision = self._decisions.get((kind, fold(label)))
        if decision is None:
            raise MissingDecision(label, kind)
        self._consumed.add((kind, fold(label)))
        return decision

    def unused(self) -> list[tuple]:
        return sorted(set(self._decisions) - self._consumed)


class AnnotationSession:
    """Stateful walk over one ontology's candidates, in top-down order per
    hierarchy (classes, then object properties, then data properties).

    Shared by the headless runner, the interactive prompt and the HTTP
    service, so every front end produces identical sheets for identical
    decisions.
    """

    def __init__(
        self,
        core: KnowledgeCore,
        ontology: InformalOntology,
        language: str = "en",
        annotator: str = "",
        created: str = "",
        kinds=HIERARCHY_KINDS,
    ):
        self.core = core
        self.ontology = ontology
        self.language = language
        self._queue: list[ConceptCandidate] = []
        for kind in kinds:
            self._queue.extend(iterate_top_down(ontology, kind, language))
        self._index = 0
        self._records: list[AnnotationRecord] = []
        self._assigned: dict = {}  # (kind, iri) -> gid or placeholder
        self._skipped: set = set()  # (kind, iri)
        self._skipped_labels: list[str] = []
        self._next_placeholder = -1
        self._meta = SessionMeta(
            ontology_iri=ontology.iri,
            language=language,
            annotator=annotator,
            created=created,
            core_revision=core.revision,
        )

    def current(self) -> ConceptCandidate | None:
        if self._index >= len(self._queue):
            return None
        return self._queue[self._index]

    @property
    def done(self) -> bool:
        return self.current() is None

    def progress(self) -> tuple[int, int]:
        return self._index, len(self._queue)

    def current_label(self) -> str:
        candidate = self.current()
        return "" if candidate is None else candidate.label_for(self.language)

    def hits_for_current(self) -> list[SearchHit]:
        candidate = self.current()
        if candidate is None or not self.core.has_language(self.language):
            return []
        return self.core.search_synonymous(candidate.label_for(self.language), self.language)

    def current_parent_label(self) -> str:
        """Display label of the candidate's first in-document parent, for
        front ends; unlike the recorded parent it ignores annotation state."""
        candidate = self.current()
        if candidate is None or not candidate.parents:
            return ""
        nodes = self.ontology.hierarchies.get(candidate.kind, {})
        parent = nodes.get(candidate.parents[0])
        return "" if parent is None else parent.label_for(self.language)

    def _resolve_parent(self, candidate: ConceptCandidate) -> tuple[str, int]:
        """Nearest annotated ancestor within the same hierarchy; skipped
        candidates are transparent. Roots resolve to ("", 0)."""
        nodes = self.ontology.hierarchies.get(candidate.kind, {})
        frontier = list(candidate.parents)
        while frontier:
            parent_iri = frontier.pop(0)
            key = (candidate.kind, parent_iri)
            if key in self._assigned:
                parent = nodes[parent_iri]
                return parent.label_for(self.language), self._assigned[key]
            if key in self._skipped:
                parent = nodes.get(parent_iri)
                if parent is not None:
                    frontier.extend(parent.parents)
                continue
            if parent_iri in nodes:
                raise ForwardParentReference(candidate.label_for(self.language), parent_iri)
            # parent outside this document: treated as absent
        return "", 0

    def decide(self, decision: Decision) -> AnnotationRecord | None:
        candidate = self.current()
        if candidate is None:
            raise AnnotationError("session already complete")
        label = candidate.label_for(self.language)
        if decision.verb == SKIP:
            self._skipped.add((candidate.kind, candidate.iri))
            self._skipped_labels.append(label)
            self._index += 1
            return None

        parent_label, parent_gid = self._resolve_parent(candidate)
        if decision.verb == ACCEPT:
            hits = self.hits_for_current()
            hit = next((h for h in hits if h.gid == decision.gid), None)
            if hit is not None:
                wsr = hit.wsr
            else:
                if not decision.override:
                    raise AnnotationError(
                        f"GID {decision.gid} is not among the search hits for {label!r}; "
                        "mark the decision as an override to force it"
                    )
                if decision.gid not in self.core:
                    raise AnnotationError(f"override names unknown GID {decision.gid}")
                wsr = self._prospective_rank(decision.gid, label)
            record = AnnotationRecord(
                label=label,
                language=self.language,
                gid=decision.gid,
                wsr=wsr,
                parent_label=parent_label,
                parent_gid=parent_gid,
                gloss=candidate.gloss,
                hierarchy_kind=candidate.kind,
                source_iri=candidate.iri,
            )
        elif decision.verb == NEW:
            gloss = decision.gloss.strip() or candidate.gloss.strip()
            if not gloss:
                raise MissingGloss(label)
            placeholder = self._next_placeholder
            self._next_placeholder -= 1
            record = AnnotationRecord(
                label=label,
                language=self.language,
                gid=placeholder,
                wsr=0,
                parent_label=parent_label,
                parent_gid=parent_gid,
                gloss=gloss,
                hierarchy_kind=candidate.kind,
                source_iri=candidate.iri,
            )
        else:
            raise AnnotationError(f"unknown decision verb {decision.verb!r}")

        self._assigned[(candidate.kind, candidate.iri)] = record.gid
        self._records.append(record)
        self._index += 1
        return record

    def _prospective_rank(self, gid: int, label: str) -> int:
        """Rank the label would get in the synset once imported."""
        synset = self.core.synset(gid, self.language) if self.core.has_language(self.language) else None
        if synset is None:
            return 1
        existing = synset.rank_of(label)
        return existing if existing is not None else len(synset.words) + 1

    def sheet(self) -> AnnotationSheet:
        meta = replace(self._meta, skipped=tuple(self._skipped_labels))
        return AnnotationSheet(meta=meta, records=list(self._records))

    def run(self, policy) -> AnnotationSheet:
        while not self.done:
            candidate = self.current()
            decision = policy.decide(
                candidate.kind,
                candidate.label_for(self.language),
                candidate.gloss,
                self.hits_for_current(),
            )
            self.decide(decision)
        if isinstance(policy, DecisionScript):
            unused = policy.unused()
            if unused:
                listed = ", ".join(f"{kind} {label!r}" for kind, label in unused)
                raise AnnotationError(f"decisions reference labels not in the ontology: {listed}")
        return self.sheet()

    def finalize(self) -> dict:
        """Validate and import the sheet; returns placeholder → GID."""
        return import_sheet(self.sheet(), self.core)


def annotate(
    ontology: InformalOntology,
    core: KnowledgeCore,
    decisions,
    language: str = "en",
    annotator: str = "",
    created: str = "",
    kinds=HIERARCHY_KINDS,
) -> AnnotationSheet:
    session = AnnotationSession(core, ontology, language, annotator, created, kinds)
    return session.run(decisions)


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str
    severity: str
    row: int  # 1-based record index; 0 for sheet-level problems
    message: str


def _strip_punct(word: str) -> str:
    return word.strip(".,;:!?()'\"")


def _content_words(text: str) -> list[str]:
    stop = default_stopwords()
    words = (_strip_punct(w) for w in fold(text).split())
    return [w for w in words if w and w not in stop]


def _genus_mention(gloss: str, genus_labels: list[str]) -> str | None:
    folded = " " + " ".join(_strip_punct(w) for w in fold(gloss).split()) + " "
    for genus in genus_labels:
        target = " " + fold(genus) + " "
        if target.strip() and target in folded:
            return genus
    return None


def validate_sheet(sheet: AnnotationSheet, core: KnowledgeCore) -> list[Violation]:
    """All violations found; errors block import, warnings are advisory."""
    violations: list[Violation] = []

    expected = -1
    for row, record in enumerate(sheet.records, start=1):
        if record.gid < 0:
            if record.gid != expected:
                violations.append(
                    Violation(
                        "PLACEHOLDER_SEQUENCE",
                        SEVERITY_ERROR,
                        row,
                        f"expected placeholder {expected}, found {record.gid}",
                    )
                )
            else:
                expected -= 1
        elif record.gid == 0:
            violations.append(Violation("PLACEHOLDER_SEQUENCE", SEVERITY_ERROR, row, "gid 0 is not valid"))

    defined: set[int] = set()
    for row, record in enumerate(sheet.records, start=1):
        if record.gid > 0 and record.gid not in core:
            violations.append(
                Violation("UNKNOWN_GID", SEVERITY_ERROR, row, f"GID {record.gid} is not in the core")
            )
        if record.parent_gid > 0 and record.parent_gid not in core:
            violations.append(
                Violation("UNKNOWN_PARENT", SEVERITY_ERROR, row, f"parent GID {record.parent_gid} is not in the core")
            )
        if record.parent_gid < 0 and record.parent_gid not in defined:
            violations.append(
                Violation(
                    "FORWARD_PARENT",
                    SEVERITY_ERROR,
                    row,
                    f"parent placeholder {record.parent_gid} is not defined by an earlier row",
                )
            )
        if record.gid < 0:
            defined.add(record.gid)
            if not record.gloss.strip():
                violations.append(Violation("MISSING_GLOSS", SEVERITY_ERROR, row, f"{record.label!r} has no gloss"))
            else:
                violations.extend(_check_genus_differentia(record, row, core, sheet.meta.language))
        elif record.parent_gid != 0:
            disputed = None
            if record.parent_gid < 0:
                disputed = f"{record.gid} exists but its recorded parent is a new placeholder"
            elif record.gid in core and record.parent_gid not in core.ancestors(record.gid):
                disputed = f"core does not place {record.gid} under {record.parent_gid}"
            if disputed:
                violations.append(
                    Violation(
                        "DISPUTED_PARENT",
                        SEVERITY_WARNING,
                        row,
                        disputed + "; the hierarchy edge is not imported",
                    )
                )
    return violations


def _check_genus_differentia(record: AnnotationRecord, row: int, core: KnowledgeCore, language: str):
    """The gloss of a new concept should name its genus (the parent's label
    or a core ancestor's preferred lemma) and say something more."""
    if record.parent_gid == 0:
        return []
    genus_labels = [record.parent_label] if record.parent_label else []
    if record.parent_gid > 0 and record.parent_gid in core:
        lineage = {record.parent_gid} | core.ancestors(record.parent_gid)
        for gid in sorted(lineage):
            if core.has_language(language):
                lemma = core.preferred_lemma(gid, language)
                if lemma:
                    genus_labels.append(lemma)
    mention = _genus_mention(record.gloss, genus_labels)
    if mention is None:
        return [
            Violation(
                "GENUS_DIFFERENTIA",
                SEVERITY_WARNING,
                row,
                f"gloss of {record.label!r} does not mention its genus ({record.parent_label or 'parent'})",
            )
        ]
    genus_words = set(fold(mention).split())
    differentia = [w for w in _content_words(record.gloss) if w not in genus_words]
    if not differentia:
        return [
            Violation(
                "GENUS_DIFFERENTIA",
                SEVERITY_WARNING,
                row,
                f"gloss of {record.label!r} names the genus but no differentia",
            )
        ]
    return []


# -- import --------------------------------------------------------------------


def import_sheet(sheet: AnnotationSheet, core: KnowledgeCore) -> dict:
    """Mint GIDs for every placeholder and enrich matched synsets.

    Atomic: the work happens on a clone which is adopted only after every
    record commits, so a failing import leaves the core untouched.
    """
    errors = [v for v in validate_sheet(sheet, core) if v.severity == SEVERITY_ERROR]
    if errors:
        raise ValidationFailed(errors)

    work = core.clone()
    language = sheet.meta.language
    if sheet.records:
        work.ensure_language(language)
    mapping: dict = {}
    for record in sheet.records:
        if record.gid < 0:
            if record.parent_gid < 0:
                parent = mapping[record.parent_gid]
            elif record.parent_gid > 0:
                parent = record.parent_gid
            else:
                parent = None
            parents = frozenset() if parent is None else frozenset({parent})
            gid = work.create_concept(
                parents,
                record.gloss,
                provenance=Provenance(record.source_iri or sheet.meta.ontology_iri, record.hierarchy_kind),
            )
            work.attach_sense(gid, language, record.label, 1)
            work.set_synset_gloss(gid, language, record.gloss)
            mapping[record.gid] = gid
        else:
            synset = work.synset(record.gid, language)
            if synset is None or synset.rank_of(record.label) is None:
                rank = 1 if synset is None else len(synset.words) + 1
                work.attach_sense(record.gid, language, record.label, rank)
    core.adopt(work)
    return mapping


# -- sheet serialization --------------------------------------------------------


def export_sheet(sheet: AnnotationSheet) -> str:
    """CSV with a commented metadata preamble; stable byte-for-byte."""
    out = io.StringIO()
    meta = sheet.meta
    out.write(f"# ontology: {meta.ontology_iri}\n")
    out.write(f"# language: {meta.language}\n")
    out.write(f"# annotator: {meta.annotator}\n")
    out.write(f"# created: {meta.created}\n")
    out.write(f"# core-revision: {meta.core_revision}\n")
    skipped = "\t".join(meta.skipped)
    out.write(f"# skipped: {skipped}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SHEET_COLUMNS)
    for record in sheet.records:
        writer.writerow(
            [
                record.label,
                record.language,
                record.gid,
                record.wsr if record.gid > 0 else "",
                record.parent_label,
                record.parent_gid if record.parent_gid != 0 else "",
                record.gloss,
                record.hierarchy_kind,
                record.source_iri,
            ]
        )
    return out.getvalue()


def parse_sheet(text: str) -> AnnotationSheet:
    meta_fields = {
        "ontology": "",
        "language": "",
        "annotator": "",
        "created": "",
        "core-revision": "0",
        "skipped": "",
    }
    pos = 0
    number = 0
    while pos < len(text):
        end = text.find("\n", pos)
        end = len(text) if end == -1 else end
        line = text[pos:end]
        if not line.startswith("#"):
            break
        number += 1
        payload = line[1:].strip()
        if ":" not in payload:
            raise SheetError("metadata line needs 'key: value'", number)
        key, value = payload.split(":", 1)
        key = key.strip()
        if key not in meta_fields:
            raise SheetError(f"unknown metadata key {key!r}", number)
        meta_fields[key] = value.strip()
        pos = end + 1
    body = text[pos:]
    if not body.strip():
        raise SheetError("sheet has no header row", number + 1)

    try:
        revision = int(meta_fields["core-revision"])
    except ValueError:
        raise SheetError(f"core-revision must be an integer, got {meta_fields['core-revision']!r}")
    skipped = tuple(s for s in meta_fields["skipped"].split("\t") if s)
    meta = SessionMeta(
        ontology_iri=meta_fields["ontology"],
        language=meta_fields["language"],
        annotator=meta_fields["annotator"],
        created=meta_fields["created"],
        core_revision=revision,
        skipped=skipped,
    )

    rows = list(csv.reader(io.StringIO(body)))
    header_line = number + 1
    if tuple(rows[0]) != SHEET_COLUMNS:
        raise SheetError(f"header must be exactly: {', '.join(SHEET_COLUMNS)}", header_line)

    records: list[AnnotationRecord] = []
    for offset, row in enumerate(rows[1:], start=1):
        line = header_line + offset  # approximate when fields span lines
        if len(row) != len(SHEET_COLUMNS):
            raise SheetError(f"expected {len(SHEET_COLUMNS)} columns, found {len(row)}", line)
        label, language, gid_text, wsr_text, parent_label, parent_gid_text, gloss, kind, source_iri = row
        if not label.strip():
            raise SheetError("label must be non-empty", line)
        try:
            gid = int(gid_text)
        except ValueError:
            raise SheetError(f"gid_or_placeholder {gid_text!r} is not an integer", line)
        if gid == 0:
            raise SheetError("gid_or_placeholder cannot be 0", line)
        if wsr_text.strip():
            try:
                wsr = int(wsr_text)
            except ValueError:
                raise SheetError(f"wsr {wsr_text!r} is not an integer", line)
            if wsr < 1:
                raise SheetError(f"wsr must be positive, got {wsr}", line)
        else:
            wsr = 0
        if gid > 0 and wsr == 0:
            raise SheetError("a synonymous match row needs a wsr", line)
        if parent_gid_text.strip():
            try:
                parent_gid = int(parent_gid_text)
            except ValueError:
                raise SheetError(f"parent_gid {parent_gid_text!r} is not an integer", line)
            if parent_gid == 0:
                raise SheetError("parent_gid 0 must be written as an empty field", line)
        else:
            parent_gid = 0
        records.append(
            AnnotationRecord(
                label=label,
                language=language,
                gid=gid,
                wsr=wsr,
                parent_label=parent_label,
                parent_gid=parent_gid,
                gloss=gloss,
                hierarchy_kind=kind,
                source_iri=source_iri,
            )
        )
    return AnnotationSheet(meta=meta, records=records)
