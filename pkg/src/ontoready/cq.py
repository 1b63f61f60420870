"""Staged competency-question pipeline.

A raw question passes through four stages, each adding one layer of
expert-decided structure:

    raw -> kernel -> analyzed -> classified -> attributed

The heuristics are deterministic and every heuristic outcome can be
overridden by a decision file, so a replay with the same inputs always
produces the same staged output.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .core import KnowledgeCore, fold

FACET_COMMON_SPACE = "common-space"
FACET_COMMON_TIME = "common-time"
FACET_CORE = "core"
FACET_CONTEXTUAL = "contextual"
FACETS = (FACET_COMMON_SPACE, FACET_COMMON_TIME, FACET_CORE, FACET_CONTEXTUAL)

KIND_OBJECT = "object"
KIND_FUNCTION = "function"
KIND_ACTION = "action"
KINDS = (KIND_OBJECT, KIND_FUNCTION, KIND_ACTION)

OBJECT_PROPERTY = "object-property"
DATA_PROPERTY = "data-property"

DATATYPES = frozenset({"string", "integer", "decimal", "boolean", "date"})

_TOKEN = re.compile(r"[a-z0-9]+(?:['-][a-z0-9]+)*")


class CQError(Exception):
    pass


class EmptyKernel(CQError):
    def __init__(self, cq_id: str):
        super().__init__(f"nothing survives stopword filtering in {cq_id} and no latent concepts were supplied")
        self.cq_id = cq_id


class UnresolvedLabel(CQError):
    def __init__(self, label: str):
        super().__init__(f"label {label!r} does not resolve in the core")
        self.label = label


class MissingKindDecision(CQError):
    def __init__(self, label: str):
        super().__init__(f"no object/function/action decision for label {label!r}")
        self.label = label


class DecisionFileError(CQError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class KernelLabel:
    text: str
    latent: bool = False


@dataclass(frozen=True)
class PropertySpec:
    name: str
    kind: str  # OBJECT_PROPERTY or DATA_PROPERTY
    range: str  # a concept label, or a DATATYPES member for data properties

    def __post_init__(self):
        if self.kind not in (OBJECT_PROPERTY, DATA_PROPERTY):
            raise CQError(f"unknown property kind {self.kind!r}")
        if self.kind == DATA_PROPERTY and self.range not in DATATYPES:
            raise CQError(f"data property {self.name!r} needs a datatype range, got {self.range!r}")
        if self.kind == OBJECT_PROPERTY and self.range in DATATYPES:
            raise CQError(f"object property {self.name!r} cannot range over datatype {self.range!r}")


@dataclass
class StagedCQ:
    id: str
    raw: str
    kernel: tuple[KernelLabel, ...] = ()
    analyzed: dict = field(default_factory=dict)  # label -> facet
    facet_basis: dict = field(default_factory=dict)  # label -> "heuristic" | "override"
    classified: dict = field(default_factory=dict)  # label -> kind
    attributed: dict = field(default_factory=dict)  # label -> tuple[PropertySpec, ...]

    def labels(self) -> list[str]:
        return [k.text for k in self.kernel]


_STOPWORDS = None


def default_stopwords() -> frozenset:
    global _STOPWORDS
    if _STOPWORDS is None:
        text = resources.files("ontoready.data").joinpath("stopwords.txt").read_text("utf-8")
        _STOPWORDS = _parse_wordlist(text)
    return _STOPWORDS


def _parse_wordlist(text: str) -> frozenset:
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(fold(line))
    return frozenset(words)


def load_stopwords(path: str | Path) -> frozenset:
    return _parse_wordlist(Path(path).read_text(encoding="utf-8"))


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(fold(text))


def merge_phrases(tokens: list[str], phrases) -> list[str]:
    """Greedy left-to-right longest-match merge of multiword terms.

    `phrases` is an iterable of phrase strings; each is tokenized the same
    way as the question text.
    """
    phrase_tokens = sorted((tuple(tokenize(p)) for p in phrases), key=len, reverse=True)
    phrase_tokens = [p for p in phrase_tokens if len(p) > 1]
    merged: list[str] = []
    i = 0
    while i < len(tokens):
        for candidate in phrase_tokens:
            if tuple(tokens[i : i + len(candidate)]) == candidate:
                merged.append(" ".join(candidate))
                i += len(candidate)
                break
        else:
            merged.append(tokens[i])
            i += 1
    return merged


def to_kernel(cq: StagedCQ, stopwords=None, phrases=(), latent=()) -> StagedCQ:
    """Raw text minus function words, plus expert-supplied latent concepts."""
    if stopwords is None:
        stopwords = default_stopwords()
    tokens = merge_phrases(tokenize(cq.raw), phrases)
    labels: list[KernelLabel] = []
    seen: set[str] = set()
    for token in tokens:
        if token in stopwords or token in seen:
            continue
        seen.add(token)
        labels.append(KernelLabel(token))
    for extra in latent:
        text = fold(extra)
        if text and text not in seen:
            seen.add(text)
            labels.append(KernelLabel(text, latent=True))
    if not labels:
        raise EmptyKernel(cq.id)
    return replace(cq, kernel=tuple(labels))


@dataclass(frozen=True)
class FacetConfig:
    """Designated space/time subtrees of the core, used to spot common concepts."""

    space_roots: tuple[int, ...] = ()
    time_roots: tuple[int, ...] = ()
    language: str = "en"


def _facet_heuristic(label: str, core: KnowledgeCore, config: FacetConfig) -> str | None:
    if not core.has_language(config.language):
        return None
    hits = core.search_synonymous(label, config.language)
    if not hits:
        return None
    for hit in hits:
        lineage = core.ancestors(hit.gid) | {hit.gid}
        if lineage & set(config.space_roots):
            return FACET_COMMON_SPACE
        if lineage & set(config.time_roots):
            return FACET_COMMON_TIME
    return FACET_CORE


def to_analyzed(
    cq: StagedCQ,
    core: KnowledgeCore,
    config: FacetConfig,
    overrides: dict | None = None,
    strict: bool = False,
) -> StagedCQ:
    """Facet classification: common-space/common-time by core ancestry,
    contextual/core by override, core as the default bucket."""
    overrides = overrides or {}
    analyzed: dict = {}
    basis: dict = {}
    for label in cq.labels():
        override = overrides.get(label)
        if override is not None:
            if override not in FACETS:
                raise CQError(f"unknown facet {override!r} for label {label!r}")
            analyzed[label] = override
            basis[label] = "override"
            continue
        facet = _facet_heuristic(label, core, config)
        if facet is None:
            if strict:
                raise UnresolvedLabel(label)
            facet = FACET_CORE
        analyzed[label] = facet
        basis[label] = "heuristic"
    return replace(cq, analyzed=analyzed, facet_basis=basis)


def to_classified(cq: StagedCQ, kinds: dict) -> StagedCQ:
    classified: dict = {}
    for label in cq.labels():
        kind = kinds.get(label)
        if kind is None:
            raise MissingKindDecision(label)
        if kind not in KINDS:
            raise CQError(f"unknown kind {kind!r} for label {label!r}")
        classified[label] = kind
    return replace(cq, classified=classified)


def to_attributed(cq: StagedCQ, properties: dict, known_ranges: set | None = None):
    """Attach property specs; returns the staged CQ plus range warnings.

    Object-property ranges should name a label from the CQ set or a concept
    the caller knows about; unknown ranges are reported, not rejected.
    """
    known = set(cq.labels()) | (known_ranges or set())
    attributed: dict = {}
    warnings: list[str] = []
    for label in cq.labels():
        specs = tuple(properties.get(label, ()))
        for spec in specs:
            if spec.kind == OBJECT_PROPERTY and spec.range not in known:
                warnings.append(
                    f"{cq.id}: object property {spec.name!r} on {label!r} ranges over unknown label {spec.range!r}"
                )
        attributed[label] = specs
    return replace(cq, attributed=attributed), warnings


# -- decision files ----------------------------------------------------------
#
# All decision files are UTF-8 text, one record per line, fields separated by
# tabs, # starting a comment line. Missing files mean "no decisions".


def _records(path: Path):
    if not path.exists():
        return
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.rstrip()
        if not line or line.lstrip().startswith("#"):
            continue
        yield number, [f.strip() for f in line.split("\t")]


def load_phrases(path: str | Path) -> tuple[str, ...]:
    phrases = []
    for _, fields in _records(Path(path)):
        phrases.append(fields[0])
    return tuple(phrases)


def load_latent(path: str | Path) -> dict:
    """cq-id TAB label; the id `*` adds the label to every question."""
    latent: dict = {}
    for number, fields in _records(Path(path)):
        if len(fields) != 2:
            raise DecisionFileError("expected: cq-id TAB label", number)
        latent.setdefault(fields[0], []).append(fields[1])
    return latent


def load_facets(path: str | Path):
    """label TAB facet overrides, plus @space-root / @time-root directives
    naming core concepts by label."""
    overrides: dict = {}
    space_labels: list[str] = []
    time_labels: list[str] = []
    for number, fields in _records(Path(path)):
        if fields[0] == "@space-root":
            if len(fields) != 2:
                raise DecisionFileError("expected: @space-root TAB label", number)
            space_labels.append(fields[1])
        elif fields[0] == "@time-root":
            if len(fields) != 2:
                raise DecisionFileError("expected: @time-root TAB label", number)
            time_labels.append(fields[1])
        else:
            if len(fields) != 2:
                raise DecisionFileError("expected: label TAB facet", number)
            if fields[1] not in FACETS:
                raise DecisionFileError(f"unknown facet {fields[1]!r}", number)
            overrides[fold(fields[0])] = fields[1]
    return overrides, tuple(space_labels), tuple(time_labels)


def load_kinds(path: str | Path) -> dict:
    kinds: dict = {}
    for number, fields in _records(Path(path)):
        if len(fields) != 2:
            raise DecisionFileError("expected: label TAB kind", number)
        if fields[1] not in KINDS:
            raise DecisionFileError(f"unknown kind {fields[1]!r}", number)
        kinds[fold(fields[0])] = fields[1]
    return kinds


def load_properties(path: str | Path) -> dict:
    """label TAB property-name TAB property-kind TAB range"""
    properties: dict = {}
    for number, fields in _records(Path(path)):
        if len(fields) != 4:
            raise DecisionFileError("expected: label TAB name TAB kind TAB range", number)
        label, name, kind, range_ = fields
        try:
            spec = PropertySpec(name=name, kind=kind, range=range_)
        except CQError as exc:
            raise DecisionFileError(str(exc), number) from exc
        properties.setdefault(fold(label), []).append(spec)
    return properties


def resolve_facet_roots(core: KnowledgeCore, labels, language: str) -> tuple[int, ...]:
    roots = []
    for label in labels:
        hits = core.search_synonymous(label, language) if core.has_language(language) else []
        if not hits:
            raise UnresolvedLabel(label)
        roots.append(hits[0].gid)
    return tuple(roots)


def parse_cq_file(text: str) -> list[StagedCQ]:
    """One question per line: id TAB question text."""
    cqs: list[StagedCQ] = []
    seen: set[str] = set()
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line or line.lstrip().startswith("#"):
            continue
        if "\t" not in line:
            raise DecisionFileError("expected: id TAB question", number)
        cq_id, question = line.split("\t", 1)
        cq_id = cq_id.strip()
        if not cq_id or not question.strip():
            raise DecisionFileError("id and question must be non-empty", number)
        if cq_id in seen:
            raise DecisionFileError(f"duplicate question id {cq_id!r}", number)
        seen.add(cq_id)
        cqs.append(StagedCQ(id=cq_id, raw=question.strip()))
    return cqs


def run_pipeline(
    cqs: list[StagedCQ],
    core: KnowledgeCore,
    decisions_dir: str | Path,
    language: str = "en",
    strict: bool = False,
):
    """Run all four stages over every question, driven by the decision files
    in `decisions_dir` (phrases.txt, latent.tsv, facets.tsv, kinds.tsv,
    properties.tsv). Returns (staged list, warnings)."""
    directory = Path(decisions_dir)
    phrases = load_phrases(directory / "phrases.txt")
    latent = load_latent(directory / "latent.tsv")
    overrides, space_labels, time_labels = load_facets(directory / "facets.tsv")
    kinds = load_kinds(directory / "kinds.tsv")
    properties = load_properties(directory / "properties.tsv")

    config = FacetConfig(
        space_roots=resolve_facet_roots(core, space_labels, language),
        time_roots=resolve_facet_roots(core, time_labels, language),
        language=language,
    )
    all_labels: set[str] = set()
    staged: list[StagedCQ] = []
    for cq in cqs:
        cq = to_kernel(cq, phrases=phrases, latent=latent.get(cq.id, []) + latent.get("*", []))
        all_labels.update(cq.labels())
        staged.append(cq)
    warnings: list[str] = []
    finished: list[StagedCQ] = []
    for cq in staged:
        cq = to_analyzed(cq, core, config, overrides, strict=strict)
        cq = to_classified(cq, kinds)
        cq, cq_warnings = to_attributed(cq, properties, known_ranges=all_labels)
        warnings.extend(cq_warnings)
        finished.append(cq)
    return finished, warnings


def dump_staged(cqs: list[StagedCQ]) -> str:
    """Line-oriented dump of every stage, stable across replays."""
    out: list[str] = []
    for cq in cqs:
        out.append(f"== {cq.id}")
        out.append(f"raw: {cq.raw}")
        kernel = ", ".join(
            k.text + (" (latent)" if k.latent else "") for k in cq.kernel
        )
        out.append(f"kernel: {kernel}")
        if cq.analyzed:
            out.append("analyzed:")
            for label in cq.labels():
                out.append(f"  {label}: {cq.analyzed[label]} [{cq.facet_basis.get(label, 'heuristic')}]")
        if cq.classified:
            out.append("classified:")
            for label in cq.labels():
                out.append(f"  {label}: {cq.classified[label]}")
        if cq.attributed:
            lines = []
            for label in cq.labels():
                specs = cq.attributed.get(label, ())
                if specs:
                    rendered = "; ".join(f"{s.name} -> {s.range} ({s.kind})" for s in specs)
                    lines.append(f"  {label}: {rendered}")
            out.append("attributed:")
            out.extend(lines)
        out.append("")
    return "\n".join(out)
