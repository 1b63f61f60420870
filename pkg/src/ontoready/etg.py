"""From attributed questions to a grounded, exportable domain model.

The path is: collect the classified labels into three hierarchies (objects,
functions, actions) plus expert-declared relations between them; mint GIDs
for every node the knowledge core cannot already name; map the hierarchies
and relations onto the fixed teleology; emit the result as a small OWL
document our own ingest can read back.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path

from .annotation import (
    NEW,
    SKIP,
    AnnotationError,
    AnnotationRecord,
    AnnotationSheet,
    MissingGloss,
    SessionMeta,
    import_sheet,
)
from .core import KnowledgeCore, fold
from .cq import KINDS, DecisionFileError, PropertySpec, StagedCQ
from .ontology import (
    OWL_CLASS,
    OWL_DATATYPE_PROPERTY,
    OWL_OBJECT_PROPERTY,
    OWL_ONTOLOGY,
    RDFS,
    RDFS_DOMAIN,
    RDFS_LABEL,
    RDFS_RANGE,
    RDFS_SUBCLASS,
    OWL,
)
from .teleology import Distinction, RelationKind, ThingContext, relation_kind_for
from .turtle import RDF_TYPE, XSD_INTEGER, Document, Literal

XSD = "http://www.w3.org/2001/XMLSchema#"

# Annotation vocabulary used by exported domain models.
DMV = "http://example.org/ns/domain-model#"
DMV_GID = DMV + "gid"
DMV_DISTINCTION = DMV + "distinction"
DMV_GROUNDING = DMV + "grounding"
DMV_DOMAIN = DMV + "domainOfInterest"
DMV_SPATIAL = DMV + "spatialScope"
DMV_TEMPORAL_START = DMV + "temporalStart"
DMV_TEMPORAL_END = DMV + "temporalEnd"

REFINEMENTS = {
    "producer": Distinction.PRODUCER,
    "consumer": Distinction.CONSUMER,
}

_KIND_DISTINCTION = {
    "object": Distinction.OBJECT,
    "function": Distinction.FUNCTION,
    "action": Distinction.ACTION,
}


class ETGError(Exception):
    pass


class KindMismatch(ETGError):
    def __init__(self, child: str, parent: str, child_kind: str, parent_kind: str):
        super().__init__(
            f"edge {child!r} -> {parent!r} crosses hierarchies ({child_kind} vs {parent_kind})"
        )
        self.child = child
        self.parent = parent


class DanglingRelation(ETGError):
    def __init__(self, relation: str, label: str):
        super().__init__(f"relation {relation!r} references unknown label {label!r}")
        self.relation = relation
        self.label = label


class UngroundableRelation(ETGError):
    """One or more relations whose endpoint kinds match no foundational signature."""

    def __init__(self, offenders: list[tuple[str, str, str]]):
        listing = "; ".join(f"{name}: {src} -> {dst}" for name, src, dst in offenders)
        super().__init__(f"no foundational relation covers: {listing}")
        self.offenders = tuple(offenders)


@dataclass(frozen=True)
class ERNode:
    label: str
    kind: str
    gid: int = 0  # 0 until resolved against the core
    parent: str = ""  # label within the same hierarchy; "" for roots
    facet: str = ""
    properties: tuple[PropertySpec, ...] = ()

    @property
    def resolved(self) -> bool:
        return self.gid > 0


@dataclass(frozen=True)
class ERRelation:
    name: str
    source: str
    target: str
    grounding: RelationKind | None = None


@dataclass(frozen=True)
class ERModel:
    """Three disjoint label forests plus the relations drawn between them.

    Node order is deterministic: hierarchies in object/function/action order,
    each walked top-down with siblings sorted by folded label.
    """

    context: ThingContext
    nodes: dict[str, ERNode] = field(default_factory=dict)
    relations: tuple[ERRelation, ...] = ()
    language: str = "en"

    def hierarchy(self, kind: str) -> list[ERNode]:
        return [node for node in self.nodes.values() if node.kind == kind]

    def unresolved(self) -> list[ERNode]:
        return [node for node in self.nodes.values() if not node.resolved]

    @property
    def formal(self) -> bool:
        return not self.unresolved()

    def with_gids(self, gids: dict[str, int]) -> "ERModel":
        nodes = {
            label: replace(node, gid=gids.get(label, node.gid))
            for label, node in self.nodes.items()
        }
        return replace(self, nodes=nodes)


# An ETG is an ER model whose every node carries a committed GID.
ETG = ERModel


def assert_formal(model: ERModel) -> None:
    missing = [node.label for node in model.unresolved()]
    if missing:
        raise ETGError(f"nodes without a GID: {', '.join(missing)}")


@dataclass(frozen=True)
class GroundedDomainModel:
    etg: ETG
    node_groundings: dict[str, Distinction]
    warnings: tuple[str, ...] = ()

    @property
    def context(self) -> ThingContext:
        return self.etg.context


@dataclass(frozen=True)
class StructureDecisions:
    edges: tuple[tuple[str, str], ...] = ()  # (child, parent)
    relations: tuple[tuple[str, str, str], ...] = ()  # (name, source, target)
    refinements: dict[str, Distinction] = field(default_factory=dict)


def load_structure(path: Path) -> StructureDecisions:
    """Read hierarchy edges, relations, and producer/consumer refinements.

    Lines are tab-separated: ``edge <child> <parent>``,
    ``relation <name> <source> <target>``, ``refine <label> <role>``.
    """
    edges: list[tuple[str, str]] = []
    relations: list[tuple[str, str, str]] = []
    refinements: dict[str, Distinction] = {}
    path = Path(path)
    if not path.exists():
        return StructureDecisions()
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [part.strip() for part in line.split("\t")]
        verb = parts[0]
        if verb == "edge" and len(parts) == 3:
            edges.append((fold(parts[1]), fold(parts[2])))
        elif verb == "relation" and len(parts) == 4:
            relations.append((parts[1], fold(parts[2]), fold(parts[3])))
        elif verb == "refine" and len(parts) == 3:
            role = parts[2]
            if role not in REFINEMENTS:
                raise DecisionFileError(f"unknown refinement {role!r}", number)
            refinements[fold(parts[1])] = REFINEMENTS[role]
        else:
            raise DecisionFileError(f"unrecognized structure line: {line!r}", number)
    return StructureDecisions(tuple(edges), tuple(relations), refinements)


def load_context(path: Path) -> ThingContext:
    """Read the reference context: domain, spatial scope, temporal interval."""
    domain = ""
    spatial = ""
    start: date | None = None
    end: date | None = None
    path = Path(path)
    if path.exists():
        for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [part.strip() for part in line.split("\t")]
            try:
                if parts[0] == "domain" and len(parts) == 2:
                    domain = parts[1]
                elif parts[0] == "spatial" and len(parts) == 2:
                    spatial = parts[1]
                elif parts[0] == "temporal" and len(parts) == 3:
                    start = date.fromisoformat(parts[1])
                    end = date.fromisoformat(parts[2])
                else:
                    raise DecisionFileError(f"unrecognized context line: {line!r}", number)
            except ValueError as err:
                raise DecisionFileError(str(err), number) from err
    return ThingContext(domain=domain, spatial=spatial, start=start, end=end)


def _check_forest(nodes: dict[str, ERNode]) -> None:
    # Each node has at most one parent by construction; only cycles remain.
    for label in nodes:
        seen = {label}
        current = nodes[label].parent
        while current:
            if current in seen:
                raise ETGError(f"hierarchy cycle through {current!r}")
            seen.add(current)
            current = nodes[current].parent


def _ordered(nodes: dict[str, ERNode]) -> dict[str, ERNode]:
    children: dict[str, list[str]] = {label: [] for label in nodes}
    roots: list[str] = []
    for label, node in nodes.items():
        if node.parent:
            children[node.parent].append(label)
        else:
            roots.append(label)
    ordered: dict[str, ERNode] = {}

    def walk(labels: list[str]) -> None:
        for label in sorted(labels, key=fold):
            ordered[label] = nodes[label]
            walk(children[label])

    for kind in KINDS:
        walk([label for label in roots if nodes[label].kind == kind])
    return ordered


def build_er(
    cqs: list[StagedCQ],
    context: ThingContext,
    core: KnowledgeCore,
    structure: StructureDecisions,
    language: str = "en",
) -> ERModel:
    """Assemble the entity-relationship model from fully attributed CQs.

    Every classified label becomes a node in the hierarchy of its kind; labels
    the core already knows carry their GID from the start.  Hierarchy edges
    and relations come entirely from the structure decisions.
    """
    kinds: dict[str, str] = {}
    facets: dict[str, str] = {}
    properties: dict[str, list[PropertySpec]] = {}
    for cq in cqs:
        for label in cq.labels():
            kind = cq.classified.get(label)
            if kind is None:
                raise ETGError(f"CQ {cq.id!r} is not classified (label {label!r})")
            if kinds.setdefault(label, kind) != kind:
                raise ETGError(f"label {label!r} classified as both {kinds[label]} and {kind}")
            facets.setdefault(label, cq.analyzed.get(label, ""))
            for spec in cq.attributed.get(label, ()):
                bucket = properties.setdefault(label, [])
                if spec not in bucket:
                    bucket.append(spec)

    parents: dict[str, str] = {}
    for child, parent in structure.edges:
        for end in (child, parent):
            if end not in kinds:
                raise ETGError(f"edge references unknown label {end!r}")
        if kinds[child] != kinds[parent]:
            raise KindMismatch(child, parent, kinds[child], kinds[parent])
        if child in parents:
            raise ETGError(f"label {child!r} has two parents")
        parents[child] = parent

    # a core without the language module simply has no matches yet
    can_search = core.has_language(language)
    nodes: dict[str, ERNode] = {}
    for label, kind in kinds.items():
        hits = core.search_synonymous(label, language) if can_search else []
        nodes[label] = ERNode(
            label=label,
            kind=kind,
            gid=hits[0].gid if hits else 0,
            parent=parents.get(label, ""),
            facet=facets[label],
            properties=tuple(properties.get(label, ())),
        )
    _check_forest(nodes)

    relations = []
    for name, source, target in structure.relations:
        for end in (source, target):
            if end not in nodes:
                raise DanglingRelation(name, end)
        relations.append(ERRelation(name=name, source=source, target=target))

    return ERModel(
        context=context,
        nodes=_ordered(nodes),
        relations=tuple(relations),
        language=language,
    )


def formalize_to_etg(
    er: ERModel,
    core: KnowledgeCore,
    policy,
    model_iri: str = "urn:model:er",
    annotator: str = "",
    created: str = "",
) -> tuple[ETG, AnnotationSheet]:
    """Give every unresolved node a committed GID, enriching the core.

    The ER model itself is the concept source: unresolved nodes are walked in
    model order, decided by the policy, and imported in one atomic step.  A
    model with no unresolved nodes is a fixpoint and returns an empty sheet.
    """
    meta = SessionMeta(
        ontology_iri=model_iri,
        language=er.language,
        annotator=annotator,
        created=created,
        core_revision=core.revision,
    )
    pending = er.unresolved()
    if not pending:
        return er, AnnotationSheet(meta=meta, records=())

    records: list[AnnotationRecord] = []
    assigned: dict[str, int] = {}
    placeholder = 0
    can_search = core.has_language(er.language)
    for node in pending:
        hits = core.search_synonymous(node.label, er.language) if can_search else []
        decision = policy.decide(node.kind, node.label, "", hits)
        if decision.verb == SKIP:
            raise ETGError(f"cannot skip {node.label!r}: every node needs a GID")
        parent_label = node.parent
        parent_gid = 0
        if parent_label:
            parent_node = er.nodes[parent_label]
            # top-down walk guarantees an unresolved parent was decided first
            parent_gid = parent_node.gid if parent_node.resolved else assigned[parent_label]
        if decision.verb == NEW:
            if not decision.gloss:
                raise MissingGloss(node.label)
            placeholder -= 1
            assigned[node.label] = placeholder
            records.append(
                AnnotationRecord(
                    label=node.label,
                    language=er.language,
                    gid=placeholder,
                    wsr=0,
                    parent_label=parent_label,
                    parent_gid=parent_gid,
                    gloss=decision.gloss,
                    hierarchy_kind=node.kind,
                    source_iri=model_iri,
                )
            )
        else:  # accept
            gid = decision.gid
            if gid <= 0:
                raise AnnotationError(f"accept for {node.label!r} needs a positive GID")
            if gid not in {hit.gid for hit in hits} and not decision.override:
                raise AnnotationError(
                    f"GID {gid} is not a synonymous match for {node.label!r}; "
                    "an override is required"
                )
            synset = core.synset(gid, er.language)
            if synset is None:
                wsr = 1
            else:
                wsr = synset.rank_of(node.label) or len(synset.words) + 1
            assigned[node.label] = gid
            records.append(
                AnnotationRecord(
                    label=node.label,
                    language=er.language,
                    gid=gid,
                    wsr=wsr,
                    parent_label=parent_label,
                    parent_gid=parent_gid,
                    gloss=decision.gloss,
                    hierarchy_kind=node.kind,
                    source_iri=model_iri,
                )
            )

    sheet = AnnotationSheet(meta=meta, records=tuple(records))
    mapping = import_sheet(sheet, core)
    gids = {
        label: mapping.get(gid, gid) for label, gid in assigned.items()
    }
    return er.with_gids(gids), sheet


def ground_to_ft(etg: ETG, refinements: dict[str, Distinction] | None = None) -> GroundedDomainModel:
    """Map hierarchies and relations onto the foundational distinctions.

    Functions may be refined to Producer or Consumer by decision; relation
    groundings are computed from the endpoint kinds and must match one of the
    four foundational signatures.
    """
    assert_formal(etg)
    refinements = refinements or {}
    groundings: dict[str, Distinction] = {}
    for label, node in etg.nodes.items():
        refined = refinements.get(label)
        if refined is not None:
            if node.kind != "function":
                raise ETGError(f"only functions can be refined; {label!r} is {node.kind}")
            groundings[label] = refined
        else:
            groundings[label] = _KIND_DISTINCTION[node.kind]
    for label in refinements:
        if label not in etg.nodes:
            raise ETGError(f"refinement references unknown label {label!r}")

    offenders: list[tuple[str, str, str]] = []
    grounded_relations: list[ERRelation] = []
    for relation in etg.relations:
        source = etg.nodes[relation.source]
        target = etg.nodes[relation.target]
        kind = relation_kind_for(_KIND_DISTINCTION[source.kind], _KIND_DISTINCTION[target.kind])
        if kind is None:
            offenders.append((relation.name, source.kind, target.kind))
        else:
            grounded_relations.append(replace(relation, grounding=kind))
    if offenders:
        raise UngroundableRelation(offenders)

    warnings = _producer_warnings(etg, groundings, grounded_relations)
    grounded_etg = replace(etg, relations=tuple(grounded_relations))
    return GroundedDomainModel(etg=grounded_etg, node_groundings=groundings, warnings=warnings)


def _producer_warnings(
    etg: ETG,
    groundings: dict[str, Distinction],
    relations: list[ERRelation],
) -> tuple[str, ...]:
    # A producer should act, and what it acts on should reach a consumer:
    # producer -FunctionAction-> action <-ObjectAction- object -ObjectFunction-> consumer.
    warnings: list[str] = []
    producers = sorted(label for label, d in groundings.items() if d is Distinction.PRODUCER)
    for producer in producers:
        actions = {
            r.target for r in relations
            if r.source == producer and r.grounding is RelationKind.FUNCTION_ACTION
        }
        if not actions:
            warnings.append(f"producer '{producer}' has no action link")
            continue
        participants = {
            r.source for r in relations
            if r.target in actions and r.grounding is RelationKind.OBJECT_ACTION
        }
        reaches_consumer = any(
            r.source in participants
            and r.grounding is RelationKind.OBJECT_FUNCTION
            and groundings.get(r.target) is Distinction.CONSUMER
            for r in relations
        )
        if not reaches_consumer:
            warnings.append(f"producer '{producer}' reaches no consumer")
    return tuple(warnings)


def dump_er(er: ERModel) -> str:
    """Plain-text rendering of an ER model; unresolved GIDs show as '?'."""
    lines = [f"domain: {er.context.domain}"]
    for kind in KINDS:
        nodes = er.hierarchy(kind)
        lines.append(f"{kind} hierarchy ({len(nodes)}):")
        for node in nodes:
            gid = str(node.gid) if node.resolved else "?"
            marker = f" < {node.parent}" if node.parent else ""
            lines.append(f"  {node.label} ({gid}){marker}")
            for spec in node.properties:
                lines.append(f"    {spec.name} -> {spec.range} ({spec.kind})")
    lines.append(f"relations ({len(er.relations)}):")
    for relation in er.relations:
        lines.append(f"  {relation.name}: {relation.source} -> {relation.target}")
    return "\n".join(lines) + "\n"


def dump_model(grounded: GroundedDomainModel) -> str:
    """Plain-text rendering of a grounded model, stable across runs."""
    context = grounded.context
    lines = [f"domain: {context.domain}"]
    if context.spatial:
        lines.append(f"spatial: {context.spatial}")
    if context.start is not None and context.end is not None:
        lines.append(f"temporal: {context.start.isoformat()} .. {context.end.isoformat()}")
    for kind in KINDS:
        nodes = grounded.etg.hierarchy(kind)
        lines.append(f"{kind} hierarchy -> {_KIND_DISTINCTION[kind].value}:")
        for node in nodes:
            marker = f" < {node.parent}" if node.parent else ""
            refined = grounded.node_groundings[node.label]
            suffix = f" [{refined.value}]" if refined is not _KIND_DISTINCTION[kind] else ""
            lines.append(f"  {node.label} ({node.gid}){marker}{suffix}")
    lines.append("relations:")
    for relation in grounded.etg.relations:
        kind = relation.grounding.value if relation.grounding else "?"
        lines.append(f"  {relation.name}: {relation.source} -> {relation.target} [{kind}]")
    if grounded.warnings:
        lines.append("warnings:")
        for warning in grounded.warnings:
            lines.append(f"  {warning}")
    return "\n".join(lines) + "\n"


def _capitalize(token: str) -> str:
    return token[0].upper() + token[1:] if token else token


def pascal_case(label: str) -> str:
    return "".join(_capitalize(token) for token in re.split(r"[^0-9A-Za-z]+", label) if token)


def camel_case(label: str) -> str:
    name = pascal_case(label)
    return name[0].lower() + name[1:] if name else name


def export_domain_model(grounded: GroundedDomainModel, model_iri: str = "urn:model:er") -> Document:
    """Emit the grounded model as a Turtle-subset OWL document.

    Every node becomes a class carrying its GID and distinction; relations
    become object properties carrying their foundational grounding; node
    attributions become datatype or object properties.  Re-ingesting the
    output reproduces the hierarchies.
    """
    ns = model_iri + "#"
    language = grounded.etg.language
    context = grounded.context
    triples: list = [(model_iri, RDF_TYPE, OWL_ONTOLOGY)]
    if context.domain:
        triples.append((model_iri, DMV_DOMAIN, Literal(context.domain)))
    if context.spatial:
        triples.append((model_iri, DMV_SPATIAL, Literal(context.spatial)))
    if context.start is not None:
        triples.append((model_iri, DMV_TEMPORAL_START, Literal(context.start.isoformat())))
    if context.end is not None:
        triples.append((model_iri, DMV_TEMPORAL_END, Literal(context.end.isoformat())))

    def class_iri(label: str) -> str:
        return ns + pascal_case(label)

    for label, node in grounded.etg.nodes.items():
        subject = class_iri(label)
        triples.append((subject, RDF_TYPE, OWL_CLASS))
        triples.append((subject, RDFS_LABEL, Literal(label, lang=language)))
        triples.append((subject, DMV_GID, Literal(str(node.gid), datatype=XSD_INTEGER)))
        triples.append((subject, DMV_DISTINCTION, Literal(grounded.node_groundings[label].value)))
        if node.parent:
            triples.append((subject, RDFS_SUBCLASS, class_iri(node.parent)))

    for relation in grounded.etg.relations:
        subject = ns + camel_case(relation.name)
        triples.append((subject, RDF_TYPE, OWL_OBJECT_PROPERTY))
        triples.append((subject, RDFS_LABEL, Literal(relation.name)))
        if relation.grounding is not None:
            triples.append((subject, DMV_GROUNDING, Literal(relation.grounding.value)))
        triples.append((subject, RDFS_DOMAIN, class_iri(relation.source)))
        triples.append((subject, RDFS_RANGE, class_iri(relation.target)))

    for label, node in grounded.etg.nodes.items():
        for spec in node.properties:
            subject = ns + camel_case(spec.name)
            if spec.kind == "data-property":
                triples.append((subject, RDF_TYPE, OWL_DATATYPE_PROPERTY))
                triples.append((subject, RDFS_LABEL, Literal(spec.name)))
                triples.append((subject, RDFS_DOMAIN, class_iri(label)))
                triples.append((subject, RDFS_RANGE, XSD + spec.range))
            else:
                triples.append((subject, RDF_TYPE, OWL_OBJECT_PROPERTY))
                triples.append((subject, RDFS_LABEL, Literal(spec.name)))
                triples.append((subject, RDFS_DOMAIN, class_iri(label)))
                if spec.range in grounded.etg.nodes:
                    triples.append((subject, RDFS_RANGE, class_iri(spec.range)))

    deduped = list(dict.fromkeys(triples))
    prefixes = {"m": ns, "dmv": DMV, "owl": OWL, "rdfs": RDFS, "xsd": XSD}
    return Document(triples=deduped, prefixes=prefixes, base=model_iri)
