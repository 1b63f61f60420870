"""Hierarchy extraction from parsed ontology documents.

An informal ontology is three acyclic hierarchies (classes, object
properties, data properties) of concept candidates: labeled, glossed nodes
whose concepts have not yet been resolved against the concept core.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import turtle
from .core import fold
from .turtle import RDF_TYPE, Document, Literal

CLASS = "class"
OBJECT_PROPERTY = "object-property"
DATA_PROPERTY = "data-property"
HIERARCHY_KINDS = (CLASS, OBJECT_PROPERTY, DATA_PROPERTY)

RDFS = "http://www.w3.org/2000/01/rdf-schema#"
OWL = "http://www.w3.org/2002/07/owl#"
RDFS_SUBCLASS = RDFS + "subClassOf"
RDFS_SUBPROPERTY = RDFS + "subPropertyOf"
RDFS_LABEL = RDFS + "label"
RDFS_COMMENT = RDFS + "comment"
RDFS_IS_DEFINED_BY = RDFS + "isDefinedBy"
RDFS_DOMAIN = RDFS + "domain"
RDFS_RANGE = RDFS + "range"
RDFS_CLASS = RDFS + "Class"
OWL_CLASS = OWL + "Class"
OWL_OBJECT_PROPERTY = OWL + "ObjectProperty"
OWL_DATATYPE_PROPERTY = OWL + "DatatypeProperty"
OWL_ONTOLOGY = OWL + "Ontology"
OWL_IMPORTS = OWL + "imports"

_KIND_OF_TYPE = {
    OWL_CLASS: CLASS,
    RDFS_CLASS: CLASS,
    OWL_OBJECT_PROPERTY: OBJECT_PROPERTY,
    OWL_DATATYPE_PROPERTY: DATA_PROPERTY,
}


class CyclicHierarchy(Exception):
    def __init__(self, kind: str, iris: list[str]):
        super().__init__(f"{kind} hierarchy contains a cycle through: {', '.join(iris)}")
        self.kind = kind
        self.iris = iris


def in_namespace(term: str, namespace: str) -> bool:
    if term == namespace:
        return True
    if namespace.endswith(("#", "/")):
        return term.startswith(namespace)
    return term.startswith(namespace + "#") or term.startswith(namespace + "/")


def local_name(iri: str) -> str:
    for sep in ("#", "/", ":"):
        if sep in iri:
            tail = iri.rsplit(sep, 1)[1]
            if tail:
                return tail
    return iri


@dataclass
class ConceptCandidate:
    """One node of an informal hierarchy, carrying every label it was given."""

    iri: str
    kind: str
    labels: tuple[tuple[str, str], ...] = ()  # (text, language tag or "")
    gloss: str = ""
    parents: tuple[str, ...] = ()  # parent IRIs within the same hierarchy
    domains: tuple[str, ...] = ()
    ranges: tuple[str, ...] = ()

    def label_for(self, language: str) -> str:
        """The label in `language`, else an untagged label, else any label,
        else the IRI local name."""
        for text, lang in self.labels:
            if lang == language:
                return text
        for text, lang in self.labels:
            if lang == "":
                return text
        if self.labels:
            return self.labels[0][0]
        return local_name(self.iri)


@dataclass
class InformalOntology:
    iri: str
    doc: Document
    hierarchies: dict = field(default_factory=dict)  # kind -> {iri: ConceptCandidate}

    def candidates(self, kind: str) -> list[ConceptCandidate]:
        return list(self.hierarchies.get(kind, {}).values())

    def candidate(self, kind: str, iri: str) -> ConceptCandidate | None:
        return self.hierarchies.get(kind, {}).get(iri)

    def size(self, kind: str) -> int:
        return len(self.hierarchies.get(kind, {}))

    def imports(self) -> list[str]:
        return [o for _, p, o in self.doc.triples if p == OWL_IMPORTS and isinstance(o, str)]


def _literal_texts(doc: Document, subject: str, predicate: str) -> list[Literal]:
    return [o for o in doc.objects(subject, predicate) if isinstance(o, Literal)]


def extract(doc: Document, iri: str) -> InformalOntology:
    """Build the three hierarchies from a parsed document.

    Nodes are declared via rdf:type; undeclared subjects/objects of
    rdfs:subClassOf in the ontology's own namespace are taken to be classes.
    Hierarchy edges pointing outside the document's own declarations (for
    example a parent in an imported vocabulary) are dropped, which makes
    those nodes forest roots.
    """
    kind_of: dict[str, str] = {}
    declaration_order: list[str] = []

    def declare(node: str, kind: str) -> None:
        if node not in kind_of:
            kind_of[node] = kind
            declaration_order.append(node)

    for s, p, o in doc.triples:
        if p == RDF_TYPE and isinstance(o, str) and o in _KIND_OF_TYPE:
            declare(s, _KIND_OF_TYPE[o])
    for s, p, o in doc.triples:
        if p == RDFS_SUBCLASS and isinstance(o, str):
            if in_namespace(s, iri):
                declare(s, CLASS)
            if in_namespace(o, iri):
                declare(o, CLASS)

    parents: dict[str, list[str]] = {node: [] for node in kind_of}
    for s, p, o in doc.triples:
        if not isinstance(o, str):
            continue
        if p == RDFS_SUBCLASS and kind_of.get(s) == CLASS and kind_of.get(o) == CLASS:
            if o not in parents[s]:
                parents[s].append(o)
        elif p == RDFS_SUBPROPERTY:
            if (
                kind_of.get(s) in (OBJECT_PROPERTY, DATA_PROPERTY)
                and kind_of.get(o) == kind_of.get(s)
                and o not in parents[s]
            ):
                parents[s].append(o)

    ontology = InformalOntology(iri=iri, doc=doc, hierarchies={kind: {} for kind in HIERARCHY_KINDS})
    for node in declaration_order:
        kind = kind_of[node]
        labels = tuple(
            (lit.value, lit.lang or "") for lit in _literal_texts(doc, node, RDFS_LABEL)
        )
        gloss_parts = [lit.value for lit in _literal_texts(doc, node, RDFS_COMMENT)]
        gloss_parts += [lit.value for lit in _literal_texts(doc, node, RDFS_IS_DEFINED_BY)]
        candidate = ConceptCandidate(
            iri=node,
            kind=kind,
            labels=labels,
            gloss=" ".join(part.strip() for part in gloss_parts if part.strip()),
            parents=tuple(parents[node]),
            domains=tuple(o for o in doc.objects(node, RDFS_DOMAIN) if isinstance(o, str)),
            ranges=tuple(o for o in doc.objects(node, RDFS_RANGE) if isinstance(o, str)),
        )
        ontology.hierarchies[kind][node] = candidate

    for kind in HIERARCHY_KINDS:
        _check_acyclic(ontology, kind)
    return ontology


def _check_acyclic(ontology: InformalOntology, kind: str) -> None:
    nodes = ontology.hierarchies[kind]
    pending = {iri: len(c.parents) for iri, c in nodes.items()}
    children: dict[str, list[str]] = {iri: [] for iri in nodes}
    for iri, candidate in nodes.items():
        for parent in candidate.parents:
            children[parent].append(iri)
    ready = [iri for iri, n in pending.items() if n == 0]
    emitted = 0
    while ready:
        node = ready.pop()
        emitted += 1
        for child in children[node]:
            pending[child] -= 1
            if pending[child] == 0:
                ready.append(child)
    if emitted != len(nodes):
        cyclic = sorted(iri for iri, n in pending.items() if n > 0)
        raise CyclicHierarchy(kind, cyclic)


def parse_ontology(text: str, base_iri: str) -> InformalOntology:
    """Parse a Turtle-subset document and extract its hierarchies."""
    return extract(turtle.parse(text, base=base_iri), base_iri)


def iterate_top_down(ontology: InformalOntology, kind: str, language: str = "en") -> list[ConceptCandidate]:
    """Every parent before all of its children; siblings in label order.

    Deterministic: ties are broken by the candidate's label for `language`,
    then by IRI.
    """
    nodes = ontology.hierarchies.get(kind, {})
    pending = {iri: len(c.parents) for iri, c in nodes.items()}
    children: dict[str, list[str]] = {iri: [] for iri in nodes}
    for iri, candidate in nodes.items():
        for parent in candidate.parents:
            children[parent].append(iri)

    def sort_key(iri: str):
        return (fold(nodes[iri].label_for(language)), iri)

    ready = sorted((iri for iri, n in pending.items() if n == 0), key=sort_key)
    order: list[ConceptCandidate] = []
    while ready:
        node = ready.pop(0)
        order.append(nodes[node])
        newly = []
        for child in children[node]:
            pending[child] -= 1
            if pending[child] == 0:
                newly.append(child)
        if newly:
            ready = sorted(ready + newly, key=sort_key)
    return order
