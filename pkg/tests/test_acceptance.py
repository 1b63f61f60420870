"""Release gate: one test per core guarantee, each with an explicit time
budget and, where the logic is subtle, an independent brute-force oracle.

Run with -s to see the verdict lines. Every test prints exactly one
"criterion N (...): PASS/FAIL" line; a FAIL re-raises the underlying error.
"""

import random
import time
from contextlib import contextmanager
from dataclasses import replace
from itertools import product

import pytest

from ontoready import turtle
from ontoready.annotation import (
    AcceptFirst,
    AnnotationSession,
    AnnotationSheet,
    DecisionScript,
    ValidationFailed,
    import_sheet,
)
from ontoready.catalog import compute_incoming_links, load_manifest, rank_catalog
from ontoready.cli import main
from ontoready.core import CycleDetected, KnowledgeCore
from ontoready.cq import (
    DATA_PROPERTY,
    FACETS,
    KINDS,
    OBJECT_PROPERTY,
    EmptyKernel,
    FacetConfig,
    PropertySpec,
    StagedCQ,
    default_stopwords,
    dump_staged,
    parse_cq_file,
    run_pipeline,
    to_analyzed,
    to_attributed,
    to_classified,
    to_kernel,
)
from ontoready.etg import (
    ERModel,
    ERNode,
    ERRelation,
    UngroundableRelation,
    build_er,
    camel_case,
    ground_to_ft,
    load_context,
    load_structure,
)
from ontoready.ontology import (
    OWL_CLASS,
    RDFS_COMMENT,
    RDFS_LABEL,
    RDFS_SUBCLASS,
    extract,
    parse_ontology,
)
from ontoready.teleology import (
    SIGNATURES,
    Distinction,
    RelationKind,
    ThingContext,
    relation_kind_for,
    subsumes,
)
from ontoready.turtle import RDF_TYPE, Document, Literal


@contextmanager
def gate(number: int, name: str, budget: float):
    start = time.perf_counter()
    ok = False
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed < budget, f"took {elapsed:.2f}s, budget is {budget}s"
        ok = True
    finally:
        print(f"criterion {number} ({name}): {'PASS' if ok else 'FAIL'}")


# ---------------------------------------------------------------- criterion 1


def test_criterion_1_reuse_readiness_idempotence(fixtures, seed_core, tourism_ontology):
    """Annotate, import, re-annotate: the second pass must be matches only,
    and every label must land on the GID the first import produced."""
    with gate(1, "reuse-readiness idempotence", 1.0):
        script = DecisionScript.load(fixtures / "decisions" / "tourism.tsv")
        first = AnnotationSession(seed_core, tourism_ontology)
        sheet = first.run(script)
        assert len(sheet.records) == 15
        mapping = first.finalize()

        resolved = {
            (r.hierarchy_kind, r.label): mapping.get(r.gid, r.gid)
            for r in sheet.records
        }
        second = AnnotationSession(seed_core, tourism_ontology).run(AcceptFirst())
        assert len(second.records) == 15
        assert all(r.is_match for r in second.records)
        assert second.placeholders() == []
        for record in second.records:
            assert record.gid == resolved[(record.hierarchy_kind, record.label)]


# ---------------------------------------------------------------- criterion 2


def _random_informal(rng: random.Random, index: int):
    """A small class hierarchy with parents always declared earlier, so the
    document is a forest by construction."""
    iri = f"http://example.org/generated/{index}"
    ns = iri + "#"
    doc = Document(base=iri)
    labels = []
    for i in range(rng.randint(1, 12)):
        subject = f"{ns}c{i}"
        label = f"notion {index}-{i}"
        doc.triples.append((subject, RDF_TYPE, OWL_CLASS))
        doc.triples.append((subject, RDFS_LABEL, Literal(label, lang="en")))
        if labels and rng.random() < 0.6:
            parent = rng.randrange(len(labels))
            doc.triples.append((subject, RDFS_SUBCLASS, f"{ns}c{parent}"))
            gloss = f"a {labels[parent]} distinguished by marker {i}"
        else:
            gloss = f"a root notion numbered {i}"
        doc.triples.append((subject, RDFS_COMMENT, Literal(gloss, lang="en")))
        labels.append(label)
    return extract(doc, iri), labels


def test_criterion_2_placeholder_discipline():
    """Across randomized ontology/core pairs, new-concept rows must number
    -1, -2, ... in first-appearance order, and a sheet with a gap in that
    sequence must be rejected without touching the core."""
    with gate(2, "placeholder discipline", 30.0):
        rng = random.Random(1002)
        corrupted_checked = 0
        for index in range(220):
            ontology, labels = _random_informal(rng, index)
            core = KnowledgeCore()
            core.ensure_language("en")
            for label in labels:
                if rng.random() < 0.3:
                    gid = core.create_concept(frozenset(), gloss=f"seeded sense of {label}")
                    core.attach_sense(gid, "en", label, 1)

            sheet = AnnotationSession(core, ontology).run(AcceptFirst())
            negatives = []
            for record in sheet.records:
                if record.gid < 0 and record.gid not in negatives:
                    negatives.append(record.gid)
            assert negatives == list(range(-1, -len(negatives) - 1, -1))

            if not negatives:
                continue
            # open a gap: shift the deepest placeholder down by one everywhere
            deepest = negatives[-1]
            records = [
                replace(
                    r,
                    gid=deepest - 1 if r.gid == deepest else r.gid,
                    parent_gid=deepest - 1 if r.parent_gid == deepest else r.parent_gid,
                )
                for r in sheet.records
            ]
            corrupted = AnnotationSheet(meta=sheet.meta, records=records)
            before = core.dumps()
            with pytest.raises(ValidationFailed) as err:
                import_sheet(corrupted, core)
            assert any(v.code == "PLACEHOLDER_SEQUENCE" for v in err.value.violations)
            assert core.dumps() == before
            corrupted_checked += 1
        assert corrupted_checked >= 200


# ---------------------------------------------------------------- criterion 3


def _reaches(shadow: dict, start: int, goal: int) -> bool:
    stack, seen = [start], set()
    while stack:
        node = stack.pop()
        if node == goal:
            return True
        if node in seen:
            continue
        seen.add(node)
        stack.extend(shadow[node])
    return False


def test_criterion_3_dag_safety():
    """Random create/add_hypernym sequences: an edge is rejected exactly when
    a DFS over a shadow copy of the parent links finds the would-be cycle,
    and the surviving graph always admits a parents-first topological order."""
    with gate(3, "hierarchy cycle rejection", 30.0):
        rng = random.Random(1003)
        rejected_total = 0
        for _ in range(1000):
            core = KnowledgeCore()
            shadow: dict[int, set[int]] = {}
            for _ in range(rng.randint(2, 14)):
                gids = sorted(shadow)
                if not gids or rng.random() < 0.5:
                    parents = set(rng.sample(gids, k=min(len(gids), rng.randint(0, 2))))
                    gid = core.create_concept(frozenset(parents), gloss=f"synthetic concept {len(gids)}")
                    shadow[gid] = set(parents)
                else:
                    child, parent = rng.choice(gids), rng.choice(gids)
                    # adding child -> parent cycles iff child is already
                    # reachable upward from parent (self-loops included)
                    forms_cycle = _reaches(shadow, parent, child)
                    try:
                        core.add_hypernym(child, parent)
                    except CycleDetected:
                        rejected_total += 1
                        assert forms_cycle
                    else:
                        assert not forms_cycle
                        shadow[child].add(parent)
            order = core.topological_order()
            assert sorted(order) == sorted(shadow)
            position = {gid: i for i, gid in enumerate(order)}
            for child, parents in shadow.items():
                for parent in parents:
                    assert position[parent] < position[child]
        assert rejected_total > 0


# ---------------------------------------------------------------- criterion 4

# spelled out independently of the implementation's parent table
_LINEAGE = {
    Distinction.ANYTHING: frozenset({Distinction.ANYTHING}),
    Distinction.OBJECT: frozenset({Distinction.OBJECT, Distinction.ANYTHING}),
    Distinction.FUNCTION: frozenset({Distinction.FUNCTION, Distinction.ANYTHING}),
    Distinction.ACTION: frozenset({Distinction.ACTION, Distinction.ANYTHING}),
    Distinction.PRODUCER: frozenset(
        {Distinction.PRODUCER, Distinction.FUNCTION, Distinction.ANYTHING}
    ),
    Distinction.CONSUMER: frozenset(
        {Distinction.CONSUMER, Distinction.FUNCTION, Distinction.ANYTHING}
    ),
}


def _oracle_kind(domain: Distinction, range_: Distinction):
    matching = [
        kind
        for kind, (sig_domain, sig_range) in SIGNATURES.items()
        if sig_domain in _LINEAGE[domain] and sig_range in _LINEAGE[range_]
    ]
    assert len(matching) <= 1, f"overlapping signatures for {domain}/{range_}"
    return matching[0] if matching else None


def test_criterion_4_distinction_lattice_exhaustive():
    """All 36 ordered distinction pairs against a signature-enumeration
    oracle, plus the partial-order laws for subsumption."""
    with gate(4, "distinction lattice, exhaustive", 1.0):
        members = list(Distinction)
        assert len(members) == 6
        for domain, range_ in product(members, repeat=2):
            assert relation_kind_for(domain, range_) is _oracle_kind(domain, range_)

        for a in members:
            assert subsumes(a, a)
        for a, b in product(members, repeat=2):
            assert subsumes(a, b) == (a in _LINEAGE[b])
            if subsumes(a, b) and subsumes(b, a):
                assert a is b
        for a, b, c in product(members, repeat=3):
            if subsumes(a, b) and subsumes(b, c):
                assert subsumes(a, c)


# ---------------------------------------------------------------- criterion 5


def _trio(relations) -> ERModel:
    nodes = {
        "person": ERNode("person", "object", gid=101),
        "professor": ERNode("professor", "function", gid=102),
        "teach": ERNode("teach", "action", gid=103),
    }
    rels = tuple(ERRelation(name, source, target) for name, source, target in relations)
    return ERModel(ThingContext(domain="education"), nodes, rels)


def test_criterion_5_person_professor_teach():
    with gate(5, "person/professor/teach grounding", 1.0):
        grounded = ground_to_ft(
            _trio([("actsAs", "person", "professor"), ("performs", "professor", "teach")])
        )
        by_name = {r.name: r.grounding for r in grounded.etg.relations}
        assert by_name["actsAs"] is RelationKind.OBJECT_FUNCTION
        assert by_name["performs"] is RelationKind.FUNCTION_ACTION

        with pytest.raises(UngroundableRelation) as err:
            ground_to_ft(_trio([("performedBy", "teach", "professor")]))
        assert err.value.offenders == (("performedBy", "action", "function"),)


# ---------------------------------------------------------------- criterion 6


def test_criterion_6_cq_determinism_and_monotonicity(fixtures):
    """Two cold runs of the staged pipeline dump byte-identical output, and
    each stage only ever adds to what the previous stages established."""
    with gate(6, "CQ pipeline determinism and monotonicity", 30.0):
        text = (fixtures / "cqs" / "tourism.cqs").read_text(encoding="utf-8")
        decisions = fixtures / "decisions" / "cq"
        snapshot = fixtures / "workspace" / "core.snapshot"

        dumps = []
        for _ in range(2):
            core = KnowledgeCore.load(snapshot)
            staged, _ = run_pipeline(parse_cq_file(text), core, decisions)
            dumps.append(dump_staged(staged).encode("utf-8"))
        assert dumps[0] == dumps[1]

        core = KnowledgeCore.load(snapshot)
        staged, _ = run_pipeline(parse_cq_file(text), core, decisions)
        assert len(staged) >= 5
        assert any("malga" in cq.labels() for cq in staged)

        rng = random.Random(2006)
        content = ["malga", "hut", "cheese", "season", "guide", "trail",
                   "pasture", "permit", "shelter", "herd"]
        noise = sorted(default_stopwords())[:25]
        config = FacetConfig(space_roots=(2,), time_roots=(4,))
        checked = 0
        while checked < 200:
            words = [
                rng.choice(content if rng.random() < 0.6 else noise)
                for _ in range(rng.randint(1, 8))
            ]
            cq = StagedCQ(id=f"r{checked}", raw=" ".join(words))
            latent = ["facility"] if rng.random() < 0.2 else []
            try:
                kerneled = to_kernel(cq, latent=latent)
            except EmptyKernel:
                continue
            labels = kerneled.labels()
            assert len(set(labels)) == len(labels)

            overrides = {l: rng.choice(FACETS) for l in labels if rng.random() < 0.3}
            analyzed = to_analyzed(kerneled, core, config, overrides)
            assert analyzed.raw == cq.raw
            assert analyzed.kernel == kerneled.kernel
            assert set(analyzed.analyzed) == set(labels)
            for label, facet in overrides.items():
                assert analyzed.analyzed[label] == facet
                assert analyzed.facet_basis[label] == "override"

            classified = to_classified(analyzed, {l: rng.choice(KINDS) for l in labels})
            assert classified.kernel == kerneled.kernel
            assert classified.analyzed == analyzed.analyzed
            assert classified.facet_basis == analyzed.facet_basis
            assert set(classified.classified) == set(labels)

            props = {
                l: (PropertySpec("note", DATA_PROPERTY, "string"),)
                for l in labels
                if rng.random() < 0.25
            }
            attributed, _ = to_attributed(classified, props)
            assert attributed.kernel == kerneled.kernel
            assert attributed.analyzed == classified.analyzed
            assert attributed.classified == classified.classified
            assert set(attributed.attributed) == set(labels)
            checked += 1


# ---------------------------------------------------------------- criterion 7


def _in_ns(term: str, namespace: str) -> bool:
    if term == namespace:
        return True
    if namespace.endswith(("#", "/")):
        return term.startswith(namespace)
    return term.startswith(namespace + "#") or term.startswith(namespace + "/")


def test_criterion_7_catalog_ranking(fixtures, catalog_dir):
    """rank_catalog against a from-scratch recount of incoming references."""
    with gate(7, "catalog ranking", 1.0):
        entries = load_manifest(catalog_dir / "manifest.tsv")
        assert len(entries) == 5
        iris = [e.iri for e in entries]

        incoming = {iri: 0 for iri in iris}
        for entry in entries:
            doc = turtle.parse(
                (catalog_dir / entry.path).read_text(encoding="utf-8"), base=entry.iri
            )
            referenced = set()
            for s, p, o in doc.triples:
                terms = [s, p] + ([o] if isinstance(o, str) else [])
                for term in terms:
                    owners = [iri for iri in iris if _in_ns(term, iri)]
                    if not owners:
                        continue
                    owner = max(owners, key=len)
                    if owner != entry.iri:
                        referenced.add(owner)
            for target in referenced:
                incoming[target] += 1

        ranked = rank_catalog(compute_incoming_links(entries, catalog_dir))
        assert [e.iri for e in ranked] == sorted(iris, key=lambda i: (-incoming[i], i))
        assert {e.iri: e.incoming_links for e in ranked} == incoming


# ---------------------------------------------------------------- criterion 8


def test_criterion_8_end_to_end_golden_run(golden_ws, fixtures):
    """The whole command sequence on a fresh workspace reproduces the
    committed model byte for byte, and ingesting that model reads back the
    same node and edge counts the grounded model carried."""
    with gate(8, "end-to-end golden run", 5.0):
        ttl = str(golden_ws / "catalog" / "tourism.ttl")
        sheet = str(golden_ws / "sheets" / "tourism.csv")
        steps = [
            ("catalog", "rank"),
            ("annotate", ttl, "--decisions", str(golden_ws / "decisions" / "tourism.tsv")),
            ("sheet", "validate", sheet),
            ("sheet", "import", sheet),
            ("cq", "run", str(golden_ws / "cqs" / "tourism.cqs"),
             "--decisions", str(golden_ws / "decisions")),
            ("er", "build"),
            ("etg", "formalize"),
            ("ground",),
            ("export",),
        ]
        for argv in steps:
            assert main(["--workspace", str(golden_ws), *argv]) == 0, argv

        exported = (golden_ws / "models" / "tourism.ttl").read_text(encoding="utf-8")
        golden = (fixtures / "golden" / "domain.ttl").read_text(encoding="utf-8")
        assert exported == golden

        # rebuild the grounded model from the final core and compare counts
        core = KnowledgeCore.load(golden_ws / "core.snapshot")
        cqs = parse_cq_file((golden_ws / "cqs" / "tourism.cqs").read_text(encoding="utf-8"))
        staged, _ = run_pipeline(cqs, core, golden_ws / "decisions")
        er = build_er(
            staged,
            load_context(golden_ws / "decisions" / "context.tsv"),
            core,
            load_structure(golden_ws / "decisions" / "structure.tsv"),
        )
        assert er.formal

        ingested = parse_ontology(exported, "urn:model:tourism")
        assert ingested.size("class") == len(er.nodes)
        class_edges = sum(
            len(candidate.parents)
            for candidate in ingested.hierarchies["class"].values()
        )
        assert class_edges == sum(1 for node in er.nodes.values() if node.parent)

        object_names = {camel_case(r.name) for r in er.relations}
        data_names = set()
        for node in er.nodes.values():
            for spec in node.properties:
                target = object_names if spec.kind == OBJECT_PROPERTY else data_names
                target.add(camel_case(spec.name))
        assert ingested.size("object-property") == len(object_names)
        assert ingested.size("data-property") == len(data_names)


# ---------------------------------------------------------------- criterion 9


def test_criterion_9_parser_round_trip(fixtures):
    with gate(9, "turtle round-trip", 5.0):
        paths = sorted(fixtures.rglob("*.ttl"))
        assert len(paths) >= 6
        for path in paths:
            first = turtle.parse(path.read_text(encoding="utf-8"))
            second = turtle.parse(turtle.serialize(first))
            assert second.triple_set() == first.triple_set(), path.name
