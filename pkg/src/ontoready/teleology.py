"""Fixed top-level distinctions and the relations legal between them.

The lattice is immutable at runtime: Anything at the top, Object / Function /
Action below it, Producer and Consumer as refinements of Function.  Grounding
a domain model means mapping every node to one of these distinctions and every
relation to the unique relation kind whose signature covers its endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from enum import Enum


class Distinction(Enum):
    ANYTHING = "Anything"
    OBJECT = "Object"
    FUNCTION = "Function"
    ACTION = "Action"
    PRODUCER = "Producer"
    CONSUMER = "Consumer"

    def __str__(self) -> str:
        return self.value


# Immediate generalization of each distinction; ANYTHING is the top.
_PARENT = {
    Distinction.OBJECT: Distinction.ANYTHING,
    Distinction.FUNCTION: Distinction.ANYTHING,
    Distinction.ACTION: Distinction.ANYTHING,
    Distinction.PRODUCER: Distinction.FUNCTION,
    Distinction.CONSUMER: Distinction.FUNCTION,
}


class RelationKind(Enum):
    OBJECT_TO_OBJECT = "ObjectToObjectRelation"
    OBJECT_FUNCTION = "ObjectFunction"
    FUNCTION_ACTION = "FunctionAction"
    OBJECT_ACTION = "ObjectAction"

    def __str__(self) -> str:
        return self.value


# (domain, range) signature of each relation kind.  The four signatures are
# pairwise non-overlapping under subsumption, so lookup is unambiguous.
SIGNATURES: dict[RelationKind, tuple[Distinction, Distinction]] = {
    RelationKind.OBJECT_TO_OBJECT: (Distinction.OBJECT, Distinction.OBJECT),
    RelationKind.OBJECT_FUNCTION: (Distinction.OBJECT, Distinction.FUNCTION),
    RelationKind.FUNCTION_ACTION: (Distinction.FUNCTION, Distinction.ACTION),
    RelationKind.OBJECT_ACTION: (Distinction.OBJECT, Distinction.ACTION),
}


def subsumes(upper: Distinction, lower: Distinction) -> bool:
    """Reflexive-transitive subsumption over the fixed lattice."""
    node: Distinction | None = lower
    while node is not None:
        if node is upper:
            return True
        node = _PARENT.get(node)
    return False


def relation_kind_for(domain: Distinction, range_: Distinction) -> RelationKind | None:
    """The unique relation kind whose signature covers (domain, range), if any."""
    for kind, (sig_domain, sig_range) in SIGNATURES.items():
        if subsumes(sig_domain, domain) and subsumes(sig_range, range_):
            return kind
    return None


@dataclass(frozen=True)
class ThingContext:
    """Reference context a domain model is built against.

    Carried as metadata only; it does not constrain which concepts are
    admissible in the model.
    """

    domain: str
    spatial: str = ""
    start: date | None = None
    end: date | None = None

    def __post_init__(self) -> None:
        if self.start is not None and self.end is not None and self.start > self.end:
            raise ValueError(f"context interval ends before it starts: {self.start} > {self.end}")


def dump_lattice() -> str:
    """Fixed textual rendering of the distinction lattice and relation kinds."""
    lines = [
        "Anything",
        "├── Object",
        "├── Function",
        "│   ├── Producer",
        "│   └── Consumer",
        "└── Action",
        "",
        "relations:",
    ]
    for kind, (sig_domain, sig_range) in SIGNATURES.items():
        lines.append(f"  {kind.value}: {sig_domain.value} -> {sig_range.value}")
    lines.append("")
    lines.append("context: Thing = (domain, spatial scope, temporal scope)")
    return "\n".join(lines) + "\n"
