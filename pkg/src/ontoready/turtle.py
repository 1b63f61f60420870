"""Parser and serializer for a strict Turtle subset.

Supported syntax: `@prefix` directives, IRIs in angle brackets, prefixed
names, the `a` keyword, predicate lists (`;`), object lists (`,`), quoted
string literals with optional language tags, bare integer literals, and `#`
comments.  Everything else (blank nodes, collections, typed literals,
`@base`, multi-line strings) is rejected with a position diagnostic.

Relative IRIs are resolved against the base IRI handed to `parse`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from urllib.parse import urljoin

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
XSD_INTEGER = "http://www.w3.org/2001/XMLSchema#integer"

_SCHEME = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")
_PN_PREFIX = re.compile(r"[A-Za-z][A-Za-z0-9_\-]*$")
_PN_LOCAL = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.\-]*$")
_LANGTAG = re.compile(r"[a-zA-Z]+(-[a-zA-Z0-9]+)*$")


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Literal:
    value: str
    lang: str | None = None
    datatype: str | None = None


@dataclass
class Document:
    """Triples in document order plus the prefix map used to write them.

    A triple is (subject IRI, predicate IRI, object), the object being an IRI
    string or a Literal.
    """

    triples: list = field(default_factory=list)
    prefixes: dict = field(default_factory=dict)
    base: str | None = None

    def triple_set(self) -> frozenset:
        return frozenset(self.triples)

    def objects(self, subject: str, predicate: str) -> list:
        return [o for s, p, o in self.triples if s == subject and p == predicate]

    def subjects_with(self, predicate: str, obj=None) -> list:
        seen: list[str] = []
        for s, p, o in self.triples:
            if p == predicate and (obj is None or o == obj) and s not in seen:
                seen.append(s)
        return seen


# --------------------------------------------------------------- tokenizer

_IRIREF, _PNAME, _STRING, _INTEGER, _PUNCT, _A, _PREFIX_KW = range(7)


@dataclass(frozen=True)
class _Token:
    kind: int
    value: object
    line: int
    col: int


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def _peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _advance(self) -> str:
        ch = self.text[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.line, self.col)

    def tokens(self):
        while True:
            self._skip_trivia()
            if self.pos >= len(self.text):
                return
            line, col = self.line, self.col
            ch = self._peek()
            if ch == "<":
                yield _Token(_IRIREF, self._iriref(), line, col)
            elif ch == '"':
                yield self._string_literal(line, col)
            elif ch in ".;,":
                self._advance()
                yield _Token(_PUNCT, ch, line, col)
            elif ch == "@":
                self._advance()
                word = self._word()
                if word == "prefix":
                    yield _Token(_PREFIX_KW, word, line, col)
                elif word == "base":
                    raise ParseError("@base is not in the supported subset; pass a base IRI instead", line, col)
                else:
                    raise ParseError(f"unexpected directive @{word}", line, col)
            elif ch.isdigit() or ch in "+-":
                yield _Token(_INTEGER, self._integer(), line, col)
            else:
                yield self._name(line, col)

    def _skip_trivia(self) -> None:
        while self.pos < len(self.text):
            ch = self._peek()
            if ch in " \t\r\n":
                self._advance()
            elif ch == "#":
                while self.pos < len(self.text) and self._peek() != "\n":
                    self._advance()
            else:
                return

    def _iriref(self) -> str:
        self._advance()  # <
        out: list[str] = []
        while True:
            if self.pos >= len(self.text):
                raise self.error("unterminated IRI")
            ch = self._advance()
            if ch == ">":
                return "".join(out)
            if ch in ' "{}|^`\\\n':
                raise self.error(f"character {ch!r} not allowed inside an IRI")
            out.append(ch)

    def _string_literal(self, line: int, col: int) -> _Token:
        self._advance()  # "
        out: list[str] = []
        while True:
            if self.pos >= len(self.text):
                raise self.error("unterminated string literal")
            ch = self._advance()
            if ch == '"':
                break
            if ch == "\n":
                raise self.error("newline inside string literal (use \\n)")
            if ch == "\\":
                if self.pos >= len(self.text):
                    raise self.error("dangling escape")
                esc = self._advance()
                if esc in ('"', "\\"):
                    out.append(esc)
                elif esc == "n":
                    out.append("\n")
                elif esc == "t":
                    out.append("\t")
                elif esc == "r":
                    out.append("\r")
                elif esc in ("u", "U"):
                    width = 4 if esc == "u" else 8
                    digits = self.text[self.pos : self.pos + width]
                    if len(digits) < width or not all(d in "0123456789abcdefABCDEF" for d in digits):
                        raise self.error(f"\\{esc} needs {width} hex digits")
                    for _ in range(width):
                        self._advance()
                    out.append(chr(int(digits, 16)))
                else:
                    raise self.error(f"unknown string escape \\{esc}")
            else:
                out.append(ch)
        value = "".join(out)
        # Optional language tag; '^^' typed literals are outside the subset.
        if self._peek() == "@":
            self._advance()
            tag = self._word(extra="-0123456789")
            if not _LANGTAG.match(tag):
                raise self.error(f"malformed language tag @{tag}")
            return _Token(_STRING, Literal(value, lang=tag), line, col)
        if self._peek() == "^":
            raise self.error("typed literals (^^) are not in the supported subset")
        return _Token(_STRING, Literal(value), line, col)

    def _integer(self) -> Literal:
        out = []
        if self._peek() in "+-":
            out.append(self._advance())
        if not self._peek().isdigit():
            raise self.error("expected digits")
        while self._peek().isdigit():
            out.append(self._advance())
        if self._peek() == ".":
            nxt = self.text[self.pos + 1] if self.pos + 1 < len(self.text) else ""
            if nxt.isdigit():
                raise self.error("decimal literals are not in the supported subset")
        return Literal("".join(out), datatype=XSD_INTEGER)

    def _word(self, extra: str = "") -> str:
        out = []
        while self.pos < len(self.text):
            ch = self._peek()
            if ch.isalpha() or ch in extra:
                out.append(self._advance())
            else:
                break
        return "".join(out)

    def _name(self, line: int, col: int) -> _Token:
        # Either the keyword `a` or a prefixed name prefix:local.
        out = []
        while self.pos < len(self.text):
            ch = self._peek()
            if ch.isalnum() or ch in "_-.":
                out.append(self._advance())
            else:
                break
        word = "".join(out)
        if self._peek() == ":":
            self._advance()
            local_chars = []
            while self.pos < len(self.text):
                ch = self._peek()
                if ch.isalnum() or ch in "_-.":
                    local_chars.append(self._advance())
                else:
                    break
            local = "".join(local_chars)
            # A trailing dot belongs to the statement, not the local name.
            trailing = 0
            while local.endswith("."):
                local = local[:-1]
                trailing += 1
            self.pos -= trailing
            self.col -= trailing
            if word and not _PN_PREFIX.match(word):
                raise ParseError(f"malformed prefix {word!r}", line, col)
            if local and not _PN_LOCAL.match(local):
                raise ParseError(f"malformed local name {local!r}", line, col)
            return _Token(_PNAME, (word, local), line, col)
        if word == "a":
            return _Token(_A, word, line, col)
        if not word:
            raise ParseError(f"unexpected character {self._peek()!r}", line, col)
        raise ParseError(f"bare word {word!r} (expected a prefixed name or keyword)", line, col)


# ------------------------------------------------------------------ parser


class _Parser:
    def __init__(self, text: str, base: str | None):
        self.stream = list(_Tokenizer(text).tokens())
        self.pos = 0
        self.doc = Document(base=base)

    def _peek(self) -> _Token | None:
        return self.stream[self.pos] if self.pos < len(self.stream) else None

    def _next(self, expectation: str) -> _Token:
        token = self._peek()
        if token is None:
            last = self.stream[-1] if self.stream else None
            line = last.line if last else 1
            col = last.col if last else 1
            raise ParseError(f"unexpected end of document, expected {expectation}", line, col)
        self.pos += 1
        return token

    def _expect_punct(self, char: str) -> None:
        token = self._next(repr(char))
        if token.kind != _PUNCT or token.value != char:
            raise ParseError(f"expected {char!r}", token.line, token.col)

    def parse(self) -> Document:
        while self._peek() is not None:
            token = self._peek()
            if token.kind == _PREFIX_KW:
                self._prefix_directive()
            else:
                self._statement()
        return self.doc

    def _prefix_directive(self) -> None:
        self._next("@prefix")
        name_token = self._next("prefix name")
        if name_token.kind != _PNAME or name_token.value[1] != "":
            raise ParseError("expected a prefix name ending in ':'", name_token.line, name_token.col)
        iri_token = self._next("namespace IRI")
        if iri_token.kind != _IRIREF:
            raise ParseError("expected <IRI> after prefix name", iri_token.line, iri_token.col)
        self.doc.prefixes[name_token.value[0]] = self._resolve(iri_token.value)
        self._expect_punct(".")

    def _resolve(self, iri: str) -> str:
        if _SCHEME.match(iri):
            return iri
        if self.doc.base is None:
            return iri
        return urljoin(self.doc.base, iri)

    def _iri(self, token: _Token, role: str) -> str:
        if token.kind == _IRIREF:
            return self._resolve(token.value)
        if token.kind == _PNAME:
            prefix, local = token.value
            if prefix not in self.doc.prefixes:
                raise ParseError(f"undefined prefix {prefix!r}", token.line, token.col)
            return self.doc.prefixes[prefix] + local
        raise ParseError(f"expected an IRI as {role}", token.line, token.col)

    def _statement(self) -> None:
        subject = self._iri(self._next("subject"), "subject")
        while True:
            token = self._next("predicate")
            predicate = RDF_TYPE if token.kind == _A else self._iri(token, "predicate")
            while True:
                obj_token = self._next("object")
                if obj_token.kind in (_STRING, _INTEGER):
                    obj = obj_token.value
                else:
                    obj = self._iri(obj_token, "object")
                self.doc.triples.append((subject, predicate, obj))
                nxt = self._peek()
                if nxt is not None and nxt.kind == _PUNCT and nxt.value == ",":
                    self.pos += 1
                    continue
                break
            nxt = self._peek()
            if nxt is not None and nxt.kind == _PUNCT and nxt.value == ";":
                self.pos += 1
                # Tolerate a trailing ';' before the closing dot.
                after = self._peek()
                if after is not None and after.kind == _PUNCT and after.value == ".":
                    self.pos += 1
                    return
                continue
            self._expect_punct(".")
            return


def parse(text: str, base: str | None = None) -> Document:
    """Parse a Turtle-subset document into a triple list with prefixes."""
    return _Parser(text, base).parse()


# --------------------------------------------------------------- serializer


def _escape_string(value: str) -> str:
    out = value.replace("\\", "\\\\").replace('"', '\\"')
    return out.replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")


def _render_term(term, prefixes: dict, predicate_position: bool = False) -> str:
    if isinstance(term, Literal):
        if term.datatype == XSD_INTEGER:
            return term.value
        text = f'"{_escape_string(term.value)}"'
        return f"{text}@{term.lang}" if term.lang else text
    if predicate_position and term == RDF_TYPE:
        return "a"
    best: tuple[str, str] | None = None
    for prefix, namespace in prefixes.items():
        if term.startswith(namespace) and len(namespace) < len(term):
            local = term[len(namespace) :]
            if _PN_LOCAL.match(local) and not local.endswith("."):
                if best is None or len(namespace) > len(prefixes[best[0]]):
                    best = (prefix, local)
    if best is not None:
        return f"{best[0]}:{best[1]}"
    return f"<{term}>"


def serialize(doc: Document) -> str:
    """Render a document back to Turtle; parse(serialize(d)) has d's triple set."""
    lines: list[str] = []
    for prefix in sorted(doc.prefixes):
        lines.append(f"@prefix {prefix}: <{doc.prefixes[prefix]}> .")
    if doc.prefixes:
        lines.append("")

    by_subject: dict[str, dict[str, list]] = {}
    subject_order: list[str] = []
    for s, p, o in doc.triples:
        if s not in by_subject:
            by_subject[s] = {}
            subject_order.append(s)
        by_subject[s].setdefault(p, [])
        if o not in by_subject[s][p]:
            by_subject[s][p].append(o)

    for subject in subject_order:
        subject_text = _render_term(subject, doc.prefixes)
        predicate_blocks = []
        for predicate, objects in by_subject[subject].items():
            predicate_text = _render_term(predicate, doc.prefixes, predicate_position=True)
            objects_text = ", ".join(_render_term(o, doc.prefixes) for o in objects)
            predicate_blocks.append(f"{predicate_text} {objects_text}")
        if len(predicate_blocks) == 1:
            lines.append(f"{subject_text} {predicate_blocks[0]} .")
        else:
            lines.append(f"{subject_text} {predicate_blocks[0]} ;")
            for block in predicate_blocks[1:-1]:
                lines.append(f"    {block} ;")
            lines.append(f"    {predicate_blocks[-1]} .")
        lines.append("")
    while lines and lines[-1] == "":
        lines.pop()
    return "\n".join(lines) + "\n"
