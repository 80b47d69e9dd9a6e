"""Context knowledge base snapshots: parsing, validation, serialization, fingerprints.

A snapshot is a named set of concept/role declarations (the TBox, with atomic
subsumptions) plus a set of concept and role assertions (the ABox). There is
no reasoner; two snapshots describe the same context iff their declaration and
assertion sets are equal.

Snapshot file format (UTF-8, one statement per line, ``#`` starts a comment)::

    @snapshot <id> <timestamp>
    concept <Name>
    role <Name>
    isa <Child> <Parent>
    inst <Concept> <Individual>
    rel <Role> <Subject> <Object>

The fingerprint is the lowercase SHA-256 hex digest of the canonical form:
every vocabulary and assertion line in the syntax above, sorted by code point,
each terminated by ``\\n``, encoded as UTF-8. The header line is excluded.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Iterable, Union

IDENTIFIER = re.compile(r"[A-Za-z0-9_.:-]+")


class KBError(Exception):
    """Base class for snapshot errors."""


class SnapshotSyntaxError(KBError):
    def __init__(self, line: int, token: str, message: str):
        self.line = line
        self.token = token
        super().__init__(f"line {line}: {message} (at {token!r})")


class UndeclaredVocabularyError(KBError):
    pass


class CyclicSubsumptionError(KBError):
    pass


class InvalidSnapshotError(KBError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


@dataclass(frozen=True, order=True)
class ConceptAssertion:
    concept: str
    individual: str

    def line(self) -> str:
        return f"inst {self.concept} {self.individual}"


@dataclass(frozen=True, order=True)
class RoleAssertion:
    role: str
    subject: str
    object: str

    def line(self) -> str:
        return f"rel {self.role} {self.subject} {self.object}"


Assertion = Union[ConceptAssertion, RoleAssertion]


@dataclass(frozen=True)
class Vocabulary:
    concepts: frozenset[str] = frozenset()
    roles: frozenset[str] = frozenset()
    subsumptions: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "concepts", frozenset(self.concepts))
        object.__setattr__(self, "roles", frozenset(self.roles))
        object.__setattr__(self, "subsumptions", frozenset(self.subsumptions))

    def lines(self) -> list[str]:
        out = [f"concept {c}" for c in self.concepts]
        out += [f"role {r}" for r in self.roles]
        out += [f"isa {child} {parent}" for child, parent in self.subsumptions]
        return out

    def union(self, other: Vocabulary) -> Vocabulary:
        return Vocabulary(
            self.concepts | other.concepts,
            self.roles | other.roles,
            self.subsumptions | other.subsumptions,
        )

    def difference(self, other: Vocabulary) -> Vocabulary:
        return Vocabulary(
            self.concepts - other.concepts,
            self.roles - other.roles,
            self.subsumptions - other.subsumptions,
        )

    def is_empty(self) -> bool:
        return not (self.concepts or self.roles or self.subsumptions)


@dataclass(frozen=True)
class Snapshot:
    """One immutable context model: vocabulary, assertions and logical time."""

    id: str
    timestamp: int
    vocabulary: Vocabulary = field(default_factory=Vocabulary)
    abox: frozenset[Assertion] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "abox", frozenset(self.abox))

    def content_lines(self) -> list[str]:
        return self.vocabulary.lines() + [a.line() for a in self.abox]


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


def _find_cycle(subsumptions: Iterable[tuple[str, str]]) -> list[str] | None:
    graph: dict[str, list[str]] = {}
    for child, parent in sorted(subsumptions):
        graph.setdefault(child, []).append(parent)
    WHITE, GREY, BLACK = 0, 1, 2
    color: dict[str, int] = {}
    path: list[str] = []

    def visit(node: str) -> list[str] | None:
        color[node] = GREY
        path.append(node)
        for nxt in graph.get(node, ()):
            state = color.get(nxt, WHITE)
            if state == GREY:
                return path[path.index(nxt):] + [nxt]
            if state == WHITE:
                found = visit(nxt)
                if found:
                    return found
        path.pop()
        color[node] = BLACK
        return None

    for start in sorted(graph):
        if color.get(start, WHITE) == WHITE:
            found = visit(start)
            if found:
                return found
    return None


def validate(s: Snapshot) -> list[Violation]:
    """Return every invariant violation of ``s``; an empty list means valid."""
    out: list[Violation] = []
    vocab = s.vocabulary

    def check_ids(where: str, *ids: str) -> None:
        for ident in ids:
            if not isinstance(ident, str) or not IDENTIFIER.fullmatch(ident):
                out.append(Violation("bad-identifier", f"{where}: {ident!r}"))

    check_ids("snapshot id", s.id)
    if not isinstance(s.timestamp, int) or s.timestamp < 0:
        out.append(Violation("bad-timestamp", repr(s.timestamp)))
    for line in sorted(vocab.lines()):
        check_ids(line, *line.split()[1:])
    for a in sorted(s.abox, key=lambda a: a.line()):
        if isinstance(a, ConceptAssertion):
            check_ids(a.line(), a.concept, a.individual)
            if a.concept not in vocab.concepts:
                out.append(Violation("undeclared-concept", a.line()))
        else:
            check_ids(a.line(), a.role, a.subject, a.object)
            if a.role not in vocab.roles:
                out.append(Violation("undeclared-role", a.line()))
    for child, parent in sorted(vocab.subsumptions):
        missing = [c for c in (child, parent) if c not in vocab.concepts]
        if missing:
            out.append(
                Violation("undeclared-concept", f"isa {child} {parent} ({', '.join(missing)})")
            )
    cycle = _find_cycle(vocab.subsumptions)
    if cycle:
        out.append(Violation("cyclic-subsumption", " -> ".join(cycle)))
    return out


def parse_snapshot(text: str) -> Snapshot:
    """Parse snapshot-file text into a validated :class:`Snapshot`."""
    header: tuple[str, int] | None = None
    concepts: set[str] = set()
    roles: set[str] = set()
    subsumptions: set[tuple[str, str]] = set()
    abox: set[Assertion] = set()
    arity = {"concept": 1, "role": 1, "isa": 2, "inst": 2, "rel": 3}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        keyword, args = tokens[0], tokens[1:]
        if header is None:
            if keyword != "@snapshot":
                raise SnapshotSyntaxError(lineno, keyword, "expected '@snapshot <id> <timestamp>' header")
            if len(args) != 2:
                raise SnapshotSyntaxError(lineno, raw.strip(), "header takes exactly an id and a timestamp")
            if not IDENTIFIER.fullmatch(args[0]):
                raise SnapshotSyntaxError(lineno, args[0], "bad identifier")
            if not args[1].isdigit():
                raise SnapshotSyntaxError(lineno, args[1], "timestamp must be a non-negative integer")
            header = (args[0], int(args[1]))
            continue
        if keyword == "@snapshot":
            raise SnapshotSyntaxError(lineno, keyword, "duplicate header")
        if keyword not in arity:
            raise SnapshotSyntaxError(lineno, keyword, "unknown statement")
        if len(args) != arity[keyword]:
            bad = args[arity[keyword]] if len(args) > arity[keyword] else keyword
            raise SnapshotSyntaxError(
                lineno, bad, f"'{keyword}' takes {arity[keyword]} identifier(s), got {len(args)}"
            )
        for tok in args:
            if not IDENTIFIER.fullmatch(tok):
                raise SnapshotSyntaxError(lineno, tok, "bad identifier")
        if keyword == "concept":
            concepts.add(args[0])
        elif keyword == "role":
            roles.add(args[0])
        elif keyword == "isa":
            subsumptions.add((args[0], args[1]))
        elif keyword == "inst":
            abox.add(ConceptAssertion(*args))
        else:
            abox.add(RoleAssertion(*args))

    if header is None:
        raise SnapshotSyntaxError(0, "", "missing '@snapshot' header")

    snap = Snapshot(header[0], header[1], Vocabulary(concepts, roles, subsumptions), abox)
    violations = validate(snap)
    for v in violations:
        if v.kind == "cyclic-subsumption":
            raise CyclicSubsumptionError(v.detail)
    if violations:
        raise UndeclaredVocabularyError("; ".join(str(v) for v in violations))
    return snap


def load_snapshot(path) -> Snapshot:
    with open(path, encoding="utf-8") as fh:
        return parse_snapshot(fh.read())


def serialize(s: Snapshot) -> str:
    """Render ``s`` in the snapshot file format, content lines sorted."""
    lines = [f"@snapshot {s.id} {s.timestamp}"] + sorted(s.content_lines())
    return "\n".join(lines) + "\n"


def canonical_form(s: Snapshot) -> bytes:
    return "".join(line + "\n" for line in sorted(s.content_lines())).encode("utf-8")


def fingerprint(s: Snapshot) -> str:
    """SHA-256 of the canonical content; ignores ``id`` and ``timestamp``."""
    violations = validate(s)
    if violations:
        raise InvalidSnapshotError(violations)
    return hashlib.sha256(canonical_form(s)).hexdigest()
