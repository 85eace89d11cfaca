"""Block-structured text format for networks and diagrams.

::

    # format: 1
    network fig2
    chance A { states: T, F ; cpt { -> 0.4, 0.6 ; } }
    chance B { states: T, F ; parents: A ; cpt { T -> 0.8, 0.2 ; F -> 0.1, 0.9 ; } }
    decision D1 { alternatives: Action1, Action2 ; observes: B ; }
    value V { parents: D1, A ; table { Action1, T -> 4 ; ... } }

``#`` starts a comment. A document containing a ``decision`` or ``value``
block is an influence diagram; otherwise it is a belief network.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterator

from .errors import ParseError
from .model import BeliefNetwork, ChanceNode, DecisionNode, InfluenceDiagram, ValueNode

FORMAT_VERSION = 1

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<arrow>->)
  | (?P<punct>[{}:;,])
  | (?P<word>(?:(?!->)[A-Za-z0-9_.+'\-])+)
""", re.VERBOSE)

_FORMAT_HEADER = re.compile(r"#\s*format\s*:\s*(\S+)")


@dataclass
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> Iterator[Token]:
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "comment":
            header = _FORMAT_HEADER.match(m.group())
            if header and header.group(1) != str(FORMAT_VERSION):
                raise ParseError(f"unsupported format version {header.group(1)}",
                                 line, pos - line_start + 1)
        elif kind != "ws":
            yield Token(kind, m.group(), line, pos - line_start + 1)
        newlines = m.group().count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + m.group().rindex("\n") + 1
        pos = m.end()


@dataclass
class DocumentSource:
    text: str
    model: BeliefNetwork | InfluenceDiagram
    positions: dict[str, tuple[int, int]] = field(default_factory=dict)


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(tokenize(text))
        self.i = 0

    def peek(self) -> Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.peek() or (self.tokens[-1] if self.tokens else None)
        if tok is None:
            raise ParseError(message, 1, 1)
        raise ParseError(message, tok.line, tok.column)

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            self.fail("unexpected end of input")
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            self.fail(f"expected {text!r}, found {tok.text!r}", tok)
        return tok

    def accept(self, text: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.text == text:
            self.i += 1
            return True
        return False

    def word(self, what: str) -> Token:
        tok = self.next()
        if tok.kind != "word":
            self.fail(f"expected {what}, found {tok.text!r}", tok)
        return tok

    def words(self, stop: str) -> list[Token]:
        """Comma-separated words up to (not including) ``stop``; possibly empty."""
        out: list[Token] = []
        tok = self.peek()
        if tok is not None and tok.text == stop:
            return out
        out.append(self.word("a name"))
        while self.accept(","):
            out.append(self.word("a name"))
        return out

    def number(self) -> float:
        tok = self.word("a number")
        try:
            return float(tok.text)
        except ValueError:
            self.fail(f"expected a number, found {tok.text!r}", tok)

    def numbers(self) -> list[float]:
        out = [self.number()]
        while self.accept(","):
            out.append(self.number())
        return out

    def list_clause(self) -> list[Token]:
        self.expect(":")
        items = self.words(";")
        self.expect(";")
        return items

    def rows(self, single: bool) -> list[tuple[list[Token], list[float] | float, Token]]:
        self.expect("{")
        rows = []
        while not self.accept("}"):
            start = self.peek()
            labels = self.words("->")
            self.expect("->")
            values = self.number() if single else self.numbers()
            self.expect(";")
            rows.append((labels, values, start))
        return rows

    def block_body(self, allowed: dict[str, str]) -> dict[str, tuple[Token, object]]:
        """Parse ``{ clause... }`` where ``allowed`` maps clause keyword to 'list' or 'rows'/'vrows'."""
        self.expect("{")
        clauses: dict[str, tuple[Token, object]] = {}
        while not self.accept("}"):
            tok = self.word("a clause keyword")
            kind = allowed.get(tok.text)
            if kind is None:
                self.fail(f"unexpected {tok.text!r}; expected one of {', '.join(allowed)}", tok)
            if tok.text in clauses:
                self.fail(f"duplicate {tok.text!r} clause", tok)
            if kind == "list":
                clauses[tok.text] = (tok, self.list_clause())
            else:
                clauses[tok.text] = (tok, self.rows(single=(kind == "vrows")))
                self.accept(";")
        return clauses

    def parse(self) -> DocumentSource:
        name = None
        if self.accept("network"):
            name = self.word("a network name").text
        raw: list[tuple[str, Token, dict]] = []
        while self.peek() is not None:
            tok = self.word("'chance', 'decision' or 'value'")
            if tok.text == "chance":
                allowed = {"states": "list", "parents": "list", "cpt": "rows"}
            elif tok.text == "decision":
                allowed = {"alternatives": "list", "observes": "list"}
            elif tok.text == "value":
                allowed = {"parents": "list", "table": "vrows"}
            else:
                self.fail(f"expected 'chance', 'decision' or 'value', found {tok.text!r}", tok)
            node = self.word("a node name")
            raw.append((tok.text, node, self.block_body(allowed)))
        return self.build(name, raw)

    def build(self, name, raw) -> DocumentSource:
        positions: dict[str, tuple[int, int]] = {}
        domains: dict[str, list[str]] = {}
        for kind, tok, clauses in raw:
            if tok.text in positions:
                self.fail(f"duplicate node {tok.text!r}", tok)
            positions[tok.text] = (tok.line, tok.column)
            if kind == "chance":
                if "states" not in clauses:
                    self.fail(f"chance node {tok.text} has no 'states' clause", tok)
                if "cpt" not in clauses:
                    self.fail(f"chance node {tok.text} has no 'cpt' clause", tok)
                domains[tok.text] = [t.text for t in clauses["states"][1]]
            elif kind == "decision":
                if "alternatives" not in clauses:
                    self.fail(f"decision node {tok.text} has no 'alternatives' clause", tok)
                domains[tok.text] = [t.text for t in clauses["alternatives"][1]]
            elif "table" not in clauses:
                self.fail(f"value node {tok.text} has no 'table' clause", tok)

        chance, decisions, values = [], [], []
        for kind, tok, clauses in raw:
            if kind == "decision":
                observes = [t for t in clauses.get("observes", (None, []))[1]]
                for o in observes:
                    if o.text not in positions:
                        self.fail(f"unknown node {o.text!r} observed by {tok.text}", o)
                decisions.append(DecisionNode(tok.text, domains[tok.text],
                                              [o.text for o in observes]))
                continue
            parents = [t for t in clauses.get("parents", (None, []))[1]]
            for p in parents:
                if p.text not in domains:
                    what = "unknown node" if p.text not in positions else "value node as parent"
                    self.fail(f"{what} {p.text!r} in parents of {tok.text}", p)
            pnames = [p.text for p in parents]
            body_tok, rows = clauses["cpt" if kind == "chance" else "table"]
            table = self.table(tok.text, pnames, domains, rows, body_tok,
                               arity=len(domains[tok.text]) if kind == "chance" else None)
            if kind == "chance":
                chance.append(ChanceNode(tok.text, domains[tok.text], pnames, table))
            else:
                values.append(ValueNode(tok.text, pnames, table))

        if decisions or values:
            model = InfluenceDiagram(chance, decisions, values, name or "diagram")
        else:
            model = BeliefNetwork(tuple(chance), name or "network")
        return DocumentSource("", model, positions)

    def table(self, node, parents, domains, rows, body_tok, arity):
        table = {}
        for labels, values, start in rows:
            key = tuple(t.text for t in labels)
            if len(key) != len(parents):
                self.fail(f"row for {node} has {len(key)} parent states, expected {len(parents)}",
                          start)
            for p, t in zip(parents, labels):
                if t.text not in domains[p]:
                    self.fail(f"{t.text!r} is not a state of {p}", t)
            if key in table:
                self.fail(f"duplicate row {', '.join(key) or '()'} for {node}", start)
            if arity is not None and len(values) != arity:
                self.fail(f"row for {node} has {len(values)} probabilities for {arity} states",
                          start)
            table[key] = tuple(values) if arity is not None else values
        for key in itertools.product(*(domains[p] for p in parents)):
            if key not in table:
                self.fail(f"{node} has no row for {', '.join(key) or '()'}", body_tok)
        return table


def parse_source(text: str) -> DocumentSource:
    source = _Parser(text).parse()
    source.text = text
    return source


def parse_document(text: str) -> BeliefNetwork | InfluenceDiagram:
    return parse_source(text).model


def format_number(x: float, digits: int | None = 6) -> str:
    """``digits`` significant digits, or the shortest exact form when ``digits`` is None."""
    if digits is None:
        text = repr(float(x))
        return text[:-2] if text.endswith(".0") else text
    text = f"{x:.{digits}g}"
    return "0" if text == "-0" else text


def _chance_block(node: ChanceNode, digits: int | None) -> list[str]:
    lines = [f"chance {node.name} {{", f"  states: {', '.join(node.states)} ;"]
    if node.parents:
        lines.append(f"  parents: {', '.join(node.parents)} ;")
    lines.append("  cpt {")
    for key, row in node.cpt.items():
        lhs = ", ".join(key) + " " if key else ""
        lines.append(f"    {lhs}-> {', '.join(format_number(p, digits) for p in row)} ;")
    lines.append("  }")
    lines.append("}")
    return lines


def _ordered_rows(table, domains):
    # rows in Cartesian order of the parent domains; unknown keys kept at the end
    keys = list(itertools.product(*domains)) if domains else [()]
    ordered = [k for k in keys if k in table]
    ordered += [k for k in table if k not in set(keys)]
    return [(k, table[k]) for k in ordered]


def serialize_document(model: BeliefNetwork | InfluenceDiagram, digits: int | None = 6) -> str:
    """Canonical text: declaration order, one table row per line."""
    lines = [f"# format: {FORMAT_VERSION}", f"network {model.name}", ""]
    if isinstance(model, BeliefNetwork):
        chance, decisions, values = model.nodes, (), ()
    else:
        chance, decisions, values = model.chance, model.decisions, model.values
    states = {n.name: n.states for n in (*chance, *decisions)}
    for node in chance:
        domains = [states.get(p, ()) for p in node.parents]
        node = ChanceNode(node.name, node.states, node.parents,
                          dict(_ordered_rows(node.cpt, domains)))
        lines += _chance_block(node, digits) + [""]
    for d in decisions:
        lines.append(f"decision {d.name} {{")
        lines.append(f"  alternatives: {', '.join(d.alternatives)} ;")
        if d.observes:
            lines.append(f"  observes: {', '.join(d.observes)} ;")
        lines += ["}", ""]
    for v in values:
        lines.append(f"value {v.name} {{")
        lines.append(f"  parents: {', '.join(v.parents)} ;")
        lines.append("  table {")
        for key, x in _ordered_rows(v.table, [states.get(p, ()) for p in v.parents]):
            lhs = ", ".join(key) + " " if key else ""
            lines.append(f"    {lhs}-> {format_number(x, digits)} ;")
        lines += ["  }", "}", ""]
    return "\n".join(lines).rstrip("\n") + "\n"
