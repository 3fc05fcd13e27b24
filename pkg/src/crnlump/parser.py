"""Text formats: network model files, partition files, weighted edge lists.

Model grammar (line oriented, UTF-8, LF or CRLF):

    species <id>+                            declarations, repeatable
    [label:] <multiset> -> <multiset> , <rate>
    init <id> = <number> (, <id> = <number>)*
    partition { <id>+ } ( { <id>+ } )*

with multiset either `0` or `term (+ term)*`, term `[count] <id>`, and rate
either a plain number `k` (sugar for `[k : k]`) or an interval `[lo : hi]`.
Species first appearing inside a reaction are auto-registered in order of
appearance. Species omitted from every partition brace group form one
implicit final block. Serialization is deterministic and round-trip stable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .model import (Multiset, Partition, RateInterval, Reaction,
                    ReactionNetwork, Species)

_KEYWORDS = {"species", "init", "partition"}

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<arrow>->)"
    r"|(?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<sym>[+,:\[\]{}=])"
)


class ParseError(ValueError):
    """Syntax or semantic error with its source location."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass
class ModelDocument:
    """A parsed model: the network, an optional initial partition, and
    source metadata kept only for diagnostics (excluded from comparisons)."""

    network: ReactionNetwork
    initial_partition: Optional[Partition] = None
    labels: Dict[int, str] = field(default_factory=dict)
    source: Optional[str] = field(default=None, compare=False)
    reaction_lines: Dict[int, int] = field(default_factory=dict, compare=False)

    def structurally_equal(self, other: "ModelDocument") -> bool:
        return (self.network.structurally_equal(other.network)
                and self.initial_partition == other.initial_partition
                and self.labels == other.labels)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str, line_no: int) -> List[Token]:
    out: List[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line_no, pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token(kind, m.group(), line_no, pos + 1))
        pos = m.end()
    return out


class _Cursor:
    def __init__(self, tokens: List[Token], line: int):
        self.tokens = tokens
        self.pos = 0
        self.line = line

    def peek(self, ahead: int = 0) -> Optional[Token]:
        i = self.pos + ahead
        return self.tokens[i] if i < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            end = self.tokens[-1].col + len(self.tokens[-1].text) if self.tokens else 1
            raise ParseError("unexpected end of line", self.line, end)
        self.pos += 1
        return tok

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        tok = self.next()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want}, got {tok.text!r}", tok.line, tok.col)
        return tok

    def done(self) -> bool:
        return self.pos >= len(self.tokens)

    def require_done(self):
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)


class _Builder:
    """Accumulates declarations while parsing a model document."""

    def __init__(self):
        self.names: List[str] = []
        self.index: Dict[str, int] = {}
        self.declared_lines: Dict[str, int] = {}
        self.reactions: List[Reaction] = []
        self.labels: Dict[int, str] = {}
        self.reaction_lines: Dict[int, int] = {}
        self.init_values: Dict[int, float] = {}
        self.partition_groups: Optional[List[List[int]]] = None

    def declare(self, tok: Token):
        if tok.text in self.index:
            raise ParseError(f"duplicate species declaration {tok.text!r}", tok.line, tok.col)
        self.index[tok.text] = len(self.names)
        self.names.append(tok.text)
        self.declared_lines[tok.text] = tok.line

    def intern(self, tok: Token) -> int:
        idx = self.index.get(tok.text)
        if idx is None:
            idx = len(self.names)
            self.index[tok.text] = idx
            self.names.append(tok.text)
        return idx

    def lookup(self, tok: Token) -> int:
        idx = self.index.get(tok.text)
        if idx is None:
            raise ParseError(f"unknown species {tok.text!r}", tok.line, tok.col)
        return idx


def _parse_number(tok: Token) -> float:
    try:
        return float(tok.text)
    except ValueError:
        raise ParseError(f"bad number {tok.text!r}", tok.line, tok.col) from None


def _parse_multiset(cur: _Cursor, b: _Builder) -> Multiset:
    first = cur.peek()
    if first is not None and first.kind == "number" and first.text == "0":
        nxt = cur.peek(1)
        if nxt is None or nxt.kind != "ident":
            cur.next()
            return Multiset()
    pairs: List[Tuple[int, int]] = []
    while True:
        tok = cur.next()
        count = 1
        if tok.kind == "number":
            if not re.fullmatch(r"\d+", tok.text) or int(tok.text) < 1:
                raise ParseError("multiset count must be a positive integer", tok.line, tok.col)
            count = int(tok.text)
            tok = cur.expect("ident")
        elif tok.kind != "ident":
            raise ParseError(f"expected species term, got {tok.text!r}", tok.line, tok.col)
        if tok.text in _KEYWORDS:
            raise ParseError(f"reserved word {tok.text!r} used as species", tok.line, tok.col)
        pairs.append((b.intern(tok), count))
        nxt = cur.peek()
        if nxt is not None and nxt.kind == "sym" and nxt.text == "+":
            cur.next()
            continue
        break
    return Multiset(pairs)


def _parse_rate(cur: _Cursor) -> RateInterval:
    tok = cur.peek()
    if tok is not None and tok.kind == "sym" and tok.text == "[":
        cur.next()
        lo_tok = cur.expect("number")
        cur.expect("sym", ":")
        hi_tok = cur.expect("number")
        cur.expect("sym", "]")
        lo, hi = _parse_number(lo_tok), _parse_number(hi_tok)
        if lo < 0 or hi < 0:
            raise ParseError("negative rate", lo_tok.line, lo_tok.col)
        if lo > hi:
            raise ParseError(f"interval lower bound {lo} exceeds upper bound {hi}",
                             lo_tok.line, lo_tok.col)
        return RateInterval(lo, hi)
    num = cur.expect("number")
    value = _parse_number(num)
    if value < 0:
        raise ParseError("negative rate", num.line, num.col)
    return RateInterval(value, value)


def _parse_species_line(cur: _Cursor, b: _Builder):
    while not cur.done():
        tok = cur.expect("ident")
        if tok.text in _KEYWORDS:
            raise ParseError(f"reserved word {tok.text!r} used as species", tok.line, tok.col)
        b.declare(tok)


def _parse_init_line(cur: _Cursor, b: _Builder):
    while True:
        name = cur.expect("ident")
        idx = b.lookup(name)
        cur.expect("sym", "=")
        num = cur.expect("number")
        value = _parse_number(num)
        if value < 0:
            raise ParseError("negative initial value", num.line, num.col)
        if idx in b.init_values:
            raise ParseError(f"duplicate initial value for {name.text!r}", name.line, name.col)
        b.init_values[idx] = value
        if cur.done():
            return
        cur.expect("sym", ",")


def _parse_partition_line(cur: _Cursor, b: _Builder, line: int):
    if b.partition_groups is not None:
        raise ParseError("duplicate partition declaration", line, 1)
    groups: List[List[int]] = []
    assigned: Dict[int, int] = {}
    while not cur.done():
        open_tok = cur.expect("sym", "{")
        group: List[int] = []
        while True:
            tok = cur.next()
            if tok.kind == "sym" and tok.text == "}":
                break
            if tok.kind != "ident":
                raise ParseError(f"expected species name, got {tok.text!r}", tok.line, tok.col)
            idx = b.lookup(tok)
            if idx in assigned:
                raise ParseError(f"species {tok.text!r} in two partition blocks",
                                 tok.line, tok.col)
            assigned[idx] = len(groups)
            group.append(idx)
        if not group:
            raise ParseError("empty partition block", open_tok.line, open_tok.col)
        groups.append(group)
    if not groups:
        raise ParseError("partition needs at least one block", line, 1)
    b.partition_groups = groups


def _parse_reaction_line(cur: _Cursor, b: _Builder, line: int):
    label = None
    tok0, tok1 = cur.peek(), cur.peek(1)
    if (tok0 is not None and tok0.kind == "ident" and tok1 is not None
            and tok1.kind == "sym" and tok1.text == ":"):
        label = tok0.text
        cur.next()
        cur.next()
    reactant = _parse_multiset(cur, b)
    cur.expect("arrow")
    product = _parse_multiset(cur, b)
    cur.expect("sym", ",")
    rate = _parse_rate(cur)
    cur.require_done()
    rid = len(b.reactions)
    b.reactions.append(Reaction(reactant, product, rate, rid))
    b.reaction_lines[rid] = line
    if label is not None:
        b.labels[rid] = label


def parse_model(text: str, source: Optional[str] = None) -> ModelDocument:
    """Parse a model document; raises ParseError with source location on error."""
    b = _Builder()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = _tokenize(raw.rstrip("\r"), line_no)
        if not tokens:
            continue
        cur = _Cursor(tokens, line_no)
        head = tokens[0]
        if head.kind == "ident" and head.text == "species":
            cur.next()
            _parse_species_line(cur, b)
        elif head.kind == "ident" and head.text == "init":
            cur.next()
            _parse_init_line(cur, b)
        elif head.kind == "ident" and head.text == "partition":
            cur.next()
            _parse_partition_line(cur, b, line_no)
        else:
            _parse_reaction_line(cur, b, line_no)

    species = tuple(Species(name, i) for i, name in enumerate(b.names))
    n = len(species)
    concentration = None
    state = None
    if b.init_values:
        vec = [0.0] * n
        for idx, val in b.init_values.items():
            vec[idx] = val
        concentration = tuple(vec)
        if all(v.is_integer() for v in vec):
            state = Multiset((i, int(v)) for i, v in enumerate(vec))
    network = ReactionNetwork(species, b.reactions, state, concentration)

    partition = None
    if b.partition_groups is not None:
        groups = [list(g) for g in b.partition_groups]
        covered = {i for g in groups for i in g}
        rest = [i for i in range(n) if i not in covered]
        if rest:
            groups.append(rest)
        partition = Partition(groups, n)

    return ModelDocument(network, partition, b.labels, source, b.reaction_lines)


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_rate(rate: RateInterval) -> str:
    if rate.is_point:
        return _fmt(rate.lo)
    return f"[{_fmt(rate.lo)} : {_fmt(rate.hi)}]"


def serialize_model(doc: ModelDocument) -> str:
    """Deterministic serialization: species in index order, reactions in id
    order; parsing the output reproduces the document structurally."""
    net = doc.network
    names = net.names
    lines = ["species" + ("" if not names else " " + " ".join(names))]
    for r in net.reactions:
        label = doc.labels.get(r.id)
        prefix = f"{label}: " if label else ""
        lines.append(f"{prefix}{r.reactant.format(names)} -> "
                     f"{r.product.format(names)} , {_fmt_rate(r.rate)}")
    if net.initial_concentration is not None:
        items = [(i, v) for i, v in enumerate(net.initial_concentration) if v != 0.0]
        if not items and names:
            items = [(0, 0.0)]
        if items:
            body = ", ".join(f"{names[i]} = {_fmt(v)}" for i, v in items)
            lines.append(f"init {body}")
    elif net.initial_state is not None and len(net.initial_state) > 0:
        body = ", ".join(f"{names[i]} = {_fmt(float(c))}" for i, c in net.initial_state)
        lines.append(f"init {body}")
    if doc.initial_partition is not None:
        groups = " ".join("{ " + " ".join(names[i] for i in blk) + " }"
                          for blk in doc.initial_partition.blocks)
        lines.append(f"partition {groups}")
    return "\n".join(lines) + "\n"


def parse_partition_file(text: str, network: ReactionNetwork) -> Partition:
    """Parse a standalone partition file: a single `partition { ... } ...` line."""
    doc_text = "species " + " ".join(network.names) + "\n" + text
    doc = parse_model(doc_text)
    if doc.network.names != network.names:
        raise ParseError("partition file names unknown species", 1, 1)
    if doc.initial_partition is None:
        raise ParseError("no partition line found", 1, 1)
    return doc.initial_partition


@dataclass
class EdgeListGraph:
    """Weighted directed graph with interned node labels."""

    nodes: List[str]
    edges: List[Tuple[int, int, float]]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)


def parse_edge_list(text: str, undirected: bool = False) -> EdgeListGraph:
    """Parse 'src dst weight' lines; '#' starts a comment. With `undirected`,
    every edge is emitted in both directions with the same weight."""
    nodes: List[str] = []
    index: Dict[str, int] = {}
    edges: List[Tuple[int, int, float]] = []

    def intern(label: str) -> int:
        idx = index.get(label)
        if idx is None:
            idx = len(nodes)
            index[label] = idx
            nodes.append(label)
        return idx

    for line_no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 3:
            raise ParseError(f"expected 'src dst weight', got {len(parts)} fields",
                             line_no, 1)
        src, dst, wtext = parts
        try:
            weight = float(wtext)
        except ValueError:
            raise ParseError(f"non-numeric weight {wtext!r}", line_no, 1) from None
        if not (weight >= 0.0):
            raise ParseError(f"negative weight {weight}", line_no, 1)
        si, di = intern(src), intern(dst)
        edges.append((si, di, weight))
        if undirected:
            edges.append((di, si, weight))
    return EdgeListGraph(nodes, edges)
