"""Non-ground logic programs: parser, dependency graph, SCC analyses.

The accepted language is a small disjunctive subset: rules with ``|`` in
the head, ``not`` in the body, builtin comparisons, strong negation as a
``-`` prefix (a distinct predicate), function terms, integer constants,
``%`` line comments, and ``atom?`` queries. Predicates are identified by
(name, arity); uses of one name at several arities are legal but reported
as warnings.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ground import ParseError

Pred = tuple[str, int]

_COMPARISON_OPS = ("==", "!=", "<=", ">=", "<", ">", "=")


@dataclass(frozen=True)
class NonGroundRule:
    """One rule or query; atoms are reduced to (predicate, arity) pairs."""

    head: tuple[Pred, ...] = ()
    pos_body: tuple[Pred, ...] = ()
    neg_body: tuple[Pred, ...] = ()
    n_builtins: int = 0
    is_query: bool = False

    @property
    def is_constraint(self) -> bool:
        return not self.head and not self.is_query

    @property
    def is_disjunctive(self) -> bool:
        return len(self.head) >= 2


@dataclass(frozen=True)
class NonGroundProgram:
    rules: tuple[NonGroundRule, ...] = ()
    predicates: frozenset[Pred] = frozenset()
    functions: frozenset[str] = frozenset()
    warnings: tuple[str, ...] = ()

    @property
    def has_query(self) -> bool:
        return any(r.is_query for r in self.rules)


def parse_nonground(text: str) -> NonGroundProgram:
    """Parse program text; ParseError carries line and column on failure."""
    parser = _Parser(_tokenize(text))
    rules = []
    while not parser.at_end():
        rules.append(parser.statement())
    warnings = _arity_warnings(parser.preds)
    return NonGroundProgram(tuple(rules), frozenset(parser.preds),
                            frozenset(parser.funcs), warnings)


def _arity_warnings(preds: set[Pred]) -> tuple[str, ...]:
    by_name: dict[str, list[int]] = {}
    for name, arity in preds:
        by_name.setdefault(name, []).append(arity)
    out = []
    for name in sorted(by_name):
        arities = sorted(by_name[name])
        if len(arities) > 1:
            out.append(f"predicate {name} used with arities "
                       + ", ".join(map(str, arities)))
    return tuple(out)


@dataclass(frozen=True)
class _Tok:
    kind: str  # name | var | int | punct
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "var" if (ch == "_" or ch.isupper()) else "name"
            toks.append(_Tok(kind, word, line, start_col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(_Tok("int", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        matched = None
        for op in (":-",) + _COMPARISON_OPS:
            if text.startswith(op, i):
                matched = op
                break
        if matched is None and ch in ".,|()-?":
            matched = ch
        if matched is None:
            raise ParseError(f"unexpected character {ch!r}", line, start_col)
        toks.append(_Tok("punct", matched, line, start_col))
        i += len(matched)
        col += len(matched)
    return toks


@dataclass(frozen=True)
class _Term:
    """Term tree node. kind is 'name' (constant or compound), 'var', 'int'."""

    kind: str
    name: str = ""
    args: tuple["_Term", ...] = ()


class _Parser:
    """Recursive-descent parser over the token list.

    Predicate and function-symbol sets are filled as statements are
    recognized: an atom's own name is a predicate, every compound term
    nested below an atom (or anywhere in a comparison) is a function.
    """

    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.i = 0
        self.preds: set[Pred] = set()
        self.funcs: set[str] = set()

    # -- token plumbing

    def at_end(self) -> bool:
        return self.i >= len(self.toks)

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self) -> _Tok:
        tok = self.peek()
        if tok is None:
            raise self.err("unexpected end of input")
        self.i += 1
        return tok

    def err(self, msg: str) -> ParseError:
        tok = self.peek()
        if tok is None:
            last = self.toks[-1] if self.toks else None
            return ParseError(msg, last.line if last else 1,
                              last.col if last else 1)
        return ParseError(msg, tok.line, tok.col)

    def try_punct(self, text: str) -> bool:
        tok = self.peek()
        if tok and tok.kind == "punct" and tok.text == text:
            self.i += 1
            return True
        return False

    def peek_punct(self, *texts: str) -> bool:
        tok = self.peek()
        return bool(tok and tok.kind == "punct" and tok.text in texts)

    # -- grammar

    def statement(self) -> NonGroundRule:
        """rule := head? (':-' body)? '.'   |   atom '?'"""
        head: list[Pred] = []
        pos: list[Pred] = []
        neg: list[Pred] = []
        builtins = 0
        if not self.peek_punct(":-"):
            head.append(self.atom())
            if self.try_punct("?"):
                return NonGroundRule(tuple(head), is_query=True)
            while self.try_punct("|"):
                head.append(self.atom())
        if self.try_punct(":-"):
            while True:
                kind, payload = self.literal()
                if kind == "pos":
                    pos.append(payload)
                elif kind == "neg":
                    neg.append(payload)
                else:
                    builtins += 1
                if not self.try_punct(","):
                    break
        if not self.try_punct("."):
            raise self.err("expected '.' at end of rule")
        return NonGroundRule(tuple(head), tuple(pos), tuple(neg), builtins)

    def literal(self):
        """'not' atom | atom | comparison. Returns (kind, pred-or-None)."""
        tok = self.peek()
        if tok is None:
            raise self.err("expected a body literal")
        if tok.kind == "name" and tok.text == "not":
            nxt = self.toks[self.i + 1] if self.i + 1 < len(self.toks) else None
            if nxt is None or not (nxt.kind in ("name", "var", "int")
                                   or nxt.text == "-"):
                raise ParseError("'not' must precede an atom",
                                 tok.line, tok.col)
            self.take()
            return "neg", self.atom()
        if tok.kind in ("var", "int"):
            lhs = self.term(allow_strong=False)
            self.comparison_rest(lhs)
            return "builtin", None
        term = self.term(allow_strong=True)
        if self.peek_punct(*_COMPARISON_OPS):
            self.comparison_rest(term)
            return "builtin", None
        return "pos", self.as_atom(term)

    def comparison_rest(self, lhs: _Term) -> None:
        tok = self.take()
        if not (tok.kind == "punct" and tok.text in _COMPARISON_OPS):
            raise ParseError(
                f"expected a comparison operator, found {tok.text!r}",
                tok.line, tok.col)
        rhs = self.term(allow_strong=False)
        self.register_functions(lhs, include_self=True)
        self.register_functions(rhs, include_self=True)

    def atom(self) -> Pred:
        return self.as_atom(self.term(allow_strong=True))

    def as_atom(self, term: _Term) -> Pred:
        """Classify a parsed term as an atom; record predicate/functions."""
        if term.kind != "name":
            raise self.err("expected an atom")
        if term.name == "not":
            raise self.err("'not' is reserved and cannot name an atom")
        self.preds.add((term.name, len(term.args)))
        for arg in term.args:
            self.register_functions(arg, include_self=True)
        return (term.name, len(term.args))

    def register_functions(self, term: _Term, *, include_self: bool) -> None:
        if term.kind != "name":
            return
        if include_self and term.args:
            self.funcs.add(term.name.lstrip("-"))
        for arg in term.args:
            self.register_functions(arg, include_self=True)

    def term(self, *, allow_strong: bool) -> _Term:
        """term := '-'? name ('(' term (',' term)* ')')? | var | int"""
        tok = self.take()
        if tok.kind in ("var", "int"):
            return _Term(tok.kind, tok.text)
        strong = False
        if tok.kind == "punct" and tok.text == "-":
            nxt = self.peek()
            if nxt is not None and nxt.kind == "int":
                self.take()
                return _Term("int", "-" + nxt.text)
            if not allow_strong:
                raise ParseError("'-' here must negate an integer",
                                 tok.line, tok.col)
            tok = self.take()
            strong = True
        if tok.kind != "name":
            raise ParseError(f"expected a name, found {tok.text!r}",
                             tok.line, tok.col)
        name = ("-" + tok.text) if strong else tok.text
        args: list[_Term] = []
        if self.try_punct("("):
            while True:
                args.append(self.term(allow_strong=False))
                if self.try_punct(","):
                    continue
                if not self.try_punct(")"):
                    raise self.err("expected ')' in term list")
                break
        return _Term("name", name, tuple(args))


# ---------------------------------------------------------------------------
# dependency graph and its analyses


@dataclass(frozen=True)
class DependencyGraph:
    """Predicate dependency graph: body -> head edges per rule."""

    nodes: tuple[Pred, ...]
    pos_edges: frozenset[tuple[Pred, Pred]]
    neg_edges: frozenset[tuple[Pred, Pred]]

    def successors(self, *, include_neg: bool) -> dict[Pred, list[Pred]]:
        adj: dict[Pred, list[Pred]] = {v: [] for v in self.nodes}
        edges = set(self.pos_edges)
        if include_neg:
            edges |= set(self.neg_edges)
        for u, v in sorted(edges):
            adj[u].append(v)
        return adj


def dependency_graph(program: NonGroundProgram) -> DependencyGraph:
    """Nodes are all predicates; each rule adds body-to-head edges."""
    pos: set[tuple[Pred, Pred]] = set()
    neg: set[tuple[Pred, Pred]] = set()
    for r in program.rules:
        if r.is_query:
            continue
        for h in r.head:
            for b in r.pos_body:
                pos.add((b, h))
            for b in r.neg_body:
                neg.add((b, h))
    return DependencyGraph(tuple(sorted(program.predicates)),
                           frozenset(pos), frozenset(neg))


def scc(nodes: tuple[Pred, ...], adjacency: dict[Pred, list[Pred]]
        ) -> tuple[tuple[Pred, ...], ...]:
    """Strongly connected components, iterative Tarjan.

    Components are each sorted and returned ordered by least member, so
    the output is deterministic for a given graph.
    """
    index: dict[Pred, int] = {}
    low: dict[Pred, int] = {}
    on_stack: set[Pred] = set()
    stack: list[Pred] = []
    comps: list[tuple[Pred, ...]] = []
    counter = 0

    for root in sorted(nodes):
        if root in index:
            continue
        work: list[tuple[Pred, int]] = [(root, 0)]
        while work:
            v, ei = work.pop()
            if ei == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            advanced = False
            succs = adjacency.get(v, [])
            while ei < len(succs):
                w = succs[ei]
                ei += 1
                if w not in index:
                    work.append((v, ei))
                    work.append((w, 0))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(tuple(sorted(comp)))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    comps.sort(key=lambda c: c[0])
    return tuple(comps)


def positive_sccs(program: NonGroundProgram,
                  graph: DependencyGraph | None = None
                  ) -> tuple[tuple[Pred, ...], ...]:
    """SCCs of the positive-edge subgraph."""
    g = graph if graph is not None else dependency_graph(program)
    return scc(g.nodes, g.successors(include_neg=False))


def full_sccs(program: NonGroundProgram,
              graph: DependencyGraph | None = None
              ) -> tuple[tuple[Pred, ...], ...]:
    """SCCs of the graph with positive and negative edges combined."""
    g = graph if graph is not None else dependency_graph(program)
    return scc(g.nodes, g.successors(include_neg=True))


def hcf_components(program: NonGroundProgram,
                   graph: DependencyGraph | None = None
                   ) -> tuple[bool, ...]:
    """Head-cycle-freeness per positive SCC, in component order.

    A component fails when some rule has two distinct head predicates
    inside it.
    """
    g = graph if graph is not None else dependency_graph(program)
    comps = positive_sccs(program, g)
    comp_of: dict[Pred, int] = {}
    for ci, comp in enumerate(comps):
        for p in comp:
            comp_of[p] = ci
    ok = [True] * len(comps)
    for r in program.rules:
        heads = set(r.head)
        if len(heads) < 2:
            continue
        by_comp: dict[int, int] = {}
        for h in heads:
            ci = comp_of[h]
            by_comp[ci] = by_comp.get(ci, 0) + 1
            if by_comp[ci] >= 2:
                ok[ci] = False
    return tuple(ok)


def is_stratified(program: NonGroundProgram,
                  graph: DependencyGraph | None = None) -> bool:
    """True iff no negative edge connects two predicates in one SCC of the
    combined graph (equivalently: no cycle goes through a negative edge)."""
    g = graph if graph is not None else dependency_graph(program)
    comps = full_sccs(program, g)
    comp_of: dict[Pred, int] = {}
    for ci, comp in enumerate(comps):
        for p in comp:
            comp_of[p] = ci
    for u, v in g.neg_edges:
        if comp_of[u] == comp_of[v]:
            return False
    return True
