"""Ground logic programs: the numeric exchange format and a textual dialect.

The numeric format is line-oriented. A document is five sections, each
terminated by a line holding a single ``0``:

    <rule lines>        one rule per line, first token is the type code
    0
    <symbol table>      ``<atom-id> <name>`` lines
    0
    B+                  atoms known to be true (compute section)
    <atom lines>
    0
    B-                  atoms known to be false
    <atom lines>
    0
    <models>            requested model count

Rule line layouts by type code (all tokens are non-negative integers,
``#lits`` counts body literals and ``#neg`` of those are negative):

    1 head #lits #neg <negs> <poss>                      basic
    2 head #lits #neg bound <negs> <poss>                cardinality
    3 #heads <heads> #lits #neg <negs> <poss>            choice
    5 head bound #lits #neg <negs> <poss> <weights>      weight
    6 0 #lits #neg <negs> <poss> <weights>               minimize
    8 #heads <heads> #lits #neg <negs> <poss>            disjunctive

Integrity constraints have no surface type of their own: grounders emit
them as basic rules whose head is a reserved, unnamed atom that is listed
in B-. This module strips that encoding on parse (rules become head-free
``CONSTRAINT`` rules, the marker id is kept once on the program) and
re-materializes it on emit, so parse/emit round-trips are exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator


class ParseError(Exception):
    """Malformed program text; carries 1-based line (and column when known)."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}"
            if col is not None:
                where += f", col {col}"
            where += ": "
        super().__init__(where + message)


class UnsupportedConstructError(Exception):
    """A rule kind that the textual dialect cannot express."""


class RuleKind(enum.Enum):
    BASIC = "basic"
    CONSTRAINT = "constraint"
    CHOICE = "choice"
    WEIGHT = "weight"
    MINIMIZE = "minimize"
    DISJUNCTIVE = "disjunctive"
    OTHER = "other"


# numeric type codes for the structural kinds
_CODE_BASIC = 1
_CODE_CARDINALITY = 2
_CODE_CHOICE = 3
_CODE_WEIGHT = 5
_CODE_MINIMIZE = 6
_CODE_DISJUNCTIVE = 8
_KNOWN_CODES = {1, 2, 3, 5, 6, 8}


@dataclass(frozen=True)
class GroundRule:
    """One ground rule.

    ``weights`` aligns with ``neg_body + pos_body`` (negative literals
    first, matching the numeric wire order). Cardinality rules keep
    ``weights=None`` and a ``bound``; weight rules carry both. ``raw``
    holds the verbatim integer payload of unrecognized type codes.
    """

    kind: RuleKind
    code: int
    head_atoms: tuple[int, ...] = ()
    pos_body: tuple[int, ...] = ()
    neg_body: tuple[int, ...] = ()
    bound: int | None = None
    weights: tuple[int, ...] | None = None
    raw: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        for a in self.head_atoms + self.pos_body + self.neg_body:
            if a < 1:
                raise ValueError("atom ids must be positive")
        if set(self.pos_body) & set(self.neg_body):
            raise ValueError("atom occurs both positively and negatively")
        k = self.kind
        if k is RuleKind.BASIC:
            self._need(self.code == _CODE_BASIC and len(self.head_atoms) == 1
                       and self.bound is None and self.weights is None)
        elif k is RuleKind.CONSTRAINT:
            self._need(self.code == _CODE_BASIC and not self.head_atoms
                       and self.bound is None and self.weights is None)
        elif k is RuleKind.CHOICE:
            self._need(self.code == _CODE_CHOICE and len(self.head_atoms) >= 1
                       and self.bound is None and self.weights is None)
        elif k is RuleKind.WEIGHT:
            self._need(self.code in (_CODE_CARDINALITY, _CODE_WEIGHT)
                       and len(self.head_atoms) == 1 and self.bound is not None)
            if self.code == _CODE_WEIGHT:
                self._need(self.weights is not None and len(self.weights)
                           == len(self.pos_body) + len(self.neg_body))
            else:
                self._need(self.weights is None)
        elif k is RuleKind.MINIMIZE:
            self._need(self.code == _CODE_MINIMIZE and not self.head_atoms
                       and self.bound is None and self.weights is not None
                       and len(self.weights)
                       == len(self.pos_body) + len(self.neg_body))
        elif k is RuleKind.DISJUNCTIVE:
            self._need(self.code == _CODE_DISJUNCTIVE
                       and len(self.head_atoms) >= 1
                       and self.bound is None and self.weights is None)
        elif k is RuleKind.OTHER:
            self._need(self.code not in _KNOWN_CODES and self.raw is not None
                       and not self.head_atoms and not self.pos_body
                       and not self.neg_body)
        if k is not RuleKind.OTHER and self.raw is not None:
            raise ValueError("raw payload is only for OTHER rules")

    def _need(self, ok: bool) -> None:
        if not ok:
            raise ValueError(f"inconsistent {self.kind.value} rule: {self!r}")

    @property
    def body_size(self) -> int:
        return len(self.pos_body) + len(self.neg_body)

    def atoms(self) -> Iterator[int]:
        yield from self.head_atoms
        yield from self.pos_body
        yield from self.neg_body


@dataclass(frozen=True)
class GroundProgram:
    """A parsed ground program plus its compute metadata.

    ``false_atom`` is the reserved constraint-marker id (None when the
    program has no constraints and no marker was declared). It is never a
    real atom: it must be unnamed, appear in no rule, and sit in B-.
    """

    rules: tuple[GroundRule, ...] = ()
    symbol_table: dict[int, str] = field(default_factory=dict)
    false_atom: int | None = None
    compute_plus: tuple[int, ...] = ()
    compute_minus: tuple[int, ...] = ()
    models: int = 1

    def __post_init__(self) -> None:
        if any(r.kind is RuleKind.CONSTRAINT for r in self.rules):
            if self.false_atom is None:
                raise ValueError("constraints need a false-marker atom")
        if self.false_atom is not None:
            if self.false_atom in self.symbol_table:
                raise ValueError("false marker must be unnamed")
            if self.false_atom not in self.compute_minus:
                raise ValueError("false marker must be listed in B-")
            for r in self.rules:
                if self.false_atom in r.atoms():
                    raise ValueError("false marker leaked into a rule")

    @property
    def n_rules(self) -> int:
        return len(self.rules)

    @property
    def n_atoms(self) -> int:
        """Distinct atom ids in rules or the symbol table (marker excluded)."""
        seen: set[int] = set(self.symbol_table)
        for r in self.rules:
            seen.update(r.atoms())
        seen.discard(self.false_atom)
        return len(seen)

    def atom_name(self, atom: int) -> str:
        """Symbol-table name, or a synthesized placeholder for hidden atoms."""
        try:
            return self.symbol_table[atom]
        except KeyError:
            name = f"x{atom}"
            taken = set(self.symbol_table.values())
            while name in taken:
                name = "_" + name
            return name


# ---------------------------------------------------------------------------
# numeric format


def parse_numeric(text: str) -> GroundProgram:
    """Parse a numeric-format document. Raises ParseError on any defect."""
    lines = text.splitlines()
    n_lines = len(lines)
    idx = 0

    def next_tokens() -> tuple[int, list[str]]:
        nonlocal idx
        while idx < n_lines:
            stripped = lines[idx].strip()
            idx += 1
            if stripped:
                return idx, stripped.split()
        raise ParseError("unexpected end of document", n_lines or 1)

    raw_rules: list[tuple[int, list[int]]] = []
    while True:
        lineno, toks = next_tokens()
        if toks == ["0"]:
            break
        try:
            ints = [int(t) for t in toks]
        except ValueError:
            raise ParseError(f"non-integer token in rule line: {toks!r}", lineno)
        raw_rules.append((lineno, ints))

    symbol_table: dict[int, str] = {}
    while True:
        lineno, toks = next_tokens()
        if toks == ["0"]:
            break
        try:
            atom = int(toks[0])
        except ValueError:
            raise ParseError(f"bad atom id {toks[0]!r} in symbol table", lineno)
        if atom < 1:
            raise ParseError("symbol-table atom ids must be positive", lineno)
        if len(toks) < 2:
            raise ParseError("symbol-table entry is missing its name", lineno)
        if atom in symbol_table:
            raise ParseError(f"duplicate symbol-table id {atom}", lineno)
        symbol_table[atom] = " ".join(toks[1:])

    compute_plus = _parse_compute(next_tokens, "B+")
    compute_minus = _parse_compute(next_tokens, "B-")

    lineno, toks = next_tokens()
    try:
        (models,) = toks
        models_n = int(models)
    except ValueError:
        raise ParseError(f"bad model-count line: {toks!r}", lineno)
    while idx < n_lines:
        if lines[idx].strip():
            raise ParseError("trailing content after the model-count line",
                             idx + 1)
        idx += 1

    decoded = [_decode_numeric_rule(lineno, ints) for lineno, ints in raw_rules]

    false_atom = _find_false_marker(decoded, symbol_table, compute_minus)
    rules = []
    for lineno, rule in decoded:
        if (false_atom is not None and rule.kind is RuleKind.BASIC
                and rule.head_atoms == (false_atom,)):
            rule = GroundRule(RuleKind.CONSTRAINT, _CODE_BASIC, (),
                              rule.pos_body, rule.neg_body)
        rules.append(rule)

    try:
        return GroundProgram(tuple(rules), symbol_table, false_atom,
                             compute_plus, compute_minus, models_n)
    except ValueError as exc:
        raise ParseError(str(exc))


def _parse_compute(next_tokens, tag: str) -> tuple[int, ...]:
    lineno, toks = next_tokens()
    if toks != [tag]:
        raise ParseError(f"expected {tag} section header, got {' '.join(toks)!r}",
                         lineno)
    atoms: list[int] = []
    while True:
        lineno, toks = next_tokens()
        if toks == ["0"]:
            return tuple(atoms)
        if len(toks) != 1:
            raise ParseError(f"expected one atom id per {tag} line", lineno)
        try:
            atom = int(toks[0])
        except ValueError:
            raise ParseError(f"bad atom id {toks[0]!r} in {tag}", lineno)
        if atom < 1:
            raise ParseError(f"{tag} atom ids must be positive", lineno)
        atoms.append(atom)


def _decode_numeric_rule(lineno: int, ints: list[int]) -> tuple[int, GroundRule]:
    pos = 0

    def take(n: int, what: str) -> list[int]:
        nonlocal pos
        if n < 0:
            raise ParseError(f"negative {what} count in rule line", lineno)
        if pos + n > len(ints):
            raise ParseError(f"rule line too short while reading {what}", lineno)
        out = ints[pos:pos + n]
        pos += n
        return out

    def take1(what: str) -> int:
        return take(1, what)[0]

    code = take1("type code")
    try:
        if code == _CODE_BASIC:
            head = take1("head")
            n, m = take1("#lits"), take1("#neg")
            neg = take(m, "negative body")
            pb = take(n - m, "positive body")
            rule = GroundRule(RuleKind.BASIC, code, (head,), tuple(pb), tuple(neg))
        elif code == _CODE_CARDINALITY:
            head = take1("head")
            n, m = take1("#lits"), take1("#neg")
            bound = take1("bound")
            neg = take(m, "negative body")
            pb = take(n - m, "positive body")
            rule = GroundRule(RuleKind.WEIGHT, code, (head,), tuple(pb),
                              tuple(neg), bound=bound)
        elif code == _CODE_CHOICE:
            hn = take1("#heads")
            heads = take(hn, "heads")
            n, m = take1("#lits"), take1("#neg")
            neg = take(m, "negative body")
            pb = take(n - m, "positive body")
            rule = GroundRule(RuleKind.CHOICE, code, tuple(heads), tuple(pb),
                              tuple(neg))
        elif code == _CODE_WEIGHT:
            head = take1("head")
            bound = take1("bound")
            n, m = take1("#lits"), take1("#neg")
            neg = take(m, "negative body")
            pb = take(n - m, "positive body")
            weights = take(n, "weights")
            rule = GroundRule(RuleKind.WEIGHT, code, (head,), tuple(pb),
                              tuple(neg), bound=bound, weights=tuple(weights))
        elif code == _CODE_MINIMIZE:
            zero = take1("leading zero")
            if zero != 0:
                raise ParseError("minimize rule must start '6 0'", lineno)
            n, m = take1("#lits"), take1("#neg")
            neg = take(m, "negative body")
            pb = take(n - m, "positive body")
            weights = take(n, "weights")
            rule = GroundRule(RuleKind.MINIMIZE, code, (), tuple(pb),
                              tuple(neg), weights=tuple(weights))
        elif code == _CODE_DISJUNCTIVE:
            hn = take1("#heads")
            heads = take(hn, "heads")
            n, m = take1("#lits"), take1("#neg")
            neg = take(m, "negative body")
            pb = take(n - m, "positive body")
            rule = GroundRule(RuleKind.DISJUNCTIVE, code, tuple(heads),
                              tuple(pb), tuple(neg))
        else:
            return lineno, GroundRule(RuleKind.OTHER, code,
                                      raw=tuple(ints[pos:]))
    except ValueError as exc:
        raise ParseError(str(exc), lineno)
    if pos != len(ints):
        raise ParseError("trailing tokens after rule payload", lineno)
    return lineno, rule


def _find_false_marker(decoded, symbol_table, compute_minus) -> int | None:
    """The marker is the unique unnamed B- atom used only as basic heads."""
    candidates = [a for a in compute_minus if a not in symbol_table]
    if len(candidates) != 1:
        return None
    marker = candidates[0]
    for _, rule in decoded:
        if marker in rule.pos_body or marker in rule.neg_body:
            return None
        if marker in rule.head_atoms and rule.kind is not RuleKind.BASIC:
            return None
    return marker


def emit_numeric(program: GroundProgram) -> str:
    """Serialize to the numeric format. Inverse of parse_numeric."""
    out: list[str] = []
    for i, r in enumerate(program.rules):
        out.append(_emit_numeric_rule(program, i, r))
    out.append("0")
    for atom in sorted(program.symbol_table):
        out.append(f"{atom} {program.symbol_table[atom]}")
    out.append("0")
    out.append("B+")
    out.extend(str(a) for a in program.compute_plus)
    out.append("0")
    out.append("B-")
    out.extend(str(a) for a in program.compute_minus)
    out.append("0")
    out.append(str(program.models))
    return "\n".join(out) + "\n"


def _emit_numeric_rule(program: GroundProgram, index: int, r: GroundRule) -> str:
    neg, pb = r.neg_body, r.pos_body
    n, m = len(neg) + len(pb), len(neg)
    body = list(neg) + list(pb)
    if r.kind is RuleKind.BASIC:
        ints = [r.code, r.head_atoms[0], n, m, *body]
    elif r.kind is RuleKind.CONSTRAINT:
        if program.false_atom is None:
            raise ValueError(f"rule {index}: constraint without a false marker")
        ints = [r.code, program.false_atom, n, m, *body]
    elif r.kind is RuleKind.WEIGHT and r.code == _CODE_CARDINALITY:
        ints = [r.code, r.head_atoms[0], n, m, r.bound, *body]
    elif r.kind is RuleKind.CHOICE:
        ints = [r.code, len(r.head_atoms), *r.head_atoms, n, m, *body]
    elif r.kind is RuleKind.WEIGHT:
        ints = [r.code, r.head_atoms[0], r.bound, n, m, *body, *r.weights]
    elif r.kind is RuleKind.MINIMIZE:
        ints = [r.code, 0, n, m, *body, *r.weights]
    elif r.kind is RuleKind.DISJUNCTIVE:
        ints = [r.code, len(r.head_atoms), *r.head_atoms, n, m, *body]
    else:
        ints = [r.code, *r.raw]
    return " ".join(str(v) for v in ints)


# ---------------------------------------------------------------------------
# textual dialect


_FALSE_MARKER_ID = 1  # conventional reserved id when interning text programs


def parse_text_ground(text: str) -> GroundProgram:
    """Parse the textual ground dialect: one rule per line, ``%`` comments.

    Grammar per line:  [atom ('|' atom)*] [':-' literal (',' literal)*] '.'
    Atoms are variable-free; named atoms are interned from id 2 upward in
    first-occurrence order, id 1 is reserved for the constraint marker.
    """
    intern: dict[str, int] = {}
    names: dict[int, str] = {}

    def atom_id(name: str) -> int:
        if name not in intern:
            aid = len(intern) + 2
            intern[name] = aid
            names[aid] = name
        return intern[name]

    rules: list[GroundRule] = []
    any_constraint = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0]
        if not line.strip():
            continue
        heads_s, pos_s, neg_s = _split_text_rule(line, lineno)
        heads = tuple(atom_id(h) for h in heads_s)
        pb = tuple(atom_id(a) for a in pos_s)
        neg = tuple(atom_id(a) for a in neg_s)
        try:
            if not heads:
                rules.append(GroundRule(RuleKind.CONSTRAINT, _CODE_BASIC, (),
                                        pb, neg))
                any_constraint = True
            elif len(heads) == 1:
                rules.append(GroundRule(RuleKind.BASIC, _CODE_BASIC, heads,
                                        pb, neg))
            else:
                rules.append(GroundRule(RuleKind.DISJUNCTIVE,
                                        _CODE_DISJUNCTIVE, heads, pb, neg))
        except ValueError as exc:
            raise ParseError(str(exc), lineno)
    false_atom = _FALSE_MARKER_ID if any_constraint else None
    compute_minus = (_FALSE_MARKER_ID,) if any_constraint else ()
    return GroundProgram(tuple(rules), dict(names), false_atom, (),
                         compute_minus, 1)


def _split_text_rule(line: str, lineno: int) -> tuple[list[str], list[str], list[str]]:
    """One textual rule -> (head atom texts, positive body, negative body)."""
    scanner = _AtomScanner(line, lineno)
    heads: list[str] = []
    pos: list[str] = []
    neg: list[str] = []
    scanner.skip_ws()
    if not scanner.try_take(":-"):
        while True:
            heads.append(scanner.atom())
            scanner.skip_ws()
            if scanner.try_take("|"):
                continue
            break
        if not scanner.try_take(":-"):
            scanner.expect(".")
            scanner.end()
            return heads, pos, neg
    while True:
        scanner.skip_ws()
        negated = scanner.try_take_word("not")
        a = scanner.atom()
        (neg if negated else pos).append(a)
        scanner.skip_ws()
        if scanner.try_take(","):
            continue
        scanner.expect(".")
        scanner.end()
        return heads, pos, neg


class _AtomScanner:
    """Character scanner for one textual rule line."""

    def __init__(self, line: str, lineno: int):
        self.s = line
        self.i = 0
        self.lineno = lineno

    def error(self, msg: str) -> ParseError:
        return ParseError(msg, self.lineno, self.i + 1)

    def skip_ws(self) -> None:
        while self.i < len(self.s) and self.s[self.i].isspace():
            self.i += 1

    def try_take(self, tok: str) -> bool:
        self.skip_ws()
        if self.s.startswith(tok, self.i):
            self.i += len(tok)
            return True
        return False

    def try_take_word(self, word: str) -> bool:
        """Take a keyword only when not a prefix of a longer name."""
        self.skip_ws()
        end = self.i + len(word)
        if self.s.startswith(word, self.i):
            if end >= len(self.s) or not (self.s[end].isalnum()
                                          or self.s[end] == "_"):
                self.i = end
                return True
        return False

    def expect(self, tok: str) -> None:
        if not self.try_take(tok):
            raise self.error(f"expected {tok!r}")

    def end(self) -> None:
        self.skip_ws()
        if self.i < len(self.s):
            raise self.error("unexpected text after rule terminator")

    def atom(self) -> str:
        """A ground atom; returns its canonical (whitespace-free) text."""
        self.skip_ws()
        start = self.i
        parts: list[str] = []
        if self.try_take("-"):
            parts.append("-")
        self.skip_ws()
        name = self._name()
        parts.append(name)
        self.skip_ws()
        if self.i < len(self.s) and self.s[self.i] == "(":
            parts.append(self._args())
        if self.i == start:
            raise self.error("expected an atom")
        return "".join(parts)

    def _name(self) -> str:
        if self.i >= len(self.s):
            raise self.error("expected an atom name")
        ch = self.s[self.i]
        if ch.isupper() or ch == "_":
            raise self.error("variables are not allowed in ground programs")
        if not ch.isalpha():
            raise self.error(f"expected an atom name, found {ch!r}")
        j = self.i
        while j < len(self.s) and (self.s[j].isalnum() or self.s[j] == "_"):
            j += 1
        name = self.s[self.i:j]
        self.i = j
        return name

    def _args(self) -> str:
        """Parenthesized term list, canonicalized (no whitespace)."""
        depth = 0
        out: list[str] = []
        while self.i < len(self.s):
            ch = self.s[self.i]
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
                if depth < 0:
                    raise self.error("unbalanced ')'")
            elif ch.isupper() and (not out or not (out[-1].isalnum()
                                                   or out[-1] == "_")):
                raise self.error("variables are not allowed in ground programs")
            if not ch.isspace():
                out.append(ch)
            self.i += 1
            if depth == 0:
                return "".join(out)
        raise self.error("unterminated term list")


def emit_text_ground(program: GroundProgram) -> str:
    """Serialize basic/constraint/disjunctive rules to the textual dialect.

    Raises UnsupportedConstructError for rule kinds the dialect cannot
    express (choice, cardinality/weight, minimize, unknown codes).
    """
    out: list[str] = []
    for i, r in enumerate(program.rules):
        if r.kind not in (RuleKind.BASIC, RuleKind.CONSTRAINT,
                          RuleKind.DISJUNCTIVE):
            raise UnsupportedConstructError(
                f"rule {i}: {r.kind.value} rules have no textual form")
        head = " | ".join(program.atom_name(a) for a in r.head_atoms)
        lits = [program.atom_name(a) for a in r.pos_body]
        lits += [f"not {program.atom_name(a)}" for a in r.neg_body]
        body = ", ".join(lits)
        if head and body:
            out.append(f"{head} :- {body}.")
        elif head:
            out.append(f"{head}.")
        else:
            out.append(f":- {body}.")
    return "\n".join(out) + ("\n" if out else "")
