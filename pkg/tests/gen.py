"""Seeded random generators shared across the test modules.

Documents come out in the serializers' canonical shape (single spaces,
sorted symbol table, trailing newline) so parse -> emit round-trips can
be checked for byte equality.
"""

import random

MARKER = 1


def random_numeric_program(rng: random.Random, max_atoms: int = 9,
                           max_rules: int = 10,
                           allow_unknown_codes: bool = True) -> str:
    """A canonical numeric-format document with a mix of rule types."""
    atoms = list(range(2, 2 + rng.randint(1, max_atoms)))
    want_constraints = rng.random() < 0.5
    lines: list[list[int]] = []
    for _ in range(rng.randint(0, max_rules)):
        code = rng.choice([1, 1, 1, 2, 3, 5, 6, 8]
                          + ([90] if allow_unknown_codes else []))
        body = rng.sample(atoms, k=rng.randint(0, min(4, len(atoms))))
        cut = rng.randint(0, len(body))
        neg, pos = body[:cut], body[cut:]
        if rng.random() < 0.2:                   # duplicates are legal
            side = neg if (neg and (not pos or rng.random() < 0.5)) else pos
            if side:
                side.append(rng.choice(side))
        n, m = len(neg) + len(pos), len(neg)
        body = neg + pos
        if code == 1:
            head = MARKER if (want_constraints and rng.random() < 0.35) \
                else rng.choice(atoms)
            lines.append([1, head, n, m] + neg + pos)
        elif code == 2:
            lines.append([2, rng.choice(atoms), n, m, rng.randint(0, n)]
                         + neg + pos)
        elif code == 3:
            heads = rng.sample(atoms, rng.randint(1, min(3, len(atoms))))
            lines.append([3, len(heads)] + heads + [n, m] + neg + pos)
        elif code == 5:
            weights = [rng.randint(1, 5) for _ in body]
            lines.append([5, rng.choice(atoms), rng.randint(0, sum(weights)),
                          n, m] + neg + pos + weights)
        elif code == 6:
            weights = [rng.randint(1, 5) for _ in body]
            lines.append([6, 0, n, m] + neg + pos + weights)
        elif code == 8:
            heads = rng.sample(atoms, rng.randint(1, min(3, len(atoms))))
            lines.append([8, len(heads)] + heads + [n, m] + neg + pos)
        else:
            lines.append([90] + [rng.randint(0, 9)
                                 for _ in range(rng.randint(0, 5))])
    has_constraint = any(l[0] == 1 and l[1] == MARKER for l in lines)

    named = sorted(rng.sample(atoms, k=rng.randint(0, len(atoms))))
    bplus = rng.sample(named, k=rng.randint(0, len(named)))
    bminus = rng.sample(named, k=rng.randint(0, len(named)))
    if has_constraint and rng.random() < 0.9:
        bminus.insert(rng.randint(0, len(bminus)), MARKER)

    doc = [" ".join(map(str, l)) for l in lines]
    doc.append("0")
    doc += [f"{a} sym_{a}" for a in named]
    doc.append("0")
    doc.append("B+")
    doc += [str(a) for a in bplus]
    doc.append("0")
    doc.append("B-")
    doc += [str(a) for a in bminus]
    doc.append("0")
    doc.append(str(rng.choice([0, 1, 2])))
    return "\n".join(doc) + "\n"


def random_text_program(rng: random.Random, max_rules: int = 10,
                        n_preds: int = 5) -> str:
    """A textual ground program (facts, normal rules, constraints,
    disjunctions) over a small atom universe."""
    universe = []
    for i in range(n_preds):
        name = f"p{i}"
        if rng.random() < 0.5:
            args = ",".join(str(rng.randint(0, 3))
                            for _ in range(rng.randint(1, 2)))
            universe.append(f"{name}({args})")
        else:
            universe.append(name)
    out = []
    for _ in range(rng.randint(1, max_rules)):
        body = rng.sample(universe, k=rng.randint(0, min(3, len(universe))))
        lits = []
        negged = set()
        for b in body:
            if rng.random() < 0.4:
                lits.append(f"not {b}")
                negged.add(b)
            else:
                lits.append(b)
        roll = rng.random()
        if roll < 0.2:                            # constraint
            if not lits:
                lits = [rng.choice(universe)]
            out.append(":- " + ", ".join(lits) + ".")
            continue
        heads = [a for a in
                 rng.sample(universe, k=rng.randint(1, min(2, len(universe))))]
        head_s = " | ".join(heads) if (roll < 0.45 and len(heads) > 1) \
            else heads[0]
        if lits:
            out.append(f"{head_s} :- {', '.join(lits)}.")
        else:
            out.append(f"{head_s}.")
    return "\n".join(out) + "\n"


def random_digraph(rng: random.Random, n: int, p: float = 0.3,
                   self_loops: bool = True):
    """Edge set of a random labeled digraph on nodes 0..n-1."""
    edges = set()
    for u in range(n):
        for v in range(n):
            if (self_loops or u != v) and rng.random() < p:
                edges.add((u, v))
    return edges


def random_signed_digraph(rng: random.Random, n: int, p: float = 0.3):
    """(pos_edges, neg_edges); an ordered pair can carry both signs."""
    pos, neg = set(), set()
    for u in range(n):
        for v in range(n):
            if rng.random() < p / 2:
                pos.add((u, v))
            if rng.random() < p / 2:
                neg.add((u, v))
    return pos, neg


def graph_program(n: int, pos_edges, neg_edges) -> str:
    """A program whose dependency graph is exactly the given signed graph.

    Node i becomes predicate g{i}/0 (introduced by a fact); an edge
    (u, v) becomes the rule ``g{v} :- [not] g{u}.`` since body atoms
    point at heads.
    """
    lines = [f"g{i}." for i in range(n)]
    for u, v in sorted(pos_edges):
        lines.append(f"g{v} :- g{u}.")
    for u, v in sorted(neg_edges):
        lines.append(f"g{v} :- not g{u}.")
    return "\n".join(lines) + "\n"


def training_blobs(rng: random.Random, n_rows: int, n_classes: int,
                   manifest_len: int, spread: float = 0.6):
    """Gaussian blob rows in the first two coordinates, padded with zeros.

    Returns (rows, labels); blobs sit on a circle so small spreads are
    linearly separable and large ones overlap.
    """
    import math

    rows, labels = [], []
    for i in range(n_rows):
        cls = i % n_classes
        ang = 2 * math.pi * cls / n_classes
        cx, cy = 3 * math.cos(ang), 3 * math.sin(ang)
        x = rng.gauss(cx, spread)
        y = rng.gauss(cy, spread)
        rows.append(tuple([x, y] + [0.0] * (manifest_len - 2)))
        labels.append(f"eng{cls}")
    return rows, labels
