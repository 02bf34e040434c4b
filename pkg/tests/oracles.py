"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written in a different style from the
package (token streams instead of line parsers, brute-force scans instead
of incremental counters, closure matrices instead of Tarjan) so that an
agreement between the two is meaningful.
"""

import math
import re


# ---------------------------------------------------------------------------
# reference decoder for the numeric ground format


def decode_numeric(text):
    """Decode a numeric-format document into plain dicts.

    Returns {"rules": [...], "symbols": {id: name}, "bplus": [...],
    "bminus": [...], "models": int}. Raises ValueError on malformed input.
    Rules keep the raw shape: {"type": t, "head": [...], "pos": [...],
    "neg": [...], "bound": int|None, "weights": [...]|None, "raw": [...]}.
    """
    toklines = []
    for line in text.splitlines():
        line = line.strip()
        if line:
            toklines.append(line.split())
    pos = 0

    def next_line():
        nonlocal pos
        if pos >= len(toklines):
            raise ValueError("truncated document")
        out = toklines[pos]
        pos += 1
        return out

    rules = []
    while True:
        toks = next_line()
        if toks == ["0"]:
            break
        ints = [int(t) for t in toks]
        rules.append(_decode_rule(ints))
    symbols = {}
    while True:
        toks = next_line()
        if toks == ["0"]:
            break
        aid = int(toks[0])
        if len(toks) < 2:
            raise ValueError("symbol line without a name")
        if aid in symbols:
            raise ValueError("duplicate symbol id %d" % aid)
        symbols[aid] = " ".join(toks[1:])
    if next_line() != ["B+"]:
        raise ValueError("expected B+")
    bplus = []
    while True:
        toks = next_line()
        if toks == ["0"]:
            break
        bplus.append(int(toks[0]))
    if next_line() != ["B-"]:
        raise ValueError("expected B-")
    bminus = []
    while True:
        toks = next_line()
        if toks == ["0"]:
            break
        bminus.append(int(toks[0]))
    models = int(next_line()[0])
    return {
        "rules": rules,
        "symbols": symbols,
        "bplus": bplus,
        "bminus": bminus,
        "models": models,
    }


def _decode_rule(ints):
    it = iter(ints)

    def take(n):
        out = []
        for _ in range(n):
            try:
                out.append(next(it))
            except StopIteration:
                raise ValueError("rule line too short: %r" % (ints,))
        return out

    t = take(1)[0]
    rule = {"type": t, "head": [], "pos": [], "neg": [],
            "bound": None, "weights": None, "raw": None}
    if t == 1:
        head = take(1)[0]
        n = take(1)[0]
        m = take(1)[0]
        rule["head"] = [head]
        rule["neg"] = take(m)
        rule["pos"] = take(n - m)
    elif t == 2:
        head = take(1)[0]
        n = take(1)[0]
        m = take(1)[0]
        rule["head"] = [head]
        rule["bound"] = take(1)[0]
        rule["neg"] = take(m)
        rule["pos"] = take(n - m)
    elif t == 3:
        hn = take(1)[0]
        rule["head"] = take(hn)
        n = take(1)[0]
        m = take(1)[0]
        rule["neg"] = take(m)
        rule["pos"] = take(n - m)
    elif t == 5:
        head = take(1)[0]
        rule["head"] = [head]
        rule["bound"] = take(1)[0]
        n = take(1)[0]
        m = take(1)[0]
        rule["neg"] = take(m)
        rule["pos"] = take(n - m)
        rule["weights"] = take(n)
    elif t == 6:
        zero = take(1)[0]
        if zero != 0:
            raise ValueError("minimize rule must start with 0")
        n = take(1)[0]
        m = take(1)[0]
        rule["neg"] = take(m)
        rule["pos"] = take(n - m)
        rule["weights"] = take(n)
    elif t == 8:
        hn = take(1)[0]
        rule["head"] = take(hn)
        n = take(1)[0]
        m = take(1)[0]
        rule["neg"] = take(m)
        rule["pos"] = take(n - m)
    else:
        rule["raw"] = list(it)
        return rule
    leftover = list(it)
    if leftover:
        raise ValueError("trailing tokens on rule line: %r" % (ints,))
    for a in rule["head"] + rule["pos"] + rule["neg"]:
        if a < 1:
            raise ValueError("atom ids must be >= 1")
    return rule


# ---------------------------------------------------------------------------
# brute-force ground feature counting (mirrors the 52-vector definition)


def count_ground(rules, false_atom, symbols=()):
    """Recount the ten base quantities from decoded rules by brute force.

    `rules` are decode_numeric rule dicts; `false_atom` marks constraints.
    `symbols` are symbol-table atom ids (they count toward n_atoms too).
    """
    c = {k: 0 for k in ("n_rules", "n_horn", "n_unary", "n_binary",
                        "n_ternary", "n_true_facts", "n_disj_facts",
                        "n_constraints", "n_normal")}
    atoms = set()
    for r in rules:
        c["n_rules"] += 1
        if r["type"] not in (1, 2, 3, 5, 6, 8):
            continue
        atoms.update(r["head"])
        atoms.update(r["pos"])
        atoms.update(r["neg"])
        body = len(r["pos"]) + len(r["neg"])
        is_constraint = (r["type"] == 1 and false_atom is not None
                         and r["head"] == [false_atom])
        if is_constraint:
            c["n_constraints"] += 1
        if r["type"] == 1:
            if not is_constraint:
                c["n_normal"] += 1
                if body == 0:
                    c["n_true_facts"] += 1
        if r["type"] == 8 and body == 0:
            c["n_disj_facts"] += 1
        if r["type"] == 1 and len(r["neg"]) == 0:
            c["n_horn"] += 1  # one head (or none for a constraint), no negation
        if body == 1:
            c["n_unary"] += 1
        elif body == 2:
            c["n_binary"] += 1
        elif body == 3:
            c["n_ternary"] += 1
    atoms.update(symbols)
    if false_atom is not None:
        atoms.discard(false_atom)
    c["n_atoms"] = len(atoms)
    return c


def ground_vector_from_counts(c, symbols_extra=()):
    """Assemble the 52-value vector from base counts, independently."""
    atoms = c["n_atoms"]
    nr = c["n_rules"]

    def div(a, b):
        return a / b if b else 0.0

    counts = [nr, atoms, c["n_horn"], c["n_unary"], c["n_binary"],
              c["n_ternary"], c["n_true_facts"], c["n_disj_facts"],
              c["n_constraints"], c["n_normal"]]
    ratios = [div(x, nr) for x in counts[2:]]
    size = [div(nr, atoms), div(atoms, nr)]
    prods = []
    for i in range(8):
        for j in range(i + 1, 8):
            prods.append(ratios[i] * ratios[j])
    comps = [math.log1p(nr), math.log1p(atoms),
             div(c["n_true_facts"] + c["n_disj_facts"], nr),
             div(c["n_unary"] + c["n_binary"], nr)]
    return [float(v) for v in counts + ratios + size + prods + comps]


# ---------------------------------------------------------------------------
# closure-based graph analyses (SCC / HCF / stratification oracle)


def closure_sccs(nodes, edges):
    """SCCs via boolean transitive closure. O(n^3), fine for tiny graphs."""
    nodes = sorted(nodes)
    idx = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    reach = [[False] * n for _ in range(n)]
    for u, v in edges:
        reach[idx[u]][idx[v]] = True
    for k in range(n):
        rk = reach[k]
        for i in range(n):
            if reach[i][k]:
                ri = reach[i]
                for j in range(n):
                    if rk[j]:
                        ri[j] = True
    comp_of = {}
    comps = []
    for i, v in enumerate(nodes):
        if v in comp_of:
            continue
        comp = [v]
        comp_of[v] = len(comps)
        for j in range(i + 1, n):
            w = nodes[j]
            if w not in comp_of and reach[i][j] and reach[j][i]:
                comp.append(w)
                comp_of[w] = len(comps)
        comps.append(tuple(sorted(comp)))
    comps.sort(key=lambda c: c[0])
    return comps


def closure_is_stratified(nodes, pos_edges, neg_edges):
    """A neg edge u->v lies in a cycle iff v can reach u in pos+neg."""
    nodes = sorted(set(nodes))
    idx = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    reach = [[False] * n for _ in range(n)]
    for u, v in list(pos_edges) + list(neg_edges):
        reach[idx[u]][idx[v]] = True
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                for j in range(n):
                    if reach[k][j]:
                        reach[i][j] = True
    for u, v in neg_edges:
        if u == v or reach[idx[v]][idx[u]]:
            return False
    return True


# ---------------------------------------------------------------------------
# exhaustive kNN scan and naive decision-list interpreter


def knn_scan(train_rows, labels, priority, query, k):
    """Exhaustive kNN over pre-normalized rows; mirrors the tie contract."""
    dists = []
    for i, row in enumerate(train_rows):
        d = math.sqrt(sum((a - b) ** 2 for a, b in zip(row, query)))
        dists.append((d, i))
    dists.sort(key=lambda t: (t[0], t[1]))
    votes = {}
    for _, i in dists[:k]:
        votes[labels[i]] = votes.get(labels[i], 0) + 1
    best = max(votes.values())
    for lab in priority:
        if votes.get(lab) == best:
            return lab
    raise AssertionError("no winning label found")


def decision_list_scan(rules, default, named_values):
    """First-match interpreter over (label, [(name, op, theta), ...]) rules."""
    for label, conds in rules:
        ok = True
        for name, op, theta in conds:
            v = named_values[name]
            if op == "<=":
                ok = v <= theta
            elif op == ">":
                ok = v > theta
            else:
                raise ValueError(op)
            if not ok:
                break
        if ok:
            return label
    return default


# ---------------------------------------------------------------------------
# flat recomputation of harness aggregates from CSV text


def stats_from_csv(csv_text):
    """Per-engine (solved count, total, mean) straight off the rows."""
    rows = _runtime_rows(csv_text)
    out = {}
    for r in rows:
        agg = out.setdefault(r["engine"], [0, 0.0])
        if r["status"].startswith("solved"):
            agg[0] += 1
            agg[1] += r["cpu"]
    return {e: (n, tot, (tot / n if n else None)) for e, (n, tot) in out.items()}


def sota_from_csv(csv_text):
    """(solved count, mean over solved) for the virtual best engine."""
    rows = _runtime_rows(csv_text)
    best = {}
    for r in rows:
        cur = best.setdefault(r["instance"], None)
        if r["status"].startswith("solved"):
            if cur is None or r["cpu"] < cur:
                best[r["instance"]] = r["cpu"]
    solved = [v for v in best.values() if v is not None]
    mean = sum(solved) / len(solved) if solved else None
    return len(solved), mean


def cactus_from_csv(csv_text):
    """{config: [(k, time)]} with times of solved runs sorted ascending."""
    rows = _runtime_rows(csv_text)
    per = {}
    for r in rows:
        if r["status"].startswith("solved"):
            per.setdefault(r["engine"], []).append(r["cpu"])
    out = {}
    for eng, times in per.items():
        times.sort()
        out[eng] = [(i + 1, t) for i, t in enumerate(times)]
    return out


def _runtime_rows(csv_text):
    lines = [ln for ln in csv_text.strip().splitlines() if ln.strip()]
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        d = dict(zip(header, parts))
        rows.append({"instance": d["instance"], "engine": d["engine"],
                     "status": d["status"], "cpu": float(d["cpu_seconds"])})
    return rows


# ---------------------------------------------------------------------------
# tiny textual ground-program scanner (independent of the package parser)


def scan_text_rules(text):
    """Split a textual ground program into (heads, pos, neg) string triples."""
    out = []
    for raw in text.splitlines():
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        if not line.endswith("."):
            raise ValueError("unterminated rule: %r" % line)
        line = line[:-1]
        if ":-" in line:
            head_s, body_s = line.split(":-", 1)
        else:
            head_s, body_s = line, ""
        heads = [h.strip() for h in head_s.split("|") if h.strip()]
        pos, neg = [], []
        body_s = body_s.strip()
        if body_s:
            for lit in _split_top(body_s):
                lit = lit.strip()
                if lit.startswith("not "):
                    neg.append(lit[4:].strip())
                else:
                    pos.append(lit)
        out.append((heads, pos, neg))
    return out


def _split_top(s):
    """Split on commas not nested inside parentheses."""
    parts, depth, cur = [], 0, []
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


ANSWER_RE = re.compile(r"(?m)^Answer:\s*\d+\s*$")
