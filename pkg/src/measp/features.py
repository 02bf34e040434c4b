"""Syntactic feature vectors for ground and non-ground programs.

Two fixed manifests are defined. ``ground-52`` is cheap rule statistics:
ten raw counts, eight per-rule ratios, two size ratios, the 28 pairwise
products of the ratios (positions paired lexicographically), and four
composite values. ``nonground-11`` mixes counts with dependency-graph
analyses. Every ratio with a zero denominator is defined as 0.0 so the
vectors are total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .ground import GroundProgram, RuleKind
from .nonground import (NonGroundProgram, dependency_graph, full_sccs,
                        hcf_components, is_stratified, positive_sccs)

_COUNT_NAMES = (
    "n_rules", "n_atoms", "n_horn", "n_unary", "n_binary", "n_ternary",
    "n_true_facts", "n_disj_facts", "n_constraints", "n_normal",
)
_RATIO_NAMES = (
    "ratio_horn", "ratio_unary", "ratio_binary", "ratio_ternary",
    "ratio_true_facts", "ratio_disj_facts", "frac_constraints", "frac_normal",
)
_SIZE_NAMES = ("rules_per_atom", "atoms_per_rule")
_PRODUCT_NAMES = tuple(
    f"{_RATIO_NAMES[i]}_x_{_RATIO_NAMES[j]}"
    for i in range(len(_RATIO_NAMES))
    for j in range(i + 1, len(_RATIO_NAMES))
)
_COMPOSITE_NAMES = ("log1p_n_rules", "log1p_n_atoms", "facts_ratio",
                    "short_rule_ratio")

GROUND_MANIFEST = "ground-52"
NONGROUND_MANIFEST = "nonground-11"

_MANIFESTS: dict[str, tuple[str, ...]] = {
    GROUND_MANIFEST: _COUNT_NAMES + _RATIO_NAMES + _SIZE_NAMES
    + _PRODUCT_NAMES + _COMPOSITE_NAMES,
    NONGROUND_MANIFEST: (
        "n_disj_rules", "has_query", "n_functions", "n_predicates", "n_scc",
        "n_hcf_components", "is_stratified", "n_rules", "n_constraints",
        "max_predicate_arity", "frac_disj_rules",
    ),
}

# how each non-graph-trivial feature is computed, for auditability
FEATURE_NOTES: dict[str, str] = {
    "n_scc": "SCC count of the dependency graph with positive and negative "
             "edges combined",
    "n_hcf_components": "head-cycle-free SCCs of the positive-edge subgraph",
    "is_stratified": "1 when no negative edge closes a cycle in the combined "
                     "graph",
    "facts_ratio": "(true facts + disjunctive facts) / n_rules",
    "short_rule_ratio": "(unary + binary rules) / n_rules",
}


def manifest(manifest_id: str) -> tuple[str, ...]:
    """The ordered feature names of a manifest."""
    try:
        return _MANIFESTS[manifest_id]
    except KeyError:
        raise ValueError(f"unknown feature manifest {manifest_id!r}")


@dataclass(frozen=True)
class FeatureVector:
    """Feature values in manifest order."""

    manifest_id: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        names = manifest(self.manifest_id)
        if len(self.values) != len(names):
            raise ValueError(
                f"{self.manifest_id} expects {len(names)} values, "
                f"got {len(self.values)}")
        object.__setattr__(self, "values",
                           tuple(float(v) for v in self.values))
        for name, v in zip(names, self.values):
            if not math.isfinite(v):
                raise ValueError(f"feature {name} is not finite: {v!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return manifest(self.manifest_id)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))

    def value(self, name: str) -> float:
        try:
            return self.values[self.names.index(name)]
        except ValueError:
            raise KeyError(name)


# ---------------------------------------------------------------------------
# extraction


def extract_ground(program: GroundProgram) -> FeatureVector:
    """The 52-value vector, single pass over the rules."""
    n_rules = len(program.rules)
    n_horn = n_unary = n_binary = n_ternary = 0
    n_true_facts = n_disj_facts = n_constraints = n_normal = 0
    for r in program.rules:
        if r.kind is RuleKind.OTHER:
            continue
        body = r.body_size
        if body == 1:
            n_unary += 1
        elif body == 2:
            n_binary += 1
        elif body == 3:
            n_ternary += 1
        if r.kind is RuleKind.BASIC:
            n_normal += 1
            if body == 0:
                n_true_facts += 1
            if not r.neg_body:
                n_horn += 1
        elif r.kind is RuleKind.CONSTRAINT:
            n_constraints += 1
            if not r.neg_body:
                n_horn += 1
        elif r.kind is RuleKind.DISJUNCTIVE:
            if body == 0:
                n_disj_facts += 1
    n_atoms = program.n_atoms

    counts = (n_rules, n_atoms, n_horn, n_unary, n_binary, n_ternary,
              n_true_facts, n_disj_facts, n_constraints, n_normal)
    ratios = tuple(_div(c, n_rules) for c in counts[2:])
    size = (_div(n_rules, n_atoms), _div(n_atoms, n_rules))
    products = tuple(ratios[i] * ratios[j]
                     for i in range(len(ratios))
                     for j in range(i + 1, len(ratios)))
    composites = (math.log1p(n_rules), math.log1p(n_atoms),
                  _div(n_true_facts + n_disj_facts, n_rules),
                  _div(n_unary + n_binary, n_rules))
    values = tuple(float(v) for v in counts + ratios + size + products
                   + composites)
    return FeatureVector(GROUND_MANIFEST, values)


def extract_nonground(program: NonGroundProgram) -> FeatureVector:
    """The 11-value vector; queries count as rules but add no graph edges."""
    graph = dependency_graph(program)
    n_rules = len(program.rules)
    n_disj = sum(1 for r in program.rules if r.is_disjunctive)
    n_constraints = sum(1 for r in program.rules if r.is_constraint)
    hcf = hcf_components(program, graph)
    values = (
        float(n_disj),
        1.0 if program.has_query else 0.0,
        float(len(program.functions)),
        float(len(program.predicates)),
        float(len(full_sccs(program, graph))),
        float(sum(hcf)),
        1.0 if is_stratified(program, graph) else 0.0,
        float(n_rules),
        float(n_constraints),
        float(max((a for _, a in program.predicates), default=0)),
        _div(n_disj, n_rules),
    )
    return FeatureVector(NONGROUND_MANIFEST, values)


def _div(a: float, b: float) -> float:
    return a / b if b else 0.0


# ---------------------------------------------------------------------------
# serialization


def format_value(v: float) -> str:
    """Integral floats print without the trailing .0; repr otherwise."""
    v = float(v)
    if v.is_integer():
        return str(int(v))
    return repr(v)


def to_name_value_text(fv: FeatureVector) -> str:
    return "".join(f"{n} {format_value(v)}\n"
                   for n, v in zip(fv.names, fv.values))


def from_name_value_text(text: str, manifest_id: str) -> FeatureVector:
    got: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'name value'")
        name, val = parts
        if name in got:
            raise ValueError(f"line {lineno}: duplicate feature {name}")
        got[name] = float(val)
    names = manifest(manifest_id)
    missing = [n for n in names if n not in got]
    extra = [n for n in got if n not in names]
    if missing or extra:
        raise ValueError(f"feature names do not match {manifest_id}: "
                         f"missing {missing!r}, extra {extra!r}")
    return FeatureVector(manifest_id, tuple(got[n] for n in names))


def csv_header(manifest_id: str) -> str:
    return ",".join(("instance_id",) + manifest(manifest_id))


def to_csv_row(instance_id: str, fv: FeatureVector) -> str:
    if "," in instance_id or "\n" in instance_id:
        raise ValueError("instance ids may not contain commas or newlines")
    return ",".join((instance_id,) + tuple(format_value(v)
                                           for v in fv.values))


def to_csv(rows: list[tuple[str, FeatureVector]], manifest_id: str) -> str:
    out = [csv_header(manifest_id)]
    for instance_id, fv in rows:
        if fv.manifest_id != manifest_id:
            raise ValueError(f"row {instance_id} has manifest "
                             f"{fv.manifest_id}, expected {manifest_id}")
        out.append(to_csv_row(instance_id, fv))
    return "\n".join(out) + "\n"


def from_csv(text: str) -> tuple[str, list[tuple[str, FeatureVector]]]:
    """Parse a feature CSV; the manifest is recognized from the header."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty feature CSV")
    header = tuple(lines[0].split(","))
    if not header or header[0] != "instance_id":
        raise ValueError("feature CSV must start with an instance_id column")
    manifest_id = None
    for mid, names in _MANIFESTS.items():
        if header[1:] == names:
            manifest_id = mid
            break
    if manifest_id is None:
        raise ValueError("feature CSV header matches no known manifest")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} fields")
        values = tuple(float(x) for x in parts[1:])
        rows.append((parts[0], FeatureVector(manifest_id, values)))
    return manifest_id, rows
