"""From-scratch classifiers over feature vectors: kNN and decision lists.

Both train on a TrainingSet, predict a string label for a FeatureVector
of the same manifest, and serialize to a line-oriented text format whose
first line is ``measp-model v1 <algo> <manifest-id>``.

Determinism contracts (these are part of the model semantics and the
serialization round-trip, not implementation accidents):

* kNN normalizes each feature to [0, 1] by training min/max (constant
  features map to 0), clamps queries into the range, breaks distance
  ties by exemplar index and vote ties by first-appearance label order.
* The decision-list learner grows a partial tree per iteration using
  binary gain-ratio splits at midpoints, expands the lower-entropy child
  first (ties: the <= child), keeps the sibling as an unexpanded
  majority leaf unless the expanded child collapsed to a single leaf,
  turns the leaf covering the most rows into a rule (ties: earliest
  created), removes the covered rows, and stops when the remainder is
  single-class (or the tree degenerates to its root), which becomes the
  default label. Split ties prefer the lower feature index, then the
  smaller threshold; majority ties the label seen first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

from .features import FeatureVector, format_value, manifest


class ModelFormatError(Exception):
    """Malformed model text."""


class ModelVersionError(ModelFormatError):
    """Model text with an unknown version tag."""


_MAGIC = "measp-model"
_VERSION = "v1"


def _check_label(label: str) -> str:
    if not label or any(c.isspace() for c in label) or "&" in label:
        raise ValueError(f"unusable class label {label!r}")
    return label


@dataclass(frozen=True)
class TrainingSet:
    """Labeled feature rows, all from one manifest."""

    manifest_id: str
    rows: tuple[tuple[float, ...], ...]
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        width = len(manifest(self.manifest_id))
        if len(self.rows) != len(self.labels):
            raise ValueError("rows and labels differ in length")
        for row in self.rows:
            if len(row) != width:
                raise ValueError(f"row width {len(row)} != {width}")
        for label in self.labels:
            _check_label(label)

    @classmethod
    def build(cls, pairs: list[tuple[FeatureVector, str]]) -> "TrainingSet":
        if not pairs:
            raise ValueError("no training pairs")
        mid = pairs[0][0].manifest_id
        rows, labels = [], []
        for fv, label in pairs:
            if fv.manifest_id != mid:
                raise ValueError("mixed manifests in one training set")
            rows.append(fv.values)
            labels.append(label)
        return cls(mid, tuple(rows), tuple(labels))

    def subset(self, indices: list[int]) -> "TrainingSet":
        return TrainingSet(self.manifest_id,
                           tuple(self.rows[i] for i in indices),
                           tuple(self.labels[i] for i in indices))

    def __len__(self) -> int:
        return len(self.rows)


def _first_appearance_order(labels: tuple[str, ...]) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for lab in labels:
        seen.setdefault(lab)
    return tuple(seen)


def _majority(labels: list[str], priority: tuple[str, ...]) -> str:
    counts: dict[str, int] = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    best = max(counts.values())
    for lab in priority:
        if counts.get(lab) == best:
            return lab
    raise AssertionError("priority list does not cover the labels")


# ---------------------------------------------------------------------------
# kNN


@dataclass(frozen=True)
class KnnModel:
    manifest_id: str
    k: int
    norms: tuple[tuple[float, float], ...]  # per-feature (min, max)
    exemplars: tuple[tuple[float, ...], ...]  # normalized rows
    labels: tuple[str, ...]
    label_priority: tuple[str, ...]

    def __post_init__(self) -> None:
        width = len(manifest(self.manifest_id))
        if len(self.norms) != width:
            raise ValueError("norms do not match the manifest width")
        if not 1 <= self.k <= len(self.exemplars):
            raise ValueError(f"k={self.k} with {len(self.exemplars)} exemplars")
        if len(self.exemplars) != len(self.labels):
            raise ValueError("exemplars and labels differ in length")


def _normalize(value: float, lo: float, hi: float, *, clamp: bool) -> float:
    if hi <= lo:
        return 0.0
    x = (value - lo) / (hi - lo)
    if clamp:
        x = min(1.0, max(0.0, x))
    return x


def train_knn(data: TrainingSet, k: int = 1) -> KnnModel:
    if not data.rows:
        raise ValueError("cannot train on an empty set")
    if not 1 <= k <= len(data.rows):
        raise ValueError(f"k must be in 1..{len(data.rows)}, got {k}")
    width = len(manifest(data.manifest_id))
    norms = tuple((min(r[j] for r in data.rows), max(r[j] for r in data.rows))
                  for j in range(width))
    exemplars = tuple(
        tuple(_normalize(row[j], norms[j][0], norms[j][1], clamp=False)
              for j in range(width))
        for row in data.rows)
    return KnnModel(data.manifest_id, k, norms, exemplars, data.labels,
                    _first_appearance_order(data.labels))


def predict_knn(model: KnnModel, fv: FeatureVector) -> str:
    if fv.manifest_id != model.manifest_id:
        raise ValueError(f"feature manifest {fv.manifest_id} does not match "
                         f"the model ({model.manifest_id})")
    q = tuple(_normalize(v, lo, hi, clamp=True)
              for v, (lo, hi) in zip(fv.values, model.norms))
    order = sorted(range(len(model.exemplars)),
                   key=lambda i: (_dist(model.exemplars[i], q), i))
    votes: dict[str, int] = {}
    for i in order[:model.k]:
        lab = model.labels[i]
        votes[lab] = votes.get(lab, 0) + 1
    best = max(votes.values())
    for lab in model.label_priority:
        if votes.get(lab) == best:
            return lab
    raise AssertionError("vote fell outside the label priority")


def _dist(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


# ---------------------------------------------------------------------------
# decision list (separate-and-conquer over partial trees)


@dataclass(frozen=True)
class Condition:
    feature: str
    op: str  # "<=" or ">"
    theta: float

    def __post_init__(self) -> None:
        if self.op not in ("<=", ">"):
            raise ValueError(f"bad condition operator {self.op!r}")

    def holds(self, value: float) -> bool:
        return value <= self.theta if self.op == "<=" else value > self.theta

    def __str__(self) -> str:
        return f"{self.feature}{self.op}{format_value(self.theta)}"


@dataclass(frozen=True)
class DecisionRule:
    label: str
    conditions: tuple[Condition, ...]
    coverage: int = field(default=0, compare=False)


@dataclass(frozen=True)
class DecisionList:
    manifest_id: str
    rules: tuple[DecisionRule, ...]
    default: str

    def __post_init__(self) -> None:
        names = set(manifest(self.manifest_id))
        for rule in self.rules:
            for cond in rule.conditions:
                if cond.feature not in names:
                    raise ValueError(f"unknown feature {cond.feature!r} "
                                     f"for {self.manifest_id}")


@lru_cache(maxsize=None)
def _name_index(manifest_id: str) -> dict[str, int]:
    return {n: j for j, n in enumerate(manifest(manifest_id))}


def predict_part(dl: DecisionList, fv: FeatureVector) -> str:
    if fv.manifest_id != dl.manifest_id:
        raise ValueError(f"feature manifest {fv.manifest_id} does not match "
                         f"the model ({dl.manifest_id})")
    idx = _name_index(dl.manifest_id)
    for rule in dl.rules:
        if all(c.holds(fv.values[idx[c.feature]]) for c in rule.conditions):
            return rule.label
    return dl.default


def _entropy(labels: list[str]) -> float:
    counts: dict[str, int] = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    n = len(labels)
    h = 0.0
    for c in counts.values():
        p = c / n
        h -= p * math.log2(p)
    return h


_MIN_GAIN = 1e-12


def _best_split(rows, labels, idxs: list[int]):
    """Best (gain_ratio, feature, theta, left, right) binary split, or None.

    Thresholds are midpoints of consecutive distinct sorted values. Ties
    on gain ratio keep the lower feature index, then the smaller theta.
    """
    base = _entropy([labels[i] for i in idxs])
    n = len(idxs)
    best = None
    width = len(rows[idxs[0]])
    for j in range(width):
        pairs = sorted((rows[i][j], i) for i in idxs)
        values = [p[0] for p in pairs]
        for cut in range(1, n):
            if values[cut] == values[cut - 1]:
                continue
            theta = (values[cut - 1] + values[cut]) / 2.0
            if not (values[cut - 1] <= theta < values[cut]):
                # degenerate midpoint from float rounding; fall back to
                # the left value itself, which satisfies <= strictly
                theta = values[cut - 1]
            left = [i for _, i in pairs[:cut]]
            right = [i for _, i in pairs[cut:]]
            hl = _entropy([labels[i] for i in left])
            hr = _entropy([labels[i] for i in right])
            pl, pr = len(left) / n, len(right) / n
            gain = base - (pl * hl + pr * hr)
            if gain <= _MIN_GAIN:
                continue
            split_info = -(pl * math.log2(pl) + pr * math.log2(pr))
            ratio = gain / split_info
            key = (-ratio, j, theta)
            if best is None or key < best[0]:
                best = (key, j, theta, left, right)
    if best is None:
        return None
    _, j, theta, left, right = best
    return j, theta, left, right


def _partial_tree_leaves(rows, labels, idxs: list[int], min_leaf: int,
                         feature_names):
    """Leaves of one partial tree, in creation order.

    Each leaf is (conditions, covered-indices). Returns a single entry
    when the root itself is a leaf.
    """
    leaves: list[tuple[tuple[Condition, ...], list[int]]] = []

    def expand(node: list[int], conds: tuple[Condition, ...]) -> bool:
        """Grow below node; True when it became a single leaf."""
        node_labels = [labels[i] for i in node]
        if len(node) < min_leaf or len(set(node_labels)) == 1:
            leaves.append((conds, node))
            return True
        split = _best_split(rows, labels, node)
        if split is None:
            leaves.append((conds, node))
            return True
        j, theta, left, right = split
        name = feature_names[j]
        branches = [
            (left, conds + (Condition(name, "<=", theta),),
             _entropy([labels[i] for i in left])),
            (right, conds + (Condition(name, ">", theta),),
             _entropy([labels[i] for i in right])),
        ]
        # lower entropy first; a tie keeps the <= side first
        branches.sort(key=lambda b: b[2])
        first, second = branches[0], branches[1]
        collapsed = expand(first[0], first[1])
        if collapsed:
            expand(second[0], second[1])
        else:
            leaves.append((second[1], second[0]))
        return False

    expand(idxs, ())
    return leaves


def train_part(data: TrainingSet, min_leaf: int = 2) -> DecisionList:
    if not data.rows:
        raise ValueError("cannot train on an empty set")
    if min_leaf < 1:
        raise ValueError("min_leaf must be at least 1")
    names = manifest(data.manifest_id)
    priority = _first_appearance_order(data.labels)
    remaining = list(range(len(data.rows)))
    rules: list[DecisionRule] = []
    while True:
        rem_labels = [data.labels[i] for i in remaining]
        if len(set(rem_labels)) == 1:
            return DecisionList(data.manifest_id, tuple(rules), rem_labels[0])
        leaves = _partial_tree_leaves(data.rows, data.labels, remaining,
                                      min_leaf, names)
        if len(leaves) == 1:
            return DecisionList(data.manifest_id, tuple(rules),
                                _majority(rem_labels, priority))
        best_conds, best_cover = max(leaves, key=lambda lf: len(lf[1]))
        label = _majority([data.labels[i] for i in best_cover], priority)
        rules.append(DecisionRule(label, best_conds, len(best_cover)))
        covered = set(best_cover)
        remaining = [i for i in remaining if i not in covered]


# ---------------------------------------------------------------------------
# model text format


def dumps_model(model: KnnModel | DecisionList) -> str:
    if isinstance(model, KnnModel):
        lines = [f"{_MAGIC} {_VERSION} knn {model.manifest_id}",
                 f"k {model.k}"]
        for name, (lo, hi) in zip(manifest(model.manifest_id), model.norms):
            lines.append(f"norm {name} {format_value(lo)} {format_value(hi)}")
        for row, label in zip(model.exemplars, model.labels):
            vals = " ".join(format_value(v) for v in row)
            lines.append(f"row {vals} {label}")
        return "\n".join(lines) + "\n"
    if isinstance(model, DecisionList):
        lines = [f"{_MAGIC} {_VERSION} part {model.manifest_id}"]
        for rule in model.rules:
            conds = " & ".join(str(c) for c in rule.conditions)
            lines.append(f"rule {rule.label} {conds}".rstrip())
        lines.append(f"default {model.default}")
        return "\n".join(lines) + "\n"
    raise TypeError(f"not a model: {model!r}")


def loads_model(text: str) -> KnnModel | DecisionList:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ModelFormatError("empty model text")
    header = lines[0].split()
    if not header or header[0] != _MAGIC:
        raise ModelFormatError("not a model file (bad magic)")
    if len(header) != 4:
        raise ModelFormatError(f"malformed header: {lines[0]!r}")
    _, version, algo, manifest_id = header
    if version != _VERSION:
        raise ModelVersionError(f"unsupported model version {version!r}")
    try:
        manifest(manifest_id)
    except ValueError as exc:
        raise ModelFormatError(str(exc))
    if algo == "knn":
        return _load_knn(manifest_id, lines[1:])
    if algo == "part":
        return _load_part(manifest_id, lines[1:])
    raise ModelFormatError(f"unknown model algorithm {algo!r}")


def _load_knn(manifest_id: str, lines: list[str]) -> KnnModel:
    names = manifest(manifest_id)
    if not lines or not lines[0].startswith("k "):
        raise ModelFormatError("knn model must declare k first")
    try:
        k = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise ModelFormatError(f"bad k line: {lines[0]!r}")
    norms: list[tuple[float, float]] = []
    rows: list[tuple[float, ...]] = []
    labels: list[str] = []
    for line in lines[1:]:
        parts = line.split()
        if parts[0] == "norm":
            if rows:
                raise ModelFormatError("norm lines must precede row lines")
            if len(parts) != 4:
                raise ModelFormatError(f"bad norm line: {line!r}")
            want = names[len(norms)] if len(norms) < len(names) else None
            if parts[1] != want:
                raise ModelFormatError(
                    f"norm order mismatch: expected {want!r}, got {parts[1]!r}")
            norms.append((_model_float(parts[2], line),
                          _model_float(parts[3], line)))
        elif parts[0] == "row":
            if len(parts) != len(names) + 2:
                raise ModelFormatError(f"bad row width: {line!r}")
            rows.append(tuple(_model_float(t, line) for t in parts[1:-1]))
            labels.append(parts[-1])
        else:
            raise ModelFormatError(f"unexpected model line: {line!r}")
    if len(norms) != len(names):
        raise ModelFormatError(f"expected {len(names)} norm lines, "
                               f"got {len(norms)}")
    try:
        return KnnModel(manifest_id, k, tuple(norms), tuple(rows),
                        tuple(labels), _first_appearance_order(tuple(labels)))
    except ValueError as exc:
        raise ModelFormatError(str(exc))


def _load_part(manifest_id: str, lines: list[str]) -> DecisionList:
    rules: list[DecisionRule] = []
    default: str | None = None
    for line in lines:
        parts = line.split(None, 2)
        if parts[0] == "rule":
            if default is not None:
                raise ModelFormatError("rule line after the default line")
            if len(parts) < 2:
                raise ModelFormatError(f"bad rule line: {line!r}")
            label = parts[1]
            conds: list[Condition] = []
            if len(parts) == 3:
                for chunk in parts[2].split("&"):
                    conds.append(_parse_condition(chunk.strip(), line))
            rules.append(DecisionRule(label, tuple(conds)))
        elif parts[0] == "default":
            if default is not None:
                raise ModelFormatError("two default lines")
            if len(parts) != 2:
                raise ModelFormatError(f"bad default line: {line!r}")
            default = parts[1]
        else:
            raise ModelFormatError(f"unexpected model line: {line!r}")
    if default is None:
        raise ModelFormatError("part model is missing its default line")
    try:
        return DecisionList(manifest_id, tuple(rules), default)
    except ValueError as exc:
        raise ModelFormatError(str(exc))


def _parse_condition(text: str, line: str) -> Condition:
    if "<=" in text:
        name, _, rest = text.partition("<=")
        op = "<="
    elif ">" in text:
        name, _, rest = text.partition(">")
        op = ">"
    else:
        raise ModelFormatError(f"bad condition {text!r} in {line!r}")
    name = name.strip()
    if not name:
        raise ModelFormatError(f"bad condition {text!r} in {line!r}")
    return Condition(name, op, _model_float(rest.strip(), line))


def _model_float(token: str, line: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ModelFormatError(f"bad number {token!r} in {line!r}")
    if not math.isfinite(value):
        raise ModelFormatError(f"non-finite number {token!r} in {line!r}")
    return value


def save_model(model: KnnModel | DecisionList, path) -> None:
    from pathlib import Path

    Path(path).write_text(dumps_model(model))


def load_model(path) -> KnnModel | DecisionList:
    from pathlib import Path

    return loads_model(Path(path).read_text())
