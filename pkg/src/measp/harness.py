"""Benchmarking harness: runtime collection, labeling, SOTA, statistics.

The central object is the RuntimeTable: one RunRecord for every
(instance, engine) pair under a single CPU limit, serialized as CSV with
the columns ``instance,domain,engine,status,cpu_seconds``. Everything
else (training labels, the virtual-best oracle, per-engine statistics,
cactus-plot rows, cross-validation) is a pure function over it.
"""

from __future__ import annotations

import random
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .classifiers import (TrainingSet, predict_knn, predict_part, train_knn,
                          train_part)
from .engines import DEFAULT_LIMITS, Limits, RunRecord, run_engine
from .features import FeatureVector, format_value


@dataclass(frozen=True)
class InstanceRef:
    """One benchmark instance: id, optional file path, domain tag."""

    instance_id: str
    path: str | None = None
    domain: str = ""

    def __post_init__(self) -> None:
        for ch in ",\n":
            if ch in self.instance_id or ch in self.domain:
                raise ValueError("instance ids and domains may not contain "
                                 "commas or newlines")


def scan_instances(paths) -> tuple[InstanceRef, ...]:
    """Files and directories to InstanceRefs; a parent dir names the domain."""
    refs: list[InstanceRef] = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            for f in sorted(q for q in p.rglob("*") if q.is_file()):
                refs.append(InstanceRef(f.name.split(".")[0], str(f),
                                        f.parent.name))
        else:
            refs.append(InstanceRef(p.name.split(".")[0], str(p),
                                    p.parent.name))
    return tuple(refs)


@dataclass(frozen=True)
class RuntimeTable:
    instances: tuple[InstanceRef, ...]
    engines: tuple[str, ...]
    records: dict[tuple[str, str], RunRecord]
    limit: float = DEFAULT_LIMITS.cpu_seconds

    def __post_init__(self) -> None:
        ids = [i.instance_id for i in self.instances]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate instance ids")
        if len(self.engines) != len(set(self.engines)):
            raise ValueError("duplicate engine names")
        for iid in ids:
            for eng in self.engines:
                if (iid, eng) not in self.records:
                    raise ValueError(f"missing record for ({iid}, {eng})")

    def record(self, instance_id: str, engine: str) -> RunRecord:
        return self.records[(instance_id, engine)]

    def runs(self) -> list[RunRecord]:
        return [self.records[(i.instance_id, e)]
                for i in self.instances for e in self.engines]

    def to_csv(self) -> str:
        lines = ["instance,domain,engine,status,cpu_seconds"]
        for inst in self.instances:
            for eng in self.engines:
                r = self.records[(inst.instance_id, eng)]
                lines.append(f"{inst.instance_id},{inst.domain},{eng},"
                             f"{r.status},{format_value(float(r.cpu_seconds))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, limit: float = DEFAULT_LIMITS.cpu_seconds
                 ) -> "RuntimeTable":
        rows = _read_rows(text)
        instances: list[InstanceRef] = []
        seen_inst: dict[str, str] = {}
        engines: list[str] = []
        records: dict[tuple[str, str], RunRecord] = {}
        for iid, domain, engine, status, cpu in rows:
            if iid not in seen_inst:
                seen_inst[iid] = domain
                instances.append(InstanceRef(iid, None, domain))
            if engine not in engines:
                engines.append(engine)
            records[(iid, engine)] = RunRecord(iid, engine, status, cpu)
        return cls(tuple(instances), tuple(engines), records, limit)


_CSV_HEADER = "instance,domain,engine,status,cpu_seconds"


def _read_rows(text: str) -> list[tuple[str, str, str, str, float]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty runtime CSV")
    if lines[0] != _CSV_HEADER:
        raise ValueError(f"runtime CSV must start with {_CSV_HEADER!r}")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 5:
            raise ValueError(f"line {lineno}: expected 5 fields")
        iid, domain, engine, status, cpu = parts
        out.append((iid, domain, engine, status, float(cpu)))
    return out


# ---------------------------------------------------------------------------
# collection


def collect(instances, registry, limits: Limits = DEFAULT_LIMITS,
            parallelism: int = 1, *, resume_path=None, simulate: bool = False,
            progress=None) -> RuntimeTable:
    """Run every engine on every instance; errors become records, not
    exceptions. With ``resume_path`` existing rows are kept and only the
    missing (instance, engine) pairs run; rows are appended as they finish
    so an interrupted sweep can resume."""
    instances = tuple(instances)
    registry = tuple(registry)
    engine_names = tuple(e.name for e in registry)
    done: dict[tuple[str, str], RunRecord] = {}
    resume_file = Path(resume_path) if resume_path is not None else None
    if resume_file is not None and resume_file.exists():
        for iid, _, engine, status, cpu in _read_rows(resume_file.read_text()):
            done[(iid, engine)] = RunRecord(iid, engine, status, cpu)
    elif resume_file is not None:
        resume_file.write_text(_CSV_HEADER + "\n")

    lock = threading.Lock()

    def one(pair) -> tuple[tuple[str, str], RunRecord]:
        inst, engine = pair
        try:
            rec = run_engine(engine, inst.path, limits,
                             instance_id=inst.instance_id, simulate=simulate)
        except Exception as exc:  # a crashed adapter must not kill the sweep
            rec = RunRecord(inst.instance_id, engine.name, "error", 0.0, 0.0,
                            detail=f"runner failure: {exc}")
        with lock:
            if resume_file is not None:
                with resume_file.open("a") as fh:
                    fh.write(f"{inst.instance_id},{inst.domain},{engine.name},"
                             f"{rec.status},"
                             f"{format_value(float(rec.cpu_seconds))}\n")
            if progress is not None:
                progress(rec)
        return (inst.instance_id, engine.name), rec

    todo = [(inst, engine) for inst in instances for engine in registry
            if (inst.instance_id, engine.name) not in done]
    if parallelism > 1 and todo:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            for key, rec in pool.map(one, todo):
                done[key] = rec
    else:
        for pair in todo:
            key, rec = one(pair)
            done[key] = rec
    records = {(inst.instance_id, name): done[(inst.instance_id, name)]
               for inst in instances for name in engine_names}
    return RuntimeTable(instances, engine_names, records, limits.cpu_seconds)


# ---------------------------------------------------------------------------
# labeling and the SOTA oracle


@dataclass(frozen=True)
class LabelingResult:
    training: TrainingSet
    labels: dict[str, str]  # instance -> winning engine
    excluded: tuple[str, ...]  # instances no engine solved


def best_engine(table: RuntimeTable, instance_id: str
                ) -> tuple[str, float] | None:
    """(engine, cpu) of the fastest solved run, ties by engine order."""
    best: tuple[float, int] | None = None
    for pos, eng in enumerate(table.engines):
        r = table.records[(instance_id, eng)]
        if r.solved and (best is None or (r.cpu_seconds, pos) < best):
            best = (r.cpu_seconds, pos)
    if best is None:
        return None
    return table.engines[best[1]], best[0]


def label_training(table: RuntimeTable,
                   features: dict[str, FeatureVector]) -> LabelingResult:
    """Per-instance winner labels joined with feature vectors.

    Instances solved by no engine are excluded (reported, not an error);
    instances lacking a feature vector are an error.
    """
    pairs = []
    labels: dict[str, str] = {}
    excluded: list[str] = []
    for inst in table.instances:
        winner = best_engine(table, inst.instance_id)
        if winner is None:
            excluded.append(inst.instance_id)
            continue
        if inst.instance_id not in features:
            raise ValueError(f"no feature vector for solved instance "
                             f"{inst.instance_id}")
        labels[inst.instance_id] = winner[0]
        pairs.append((features[inst.instance_id], winner[0]))
    if not pairs:
        raise ValueError("no instance was solved by any engine")
    return LabelingResult(TrainingSet.build(pairs), labels, tuple(excluded))


@dataclass(frozen=True)
class SotaResult:
    """The virtual best engine: per-instance best plus aggregates."""

    per_instance: dict[str, tuple[str, float] | None]
    solved: int
    mean_time_solved: float | None
    unsolved: tuple[str, ...]


def sota(table: RuntimeTable) -> SotaResult:
    per: dict[str, tuple[str, float] | None] = {}
    unsolved: list[str] = []
    times: list[float] = []
    for inst in table.instances:
        winner = best_engine(table, inst.instance_id)
        per[inst.instance_id] = winner
        if winner is None:
            unsolved.append(inst.instance_id)
        else:
            times.append(winner[1])
    mean = sum(times) / len(times) if times else None
    return SotaResult(per, len(times), mean, tuple(unsolved))


# ---------------------------------------------------------------------------
# statistics and cactus data


@dataclass(frozen=True)
class EngineStats:
    engine: str
    n_solved: int
    total_time_solved: float
    mean_time_solved: float | None


def stats(runs) -> dict[str, EngineStats]:
    """Per-engine solved counts and times over solved runs only.

    Accepts a RuntimeTable or any iterable of RunRecords.
    """
    if isinstance(runs, RuntimeTable):
        order = list(runs.engines)
        records = runs.runs()
    else:
        records = list(runs)
        order = []
        for r in records:
            if r.engine_name not in order:
                order.append(r.engine_name)
    agg: dict[str, tuple[int, float]] = {e: (0, 0.0) for e in order}
    for r in records:
        n, tot = agg[r.engine_name]
        if r.solved:
            agg[r.engine_name] = (n + 1, tot + r.cpu_seconds)
    out: dict[str, EngineStats] = {}
    for e in order:
        n, tot = agg[e]
        out[e] = EngineStats(e, n, tot, (tot / n) if n else None)
    return out


@dataclass(frozen=True)
class CactusRow:
    config: str
    k: int
    cpu_seconds: float


def cactus(runs, config_of=None) -> tuple[CactusRow, ...]:
    """Cactus-plot rows: per configuration, the k-th fastest solved time.

    ``config_of`` maps a RunRecord to its configuration name (default:
    the engine name); unsolved runs are omitted.
    """
    if isinstance(runs, RuntimeTable):
        records = runs.runs()
    else:
        records = list(runs)
    if config_of is None:
        config_of = lambda r: r.engine_name  # noqa: E731
    per: dict[str, list[float]] = {}
    order: list[str] = []
    for r in records:
        cfg = config_of(r)
        if cfg not in per:
            per[cfg] = []
            order.append(cfg)
        if r.solved:
            per[cfg].append(r.cpu_seconds)
    rows: list[CactusRow] = []
    for cfg in order:
        for k, t in enumerate(sorted(per[cfg]), start=1):
            rows.append(CactusRow(cfg, k, t))
    return tuple(rows)


def cactus_csv(rows) -> str:
    lines = ["config,k,cpu_seconds"]
    for row in rows:
        lines.append(f"{row.config},{row.k},"
                     f"{format_value(float(row.cpu_seconds))}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# cross-validation


@dataclass(frozen=True)
class CvReport:
    folds: int
    accuracy: float
    fold_accuracies: tuple[float, ...]
    confusion: dict[tuple[str, str], int] = field(compare=False,
                                                  default_factory=dict)


def cross_validate(data: TrainingSet, folds: int, algo: str,
                   params: dict | None = None, seed: int = 0) -> CvReport:
    """Stratified k-fold accuracy estimate for 'knn' or 'part'.

    Rows are shuffled per label with the seeded RNG and dealt round-robin
    into folds, so every fold gets a near-proportional label mix and a
    fixed seed reproduces the folds exactly.
    """
    params = dict(params or {})
    if not 2 <= folds <= len(data):
        raise ValueError(f"folds must be in 2..{len(data)}, got {folds}")
    if algo not in ("knn", "part"):
        raise ValueError(f"unknown algorithm {algo!r}")

    rng = random.Random(seed)
    by_label: dict[str, list[int]] = {}
    for i, lab in enumerate(data.labels):
        by_label.setdefault(lab, []).append(i)
    dealt: list[int] = []
    for lab in sorted(by_label):
        idxs = by_label[lab][:]
        rng.shuffle(idxs)
        dealt.extend(idxs)
    fold_of = [i % folds for i in range(len(dealt))]
    fold_members: list[list[int]] = [[] for _ in range(folds)]
    for pos, row_idx in enumerate(dealt):
        fold_members[fold_of[pos]].append(row_idx)

    if algo == "knn":
        k = int(params.pop("k", 1))
        smallest_train = len(data) - max(len(m) for m in fold_members)
        if not 1 <= k <= smallest_train:
            raise ValueError(f"k={k} exceeds the smallest training fold "
                             f"({smallest_train} rows)")
    else:
        min_leaf = int(params.pop("min_leaf", 2))
    if params:
        raise ValueError(f"unknown parameters: {sorted(params)}")

    fold_accs: list[float] = []
    confusion: dict[tuple[str, str], int] = {}
    for f in range(folds):
        test_idx = fold_members[f]
        train_idx = [i for g in range(folds) if g != f for i in fold_members[g]]
        train = data.subset(sorted(train_idx))
        if algo == "knn":
            model = train_knn(train, k=k)
            predict = lambda fv: predict_knn(model, fv)  # noqa: E731
        else:
            model = train_part(train, min_leaf=min_leaf)
            predict = lambda fv: predict_part(model, fv)  # noqa: E731
        hits = 0
        for i in test_idx:
            fv = FeatureVector(data.manifest_id, data.rows[i])
            got = predict(fv)
            truth = data.labels[i]
            confusion[(truth, got)] = confusion.get((truth, got), 0) + 1
            if got == truth:
                hits += 1
        fold_accs.append(hits / len(test_idx))
    accuracy = sum(fold_accs) / folds
    return CvReport(folds, accuracy, tuple(fold_accs), confusion)


__all__ = [
    "CactusRow", "CvReport", "EngineStats", "InstanceRef", "LabelingResult",
    "RuntimeTable", "SotaResult", "best_engine", "cactus", "cactus_csv",
    "collect", "cross_validate", "label_training", "scan_instances", "sota",
    "stats",
]
