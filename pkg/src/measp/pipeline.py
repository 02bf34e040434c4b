"""Six-step multi-engine evaluation pipeline.

Given a non-ground program, (i) extract its feature vector, (ii) pick a
grounder, (iii) ground, (iv) extract ground features, (v) pick a solver,
(vi) solve. Selection steps are forced when only one candidate engine is
registered. A grounder/solver format mismatch is bridged between steps
(v) and (vi):

* ``canonical`` mode converts in-process (parse + re-emit, a single
  grounder invocation overall);
* ``paper-faithful`` mode replays the historical double-instantiation
  behaviour: ground features come from re-grounding the original program
  with a numeric-output grounder, and a numeric-input solver is fed the
  selected grounder's textual output converted by running that numeric
  grounder on it. Every extra invocation shows up in the trace.

An engine registered with role ``both`` grounds internally; when solver
selection picks it, the pipeline runs it once on the original non-ground
file and skips bridging (combined mode).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

from .classifiers import DecisionList, KnnModel, predict_knn, predict_part
from .engines import (DEFAULT_LIMITS, FORMAT_GROUND_NUMERIC,
                      FORMAT_GROUND_TEXT, ROLE_BOTH, ROLE_GROUNDER,
                      EngineSpec, Limits, RunRecord, default_instance_id,
                      run_engine)
from .features import (FeatureVector, GROUND_MANIFEST, NONGROUND_MANIFEST,
                       extract_ground, extract_nonground, format_value)
from .ground import (ParseError, emit_numeric, emit_text_ground,
                     parse_numeric, parse_text_ground)
from .nonground import parse_nonground

BRIDGE_CANONICAL = "canonical"
BRIDGE_PAPER_FAITHFUL = "paper-faithful"
_BRIDGE_MODES = (BRIDGE_CANONICAL, BRIDGE_PAPER_FAITHFUL)

STEP_NAMES = ("extract-nonground", "select-grounder", "ground",
              "extract-ground", "select-solver", "solve")

_EXIT_CODES = {"solved-sat": 10, "solved-unsat": 20, "timeout": 124,
               "memout": 1, "error": 1}


def exit_code(status: str) -> int:
    return _EXIT_CODES.get(status, 1)


class PipelineError(Exception):
    """A step failed in a way that leaves no answer (e.g. grounding)."""

    def __init__(self, message: str, record: RunRecord | None = None):
        super().__init__(message)
        self.record = record


@dataclass(frozen=True)
class PipelineConfig:
    registry: tuple[EngineSpec, ...]
    grounder_model: DecisionList | KnnModel | None = None
    solver_model: DecisionList | KnnModel | None = None
    limits: Limits = DEFAULT_LIMITS
    bridge_mode: str = BRIDGE_CANONICAL

    def __post_init__(self) -> None:
        if self.bridge_mode not in _BRIDGE_MODES:
            raise ValueError(f"unknown bridge mode {self.bridge_mode!r}")
        if (self.grounder_model is not None
                and self.grounder_model.manifest_id != NONGROUND_MANIFEST):
            raise ValueError("the grounder model must score "
                             f"{NONGROUND_MANIFEST} vectors")
        if (self.solver_model is not None
                and self.solver_model.manifest_id != GROUND_MANIFEST):
            raise ValueError(f"the solver model must score {GROUND_MANIFEST} "
                             "vectors")
        names = [e.name for e in self.registry]
        if len(names) != len(set(names)):
            raise ValueError("duplicate engine names in the registry")


@dataclass(frozen=True)
class GrounderRun:
    """One grounder invocation and why it happened."""

    purpose: str  # "ground" | "reground-features" | "bridge-conversion"
    record: RunRecord


@dataclass(frozen=True)
class PipelineTrace:
    instance_id: str
    steps: tuple[tuple[str, float], ...]
    selected_grounder: str
    grounder_forced: bool
    selected_solver: str
    solver_forced: bool
    bridge_mode: str
    bridge_path: str
    ground_source: str
    nonground_features: FeatureVector
    ground_features: FeatureVector
    grounder_runs: tuple[GrounderRun, ...]
    answer: RunRecord

    @property
    def overhead_seconds(self) -> float:
        """Extraction plus selection time (steps i, ii, iv, v)."""
        picked = {"extract-nonground", "select-grounder", "extract-ground",
                  "select-solver"}
        return sum(s for n, s in self.steps if n in picked)

    @property
    def engine_cpu_seconds(self) -> float:
        return (sum(r.record.cpu_seconds for r in self.grounder_runs)
                + self.answer.cpu_seconds)

    @property
    def exit_code(self) -> int:
        return exit_code(self.answer.status)

    def to_text(self) -> str:
        lines = [
            f"instance: {self.instance_id}",
            f"status: {self.answer.status}",
            f"exit_code: {self.exit_code}",
            f"cpu_seconds: {format_value(float(self.answer.cpu_seconds))}",
            f"selected_grounder: {self.selected_grounder}",
            f"grounder_forced: {int(self.grounder_forced)}",
            f"selected_solver: {self.selected_solver}",
            f"solver_forced: {int(self.solver_forced)}",
            f"bridge_mode: {self.bridge_mode}",
            f"bridge_path: {self.bridge_path}",
            f"ground_source: {self.ground_source}",
            f"engine_cpu_seconds: "
            f"{format_value(float(self.engine_cpu_seconds))}",
            f"overhead_seconds: {self.overhead_seconds:.6f}",
        ]
        if self.answer.answer_digest:
            lines.append(f"answer_digest: {self.answer.answer_digest}")
        for name, seconds in self.steps:
            lines.append(f"step.{name}.seconds: {seconds:.6f}")
        for run in self.grounder_runs:
            p = run.purpose
            lines.append(f"grounder_run.{p}.engine: {run.record.engine_name}")
            lines.append(f"grounder_run.{p}.status: {run.record.status}")
            lines.append(f"grounder_run.{p}.cpu_seconds: "
                         f"{format_value(float(run.record.cpu_seconds))}")
        for name, v in zip(self.nonground_features.names,
                           self.nonground_features.values):
            lines.append(f"nonground_feature.{name}: {format_value(v)}")
        for name, v in zip(self.ground_features.names,
                           self.ground_features.values):
            lines.append(f"ground_feature.{name}: {format_value(v)}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def csv_header() -> str:
        step_cols = ",".join(n.replace("-", "_") + "_s" for n in STEP_NAMES)
        return ("instance,status,exit_code,cpu_seconds,selected_grounder,"
                "selected_solver,bridge_mode,bridge_path,ground_source,"
                "grounder_invocations,engine_cpu_seconds,overhead_seconds,"
                + step_cols)

    def to_csv_row(self) -> str:
        cells = [self.instance_id, self.answer.status, str(self.exit_code),
                 format_value(float(self.answer.cpu_seconds)),
                 self.selected_grounder, self.selected_solver,
                 self.bridge_mode, self.bridge_path, self.ground_source,
                 str(len(self.grounder_runs)),
                 format_value(float(self.engine_cpu_seconds)),
                 f"{self.overhead_seconds:.6f}"]
        cells += [f"{s:.6f}" for _, s in self.steps]
        return ",".join(cells)


def evaluate(program_path, cfg: PipelineConfig, *,
             instance_id: str | None = None, simulate: bool = False,
             work_dir=None) -> tuple[RunRecord, PipelineTrace]:
    """Run the full pipeline on one program file.

    Returns the solver's RunRecord plus the trace. Solver failures are
    returned (status error/timeout/memout), not raised; failures that
    leave nothing to return (unparsable input, grounding failure, no
    usable engine) raise PipelineError.
    """
    iid = instance_id if instance_id is not None else \
        default_instance_id(program_path)
    import tempfile

    if work_dir is None:
        with tempfile.TemporaryDirectory(prefix="measp-pipe-") as tmp:
            return _evaluate(program_path, cfg, iid, simulate, Path(tmp))
    return _evaluate(program_path, cfg, iid, simulate, Path(work_dir))


def _evaluate(program_path, cfg: PipelineConfig, iid: str, simulate: bool,
              work_dir: Path) -> tuple[RunRecord, PipelineTrace]:
    steps: list[tuple[str, float]] = []
    grounder_runs: list[GrounderRun] = []

    # (i) non-ground feature extraction
    t0 = time.perf_counter()
    try:
        program_text = Path(program_path).read_text()
    except OSError as exc:
        raise PipelineError(f"cannot read program: {exc}")
    try:
        nonground_program = parse_nonground(program_text)
    except ParseError as exc:
        raise PipelineError(f"program does not parse: {exc}")
    fv_ng = extract_nonground(nonground_program)
    steps.append((STEP_NAMES[0], time.perf_counter() - t0))

    # (ii) grounder selection
    t0 = time.perf_counter()
    grounders = [e for e in cfg.registry if e.role == ROLE_GROUNDER]
    if not grounders:
        raise PipelineError("the registry has no grounder")
    if len(grounders) == 1:
        grounder, grounder_forced = grounders[0], True
    else:
        if cfg.grounder_model is None:
            raise PipelineError("several grounders but no grounder model")
        label = _predict(cfg.grounder_model, fv_ng)
        grounder = _engine_by_name(grounders, label)
        if grounder is None:
            raise PipelineError(f"grounder model chose {label!r}, which is "
                                "not a registered grounder")
        grounder_forced = False
    steps.append((STEP_NAMES[1], time.perf_counter() - t0))

    # (iii) grounding
    t0 = time.perf_counter()
    ground_path = work_dir / f"{iid}.{grounder.name}.ground"
    ground_rec = run_engine(grounder, program_path, cfg.limits,
                            output_path=ground_path, instance_id=iid,
                            simulate=simulate)
    grounder_runs.append(GrounderRun("ground", ground_rec))
    if not ground_rec.solved:
        raise PipelineError(
            f"grounding failed with {grounder.name}: {ground_rec.status}"
            + (f" ({ground_rec.detail})" if ground_rec.detail else ""),
            record=ground_rec)
    steps.append((STEP_NAMES[2], time.perf_counter() - t0))

    # (iv) ground feature extraction
    t0 = time.perf_counter()
    ground_text = ground_path.read_text()
    if (cfg.bridge_mode == BRIDGE_PAPER_FAITHFUL
            and grounder.output_format == FORMAT_GROUND_TEXT):
        numeric_grounder = _numeric_grounder(cfg.registry)
        if numeric_grounder is None:
            raise PipelineError("paper-faithful mode needs a numeric-output "
                                "grounder in the registry")
        reground_path = work_dir / f"{iid}.{numeric_grounder.name}.reground"
        rec = run_engine(numeric_grounder, program_path, cfg.limits,
                         output_path=reground_path, instance_id=iid,
                         simulate=simulate)
        grounder_runs.append(GrounderRun("reground-features", rec))
        if not rec.solved:
            raise PipelineError(
                f"re-grounding failed with {numeric_grounder.name}: "
                f"{rec.status}", record=rec)
        ground_program = _parse_ground(reground_path.read_text(),
                                       FORMAT_GROUND_NUMERIC)
        ground_source = "reground-numeric"
    else:
        ground_program = _parse_ground(ground_text, grounder.output_format)
        ground_source = ("grounder-output-numeric"
                         if grounder.output_format == FORMAT_GROUND_NUMERIC
                         else "grounder-output-text")
    fv_g = extract_ground(ground_program)
    steps.append((STEP_NAMES[3], time.perf_counter() - t0))

    # (v) solver selection
    t0 = time.perf_counter()
    solvers = [e for e in cfg.registry if e.solves]
    if not solvers:
        raise PipelineError("the registry has no solver")
    if len(solvers) == 1:
        solver, solver_forced = solvers[0], True
    else:
        if cfg.solver_model is None:
            raise PipelineError("several solvers but no solver model")
        label = _predict(cfg.solver_model, fv_g)
        solver = _engine_by_name(solvers, label)
        if solver is None:
            raise PipelineError(f"solver model chose {label!r}, which is "
                                "not a registered solver")
        solver_forced = False
    steps.append((STEP_NAMES[4], time.perf_counter() - t0))

    # (vi) bridging and solving
    t0 = time.perf_counter()
    if solver.role == ROLE_BOTH:
        solver_input = Path(program_path)
        bridge_path = "combined-run"
    elif solver.input_format == grounder.output_format:
        solver_input = ground_path
        bridge_path = "identity"
    else:
        data, bridge_path, extra = bridge_formats(
            ground_text, grounder.output_format, solver.input_format, cfg,
            ground_output_path=ground_path, instance_id=iid,
            simulate=simulate, work_dir=work_dir)
        grounder_runs.extend(extra)
        solver_input = work_dir / f"{iid}.bridged"
        solver_input.write_text(data)
    answer = run_engine(solver, solver_input, cfg.limits, instance_id=iid,
                        simulate=simulate)
    steps.append((STEP_NAMES[5], time.perf_counter() - t0))

    trace = PipelineTrace(
        instance_id=iid, steps=tuple(steps),
        selected_grounder=grounder.name, grounder_forced=grounder_forced,
        selected_solver=solver.name, solver_forced=solver_forced,
        bridge_mode=cfg.bridge_mode, bridge_path=bridge_path,
        ground_source=ground_source, nonground_features=fv_ng,
        ground_features=fv_g, grounder_runs=tuple(grounder_runs),
        answer=answer)
    return answer, trace


def bridge_formats(ground_output: str, from_fmt: str, to_fmt: str,
                   cfg: PipelineConfig, *, ground_output_path=None,
                   instance_id: str = "bridge", simulate: bool = False,
                   work_dir=None) -> tuple[str, str, list[GrounderRun]]:
    """Convert a ground program between formats for the selected solver.

    Returns (converted text, path label, extra grounder runs). Identity
    when the formats already agree. In canonical mode conversion is
    in-process; in paper-faithful mode the text-to-numeric direction is
    done by running a numeric-output grounder on the textual ground
    program (ground programs are valid grounder input).
    """
    if from_fmt not in (FORMAT_GROUND_TEXT, FORMAT_GROUND_NUMERIC) \
            or to_fmt not in (FORMAT_GROUND_TEXT, FORMAT_GROUND_NUMERIC):
        raise ValueError(f"cannot bridge {from_fmt} to {to_fmt}")
    if from_fmt == to_fmt:
        return ground_output, "identity", []
    if to_fmt == FORMAT_GROUND_NUMERIC:
        if cfg.bridge_mode == BRIDGE_PAPER_FAITHFUL:
            return _bridge_via_grounder(ground_output, cfg,
                                        ground_output_path, instance_id,
                                        simulate, work_dir)
        program = parse_text_ground(ground_output)
        return emit_numeric(program), "text-to-numeric", []
    program = parse_numeric(ground_output)
    return emit_text_ground(program), "numeric-to-text", []


def _bridge_via_grounder(ground_output: str, cfg: PipelineConfig,
                         ground_output_path, instance_id: str,
                         simulate: bool, work_dir
                         ) -> tuple[str, str, list[GrounderRun]]:
    numeric_grounder = _numeric_grounder(cfg.registry)
    if numeric_grounder is None:
        raise PipelineError("paper-faithful mode needs a numeric-output "
                            "grounder in the registry")
    import tempfile

    wd = Path(work_dir) if work_dir is not None else \
        Path(tempfile.mkdtemp(prefix="measp-bridge-"))
    src = Path(ground_output_path) if ground_output_path is not None else None
    if src is None:
        src = wd / f"{instance_id}.ground.txt"
        src.write_text(ground_output)
    out = wd / f"{instance_id}.converted"
    rec = run_engine(numeric_grounder, src, cfg.limits, output_path=out,
                     instance_id=instance_id, simulate=simulate)
    runs = [GrounderRun("bridge-conversion", rec)]
    if not rec.solved:
        raise PipelineError(
            f"format conversion failed with {numeric_grounder.name}: "
            f"{rec.status}", record=rec)
    return out.read_text(), "converted-via-grounder", runs


def _parse_ground(text: str, fmt: str):
    try:
        if fmt == FORMAT_GROUND_NUMERIC:
            return parse_numeric(text)
        return parse_text_ground(text)
    except ParseError as exc:
        raise PipelineError(f"grounder output does not parse: {exc}")


def _predict(model, fv: FeatureVector) -> str:
    if isinstance(model, KnnModel):
        return predict_knn(model, fv)
    return predict_part(model, fv)


def _engine_by_name(engines, name: str) -> EngineSpec | None:
    for e in engines:
        if e.name == name:
            return e
    return None


def _numeric_grounder(registry) -> EngineSpec | None:
    for e in registry:
        if e.role == ROLE_GROUNDER \
                and e.output_format == FORMAT_GROUND_NUMERIC:
            return e
    return None


__all__ = [
    "BRIDGE_CANONICAL", "BRIDGE_PAPER_FAITHFUL", "STEP_NAMES",
    "PipelineConfig", "PipelineError", "PipelineTrace", "GrounderRun",
    "bridge_formats", "evaluate", "exit_code",
]
