"""Black-box grounder/solver adapters with CPU and memory limits.

An engine is an external command described by an EngineSpec. The runner
launches it in its own process group with RLIMIT_CPU / RLIMIT_AS set, a
wall-clock watchdog at twice the CPU limit as a backstop against sleepers,
and per-child rusage accounting via os.wait4. The outcome is classified
into exactly one status:

    memout  > timeout > solved-sat / solved-unsat / error

Memory evidence (an allocation-failure token in the output) wins over
everything; CPU at or past the limit (or death by SIGXCPU) is a timeout;
otherwise exit codes and output tokens decide. A watchdog kill with CPU
still under the limit is reported as ``error`` (the run neither finished
nor used its CPU budget), keeping the invariant that ``timeout`` implies
the CPU limit was actually reached.

Registry files describe engines one per line::

    engine <name> <grounder|solver|both> <input-fmt> <output-fmt> <argv...>

with ``#`` comments, shell-style quoting, and ``{input}`` / ``{output}``
placeholders in argv.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import shlex
import shutil
import signal
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

FORMAT_NONGROUND = "nonground-text"
FORMAT_GROUND_TEXT = "ground-text"
FORMAT_GROUND_NUMERIC = "ground-numeric"
FORMAT_ANSWER_SETS = "answer-sets"
_FORMATS = (FORMAT_NONGROUND, FORMAT_GROUND_TEXT, FORMAT_GROUND_NUMERIC,
            FORMAT_ANSWER_SETS)

ROLE_GROUNDER = "grounder"
ROLE_SOLVER = "solver"
ROLE_BOTH = "both"

STATUS_SAT = "solved-sat"
STATUS_UNSAT = "solved-unsat"
STATUS_TIMEOUT = "timeout"
STATUS_MEMOUT = "memout"
STATUS_ERROR = "error"
STATUSES = (STATUS_SAT, STATUS_UNSAT, STATUS_TIMEOUT, STATUS_MEMOUT,
            STATUS_ERROR)

_CPU_EPS = 0.05
_POLL_SECONDS = 0.01


class RegistryError(Exception):
    """Malformed engine registry text."""


class ConfigurationError(Exception):
    """The platform cannot enforce resource limits."""


@dataclass(frozen=True)
class Limits:
    """Per-run resource budget. Defaults match common evaluation settings:
    600 CPU seconds and 2 GiB of address space."""

    cpu_seconds: float = 600.0
    memory_bytes: int = 2048 * 1024 * 1024

    def __post_init__(self) -> None:
        if self.cpu_seconds <= 0:
            raise ValueError("cpu_seconds must be positive")
        if self.memory_bytes <= 0:
            raise ValueError("memory_bytes must be positive")


DEFAULT_LIMITS = Limits()


@dataclass(frozen=True)
class MockEntry:
    """Scripted outcome for one instance id."""

    status: str
    cpu_seconds: float = 0.0
    answer: str | None = None

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.cpu_seconds < 0:
            raise ValueError("cpu_seconds must be non-negative")


@dataclass(frozen=True)
class MockBehavior:
    table: dict[str, MockEntry]
    role: str
    output_format: str


@dataclass(frozen=True)
class EngineSpec:
    """One engine: role, accepted/produced formats, and its command line."""

    name: str
    role: str
    input_format: str
    output_format: str
    command_template: tuple[str, ...]
    mock: MockBehavior | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.name or any(c.isspace() for c in self.name):
            raise ValueError(f"bad engine name {self.name!r}")
        if self.input_format not in _FORMATS:
            raise ValueError(f"unknown input format {self.input_format!r}")
        if self.output_format not in _FORMATS:
            raise ValueError(f"unknown output format {self.output_format!r}")
        if not self.command_template:
            raise ValueError("empty command template")
        if self.role == ROLE_GROUNDER:
            ok = (self.input_format == FORMAT_NONGROUND
                  and self.output_format in (FORMAT_GROUND_NUMERIC,
                                             FORMAT_GROUND_TEXT))
        elif self.role == ROLE_SOLVER:
            ok = (self.input_format in (FORMAT_GROUND_NUMERIC,
                                        FORMAT_GROUND_TEXT)
                  and self.output_format == FORMAT_ANSWER_SETS)
        elif self.role == ROLE_BOTH:
            ok = (self.input_format == FORMAT_NONGROUND
                  and self.output_format == FORMAT_ANSWER_SETS)
        else:
            raise ValueError(f"unknown engine role {self.role!r}")
        if not ok:
            raise ValueError(
                f"engine {self.name}: role {self.role} cannot map "
                f"{self.input_format} to {self.output_format}")

    @property
    def grounds(self) -> bool:
        return self.role == ROLE_GROUNDER

    @property
    def solves(self) -> bool:
        return self.role in (ROLE_SOLVER, ROLE_BOTH)


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one engine run on one instance."""

    instance_id: str
    engine_name: str
    status: str
    cpu_seconds: float
    wall_seconds: float = 0.0
    answer_digest: str | None = None
    detail: str = ""

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def solved(self) -> bool:
        return self.status in (STATUS_SAT, STATUS_UNSAT)


# ---------------------------------------------------------------------------
# registry text


def registry_loads(text: str) -> tuple[EngineSpec, ...]:
    engines: list[EngineSpec] = []
    names: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            parts = shlex.split(line, comments=True)
        except ValueError as exc:
            raise RegistryError(f"line {lineno}: {exc}")
        if not parts:
            continue
        if parts[0] != "engine":
            raise RegistryError(
                f"line {lineno}: expected 'engine', got {parts[0]!r}")
        if len(parts) < 6:
            raise RegistryError(f"line {lineno}: engine lines need a name, "
                                "role, two formats, and a command")
        _, name, role, in_fmt, out_fmt, *argv = parts
        if name in names:
            raise RegistryError(f"line {lineno}: duplicate engine {name!r}")
        names.add(name)
        try:
            spec = EngineSpec(name, role, in_fmt, out_fmt, tuple(argv))
        except ValueError as exc:
            raise RegistryError(f"line {lineno}: {exc}")
        engines.append(_hydrate_mock(spec))
    return tuple(engines)


def _hydrate_mock(spec: EngineSpec) -> EngineSpec:
    """Attach scripted behavior to specs whose command is the mock engine.

    A registry line that invokes ``measp.mock_engine`` with a readable
    ``--table`` file gets its table loaded so the engine also works with
    simulate=True. Anything unreadable is left alone; the engine still
    runs as a real subprocess.
    """
    tmpl = spec.command_template
    if "measp.mock_engine" not in tmpl or "--table" not in tmpl:
        return spec
    table_path = tmpl[tmpl.index("--table") + 1:][:1]
    if not table_path:
        return spec
    try:
        payload = json.loads(Path(table_path[0]).read_text())
        entries = {iid: MockEntry(v["status"],
                                  float(v.get("cpu_seconds", 0.0)),
                                  v.get("answer"))
                   for iid, v in payload.items()}
    except (OSError, ValueError, KeyError, TypeError, AttributeError):
        return spec
    return EngineSpec(spec.name, spec.role, spec.input_format,
                      spec.output_format, tmpl,
                      MockBehavior(entries, spec.role, spec.output_format))


def registry_load(path) -> tuple[EngineSpec, ...]:
    return registry_loads(Path(path).read_text())


def registry_dumps(engines) -> str:
    lines = []
    for e in engines:
        argv = " ".join(shlex.quote(a) for a in e.command_template)
        lines.append(f"engine {e.name} {e.role} {e.input_format} "
                     f"{e.output_format} {argv}")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# outcome classification

_MEMOUT_TOKENS = ("bad_alloc", "memoryerror", "out of memory",
                  "cannot allocate memory", "memout")
_UNSAT_RE = re.compile(r"\b(UNSATISFIABLE|INCOHERENT|INCONSISTENT)\b")
_SAT_RE = re.compile(r"(?m)(?<![A-Z])SATISFIABLE\b|^Answer[: ]")
_ANSWER_HEADER_RE = re.compile(r"(?m)^Answer:?\s*\d*\s*$")


def default_instance_id(input_path) -> str:
    return Path(input_path).name.split(".")[0]


def answer_digest(stdout_text: str) -> str | None:
    """Stable digest of the first printed answer set, if any."""
    lines = stdout_text.splitlines()
    for i, line in enumerate(lines):
        if _ANSWER_HEADER_RE.match(line):
            body = lines[i + 1] if i + 1 < len(lines) else ""
            return _digest_atoms(body)
        stripped = line.strip()
        if stripped.startswith("{") and stripped.endswith("}"):
            return _digest_atoms(stripped[1:-1])
    return None


def _digest_atoms(text: str) -> str:
    atoms = sorted(t for t in text.replace(",", " ").split() if t)
    h = hashlib.sha256(" ".join(atoms).encode())
    return h.hexdigest()[:16]


def classify_outcome(returncode: int, cpu_seconds: float, limits: Limits,
                     stdout_text: str, stderr_text: str,
                     output_format: str) -> tuple[str, str | None, str]:
    """(status, answer_digest, detail) for a finished process."""
    blob = (stdout_text + "\n" + stderr_text).lower()
    if any(tok in blob for tok in _MEMOUT_TOKENS):
        return STATUS_MEMOUT, None, "allocation failure reported"
    if cpu_seconds >= limits.cpu_seconds - _CPU_EPS:
        return STATUS_TIMEOUT, None, "cpu limit reached"
    if returncode == -signal.SIGXCPU:
        return STATUS_TIMEOUT, None, "killed by SIGXCPU"
    if output_format == FORMAT_ANSWER_SETS:
        if _UNSAT_RE.search(stdout_text) or returncode == 20:
            return STATUS_UNSAT, None, ""
        if returncode == 10 or _SAT_RE.search(stdout_text):
            return STATUS_SAT, answer_digest(stdout_text), ""
        return (STATUS_ERROR, None,
                _error_detail(returncode, stderr_text, stdout_text))
    if returncode == 0:
        # non-answer roles: a clean exit means the transformation finished
        return STATUS_SAT, None, ""
    return STATUS_ERROR, None, _error_detail(returncode, stderr_text,
                                             stdout_text)


def _error_detail(returncode: int, stderr_text: str, stdout_text: str) -> str:
    tail = (stderr_text.strip() or stdout_text.strip())[-300:]
    if returncode < 0:
        try:
            signame = signal.Signals(-returncode).name
        except ValueError:
            signame = str(-returncode)
        head = f"killed by {signame}"
    else:
        head = f"exit code {returncode}"
    return f"{head}: {tail}" if tail else head


# ---------------------------------------------------------------------------
# running


def check_platform() -> None:
    """Raise ConfigurationError unless resource limits can be enforced."""
    try:
        import resource  # noqa: F401
    except ImportError:
        raise ConfigurationError("the resource module is unavailable; "
                                 "CPU/memory limits cannot be enforced")
    if not hasattr(os, "wait4"):
        raise ConfigurationError("os.wait4 is unavailable; per-child CPU "
                                 "accounting cannot be enforced")


def run_engine(spec: EngineSpec, input_path, limits: Limits = DEFAULT_LIMITS,
               *, output_path=None, instance_id: str | None = None,
               simulate: bool = False, work_dir=None) -> RunRecord:
    """Run one engine on one input file under the given limits.

    ``simulate`` requires a mock-backed spec and replays its scripted
    outcome in-process on a virtual clock (bit-reproducible, no
    subprocess). Otherwise the command template is launched for real.
    """
    iid = instance_id if instance_id is not None else \
        default_instance_id(input_path)
    if simulate:
        if spec.mock is None:
            raise ValueError(f"engine {spec.name} has no mock behavior "
                             "to simulate")
        return _run_simulated(spec, input_path, limits, iid, output_path)
    return _run_subprocess(spec, input_path, limits, iid, output_path,
                           work_dir)


def _run_simulated(spec: EngineSpec, input_path, limits: Limits, iid: str,
                   output_path) -> RunRecord:
    entry = spec.mock.table.get(iid)
    if spec.role == ROLE_GROUNDER:
        status = entry.status if entry else STATUS_SAT
        cpu = entry.cpu_seconds if entry else 0.0
        if status in (STATUS_SAT, STATUS_UNSAT) and cpu < limits.cpu_seconds:
            detail = ""
            if output_path is not None:
                try:
                    _mock_ground_file(input_path, output_path,
                                      spec.output_format)
                except Exception as exc:
                    return RunRecord(iid, spec.name, STATUS_ERROR, cpu, cpu,
                                     detail=f"grounding failed: {exc}")
            return RunRecord(iid, spec.name, STATUS_SAT, cpu, cpu,
                             detail=detail)
        return _scripted_outcome(spec, iid, entry, limits)
    if entry is None:
        return RunRecord(iid, spec.name, STATUS_ERROR, 0.0, 0.0,
                         detail="no scripted outcome for this instance")
    return _scripted_outcome(spec, iid, entry, limits)


def _scripted_outcome(spec: EngineSpec, iid: str, entry: MockEntry | None,
                      limits: Limits) -> RunRecord:
    if entry is None:
        return RunRecord(iid, spec.name, STATUS_ERROR, 0.0, 0.0,
                         detail="no scripted outcome for this instance")
    cpu = entry.cpu_seconds
    if entry.status in (STATUS_SAT, STATUS_UNSAT):
        if cpu >= limits.cpu_seconds:
            return RunRecord(iid, spec.name, STATUS_TIMEOUT,
                             limits.cpu_seconds, limits.cpu_seconds,
                             detail="cpu limit reached")
        digest = None
        if entry.status == STATUS_SAT and spec.output_format \
                == FORMAT_ANSWER_SETS:
            digest = _digest_atoms(entry.answer or "")
        return RunRecord(iid, spec.name, entry.status, cpu, cpu,
                         answer_digest=digest)
    if entry.status == STATUS_TIMEOUT:
        return RunRecord(iid, spec.name, STATUS_TIMEOUT, limits.cpu_seconds,
                         limits.cpu_seconds, detail="cpu limit reached")
    if entry.status == STATUS_MEMOUT:
        return RunRecord(iid, spec.name, STATUS_MEMOUT,
                         min(cpu, limits.cpu_seconds),
                         min(cpu, limits.cpu_seconds),
                         detail="allocation failure reported")
    return RunRecord(iid, spec.name, STATUS_ERROR, min(cpu, limits.cpu_seconds),
                     min(cpu, limits.cpu_seconds), detail="scripted error")


def _mock_ground_file(input_path, output_path, output_format: str) -> None:
    from . import ground

    program = ground.parse_text_ground(Path(input_path).read_text())
    if output_format == FORMAT_GROUND_NUMERIC:
        data = ground.emit_numeric(program)
    else:
        data = ground.emit_text_ground(program)
    Path(output_path).write_text(data)


def _run_subprocess(spec: EngineSpec, input_path, limits: Limits, iid: str,
                    output_path, work_dir) -> RunRecord:
    check_platform()
    import resource

    tmp_ctx = None
    if output_path is None and "{output}" in spec.command_template:
        tmp_ctx = tempfile.TemporaryDirectory(prefix="measp-run-")
        output_path = Path(tmp_ctx.name) / "engine.out"
    argv = [_fill(a, input_path, output_path) for a in spec.command_template]
    exe = shutil.which(argv[0]) or (argv[0] if os.path.exists(argv[0]) else None)
    if exe is None:
        if tmp_ctx:
            tmp_ctx.cleanup()
        return RunRecord(iid, spec.name, STATUS_ERROR, 0.0, 0.0,
                         detail=f"executable not found: {argv[0]}")
    argv[0] = exe

    hard_cpu = max(1, int(limits.cpu_seconds + 0.999999))
    mem = limits.memory_bytes

    def _child_limits():
        resource.setrlimit(resource.RLIMIT_CPU, (hard_cpu, hard_cpu + 1))
        resource.setrlimit(resource.RLIMIT_AS, (mem, mem))

    wall_cap = 2.0 * limits.cpu_seconds
    start = time.monotonic()
    with tempfile.TemporaryFile() as out_f, tempfile.TemporaryFile() as err_f:
        try:
            proc = subprocess.Popen(
                argv, stdout=out_f, stderr=err_f,
                stdin=subprocess.DEVNULL, cwd=work_dir,
                start_new_session=True, preexec_fn=_child_limits)
        except OSError as exc:
            if tmp_ctx:
                tmp_ctx.cleanup()
            return RunRecord(iid, spec.name, STATUS_ERROR, 0.0, 0.0,
                             detail=f"failed to launch: {exc}")
        watchdog_fired = False
        while True:
            pid, wstatus, rusage = os.wait4(proc.pid, os.WNOHANG)
            if pid == proc.pid:
                break
            if not watchdog_fired and time.monotonic() - start > wall_cap:
                watchdog_fired = True
                _kill_group(proc.pid)
            time.sleep(_POLL_SECONDS)
        # mark the Popen object reaped so its destructor does not wait again
        proc.returncode = _wstatus_to_code(wstatus)
        wall = time.monotonic() - start
        cpu = rusage.ru_utime + rusage.ru_stime
        out_f.seek(0)
        err_f.seek(0)
        stdout_text = out_f.read().decode("utf-8", "replace")
        stderr_text = err_f.read().decode("utf-8", "replace")

    status, digest, detail = classify_outcome(
        proc.returncode, cpu, limits, stdout_text, stderr_text,
        spec.output_format)
    if watchdog_fired and status == STATUS_ERROR:
        detail = f"wall-clock watchdog kill after {wall:.1f}s; {detail}"
    if (status in (STATUS_SAT, STATUS_UNSAT) and output_path is not None
            and "{output}" not in spec.command_template):
        Path(output_path).write_text(stdout_text)
    if status == STATUS_SAT and output_path is not None \
            and spec.output_format != FORMAT_ANSWER_SETS \
            and not Path(output_path).exists():
        status, detail = STATUS_ERROR, "engine produced no output file"
    if tmp_ctx:
        tmp_ctx.cleanup()
    return RunRecord(iid, spec.name, status, cpu, wall,
                     answer_digest=digest, detail=detail)


def _fill(token: str, input_path, output_path) -> str:
    out = token.replace("{input}", str(input_path))
    if "{output}" in out:
        if output_path is None:
            raise ValueError("command template needs {output} but no "
                             "output path was provided")
        out = out.replace("{output}", str(output_path))
    return out


def _kill_group(pid: int) -> None:
    try:
        os.killpg(os.getpgid(pid), signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        pass


def _wstatus_to_code(wstatus: int) -> int:
    if os.WIFSIGNALED(wstatus):
        return -os.WTERMSIG(wstatus)
    if os.WIFEXITED(wstatus):
        return os.WEXITSTATUS(wstatus)
    return 1


# ---------------------------------------------------------------------------
# mock engine construction


def mock_engine(table, *, name: str = "mock", role: str = ROLE_SOLVER,
                input_format: str | None = None,
                output_format: str | None = None,
                table_path=None) -> EngineSpec:
    """An EngineSpec with scripted behavior.

    ``table`` maps instance ids to MockEntry (or to plain dicts / (status,
    cpu) tuples). With ``table_path`` the table is written to disk and the
    returned engine's command line invokes ``measp.mock_engine`` as a real
    subprocess; without it the engine is only usable with simulate=True.
    """
    entries: dict[str, MockEntry] = {}
    for iid, v in table.items():
        if isinstance(v, MockEntry):
            entries[iid] = v
        elif isinstance(v, dict):
            entries[iid] = MockEntry(**v)
        else:
            status, cpu = v
            entries[iid] = MockEntry(status, cpu)
    if input_format is None:
        input_format = FORMAT_NONGROUND if role in (ROLE_GROUNDER, ROLE_BOTH) \
            else FORMAT_GROUND_NUMERIC
    if output_format is None:
        output_format = FORMAT_GROUND_NUMERIC if role == ROLE_GROUNDER \
            else FORMAT_ANSWER_SETS
    if table_path is not None:
        payload = {iid: {"status": e.status, "cpu_seconds": e.cpu_seconds,
                         **({"answer": e.answer} if e.answer is not None
                            else {})}
                   for iid, e in entries.items()}
        Path(table_path).write_text(json.dumps(payload, indent=1))
        command = (sys.executable, "-m", "measp.mock_engine",
                   "--table", str(table_path), "--role", role,
                   "--output-format", output_format)
        if role == ROLE_GROUNDER:
            command += ("--out", "{output}")
        command += ("{input}",)
    else:
        command = ("measp-mock-unmaterialized",)
    return EngineSpec(name, role, input_format, output_format, command,
                      MockBehavior(entries, role, output_format))
