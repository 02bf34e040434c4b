"""Deterministic scripted engine, runnable as a real subprocess.

Reads a JSON table mapping instance ids to outcomes and then behaves like
a tiny solver or grounder: it burns the scripted amount of CPU (a real
spin, so rusage accounting and RLIMIT_CPU see it), prints solver-style
output, and exits with solver-style codes (10 sat, 20 unsat). A scripted
``timeout`` spins until the enforced CPU limit kills the process; a
``memout`` prints an allocation-failure token without actually hogging
memory, so tests stay cheap.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path


def burn_cpu(seconds: float) -> None:
    """Spin (not sleep) until this process has used `seconds` of CPU."""
    t0 = time.process_time()
    x = 1.0
    while time.process_time() - t0 < seconds:
        for _ in range(1000):
            x = x * 1.000001 + 1.0
        if x > 1e12:
            x = 1.0


def _instance_id(path: str) -> str:
    return Path(path).name.split(".")[0]


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="measp-mock", description=__doc__)
    ap.add_argument("--table", required=True,
                    help="JSON file: instance id -> scripted outcome")
    ap.add_argument("--role", default="solver",
                    choices=["solver", "grounder", "both"])
    ap.add_argument("--output-format", default="answer-sets")
    ap.add_argument("--out", help="output file for grounder runs")
    ap.add_argument("input")
    args = ap.parse_args(argv)

    table = json.loads(Path(args.table).read_text())
    entry = table.get(_instance_id(args.input))

    if args.role == "grounder":
        return _run_grounder(args, entry)
    if entry is None:
        print("mock: no scripted outcome for this instance", file=sys.stderr)
        return 3
    burn_cpu(float(entry.get("cpu_seconds", 0.0)))
    status = entry["status"]
    if status == "solved-sat":
        print("Answer: 1")
        print(entry.get("answer", ""))
        print("SATISFIABLE")
        return 10
    if status == "solved-unsat":
        print("UNSATISFIABLE")
        return 20
    if status == "timeout":
        burn_cpu(86400.0)  # the enforced CPU limit kills us first
        return 1
    if status == "memout":
        print("mock allocation failure: std::bad_alloc", file=sys.stderr)
        return 1
    print("mock: scripted error", file=sys.stderr)
    return 3


def _run_grounder(args, entry) -> int:
    if entry is not None:
        burn_cpu(float(entry.get("cpu_seconds", 0.0)))
        status = entry["status"]
        if status == "timeout":
            burn_cpu(86400.0)
            return 1
        if status == "memout":
            print("mock allocation failure: std::bad_alloc", file=sys.stderr)
            return 1
        if status == "error":
            print("mock: scripted error", file=sys.stderr)
            return 3
    from .ground import emit_numeric, emit_text_ground, parse_text_ground

    try:
        program = parse_text_ground(Path(args.input).read_text())
        if args.output_format == "ground-numeric":
            data = emit_numeric(program)
        else:
            data = emit_text_ground(program)
    except Exception as exc:
        print(f"mock grounder failed: {exc}", file=sys.stderr)
        return 3
    if args.out:
        Path(args.out).write_text(data)
    else:
        sys.stdout.write(data)
    return 0


if __name__ == "__main__":
    sys.exit(main())
