"""Command-line interface; a thin HTTP client of the service.

Every subcommand serializes its inputs into the service's request
schemas and POSTs them. By default the app is mounted in-process through
an ASGI transport (no socket, same payloads); ``--server URL`` sends the
identical requests to a running ``measp serve`` instance instead. File
arguments are read client-side and shipped as text, except the program
and instance paths of ``solve``/``bench``, which name files on the
server's filesystem because the engines run there.
"""

from __future__ import annotations

import argparse
import asyncio
import sys
from pathlib import Path

import httpx


class ClientError(Exception):
    pass


def _post_via_asgi(path: str, payload: dict) -> httpx.Response:
    from .service import create_app

    async def go() -> httpx.Response:
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://measp.internal",
                                     timeout=httpx.Timeout(None)) as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def request(server: str | None, path: str, payload: dict) -> dict:
    try:
        if server:
            with httpx.Client(base_url=server,
                              timeout=httpx.Timeout(None)) as client:
                resp = client.post(path, json=payload)
        else:
            resp = _post_via_asgi(path, payload)
    except httpx.HTTPError as exc:
        raise ClientError(f"request failed: {exc}")
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail")
        except Exception:
            detail = None
        raise ClientError(str(detail) if detail else
                          f"HTTP {resp.status_code}: {resp.text[:500]}")
    return resp.json()


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ClientError(str(exc))


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _fmt(v: float | None, digits: int = 2) -> str:
    return "-" if v is None else f"{v:.{digits}f}"


def _format_feature_output(resp: dict, as_csv: bool) -> str:
    from .features import format_value

    if as_csv:
        header = ",".join(["instance_id"] + resp["names"])
        row = ",".join([resp["instance_id"]]
                       + [format_value(v) for v in resp["values"]])
        return header + "\n" + row + "\n"
    return "".join(f"{n} {format_value(v)}\n"
                   for n, v in zip(resp["names"], resp["values"]))


def _sniff_ground_format(text: str) -> str:
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if all(tok.lstrip("-").isdigit() for tok in line.split()):
            return "ground-numeric"
        return "ground-text"
    return "ground-numeric"


# ---------------------------------------------------------------------------
# subcommands


def cmd_extract_ground(args) -> int:
    text = _read(args.program)
    fmt = args.format
    if fmt == "auto":
        fmt = _sniff_ground_format(text)
    resp = request(args.server, "/features/ground",
                   {"program": text, "format": fmt,
                    "instance_id": args.instance_id})
    _write_or_print(_format_feature_output(resp, args.csv), args.output)
    return 0


def cmd_extract_nonground(args) -> int:
    text = _read(args.program)
    resp = request(args.server, "/features/nonground",
                   {"program": text, "instance_id": args.instance_id})
    for warning in resp.get("warnings", []):
        print(f"warning: {warning}", file=sys.stderr)
    _write_or_print(_format_feature_output(resp, args.csv), args.output)
    return 0


def cmd_train(args) -> int:
    resp = request(args.server, "/train",
                   {"algo": args.algo, "features_csv": _read(args.features),
                    "runtimes_csv": _read(args.runs), "k": args.k,
                    "min_leaf": args.min_leaf})
    Path(args.model).write_text(resp["model_text"])
    counts = ", ".join(f"{lab}={n}"
                       for lab, n in sorted(resp["label_counts"].items()))
    print(f"trained {resp['algo']} on {resp['n_rows']} rows "
          f"({resp['manifest']}): {counts}")
    if resp["excluded"]:
        print(f"excluded (solved by no engine): "
              f"{', '.join(resp['excluded'])}")
    print(f"model written to {args.model}")
    return 0


def cmd_predict(args) -> int:
    resp = request(args.server, "/predict",
                   {"model_text": _read(args.model),
                    "features_csv": _read(args.features)})
    for row in resp["predictions"]:
        print(f"{row['instance_id']} {row['label']}")
    return 0


def cmd_solve(args) -> int:
    payload = {
        "program_path": args.program,
        "registry_text": _read(args.engines),
        "solver_model_text": _read(args.model) if args.model else None,
        "grounder_model_text": (_read(args.grounder_model)
                                if args.grounder_model else None),
        "timeout_seconds": args.timeout,
        "memory_mib": args.memory,
        "bridge_mode": args.bridge_mode,
        "simulate": args.simulate,
        "instance_id": args.instance_id,
    }
    resp = request(args.server, "/solve", payload)
    print(f"instance: {resp['instance_id']}")
    print(f"status: {resp['status']}")
    print(f"grounder: {resp['selected_grounder']}")
    print(f"solver: {resp['selected_solver']}")
    print(f"cpu_seconds: {resp['cpu_seconds']:.3f}")
    if resp.get("answer_digest"):
        print(f"answer_digest: {resp['answer_digest']}")
    if args.trace:
        Path(args.trace).write_text(resp["trace_text"])
    if args.trace_csv:
        Path(args.trace_csv).write_text(resp["trace_csv_header"] + "\n"
                                        + resp["trace_csv_row"] + "\n")
    return int(resp["exit_code"])


def cmd_bench(args) -> int:
    payload = {
        "instance_paths": args.instances,
        "registry_text": _read(args.engines),
        "timeout_seconds": args.timeout,
        "memory_mib": args.memory,
        "jobs": args.jobs,
        "resume_path": args.resume,
        "simulate": args.simulate,
    }
    resp = request(args.server, "/bench", payload)
    if args.output:
        Path(args.output).write_text(resp["table_csv"])
        print(f"runtime table written to {args.output}")
    else:
        sys.stdout.write(resp["table_csv"])
    _print_stats(resp)
    return 0


def _print_stats(resp: dict) -> None:
    print(f"{'engine':<24}{'solved':>8}{'total_cpu':>12}{'mean_cpu':>10}")
    for row in resp["engines"]:
        print(f"{row['engine']:<24}{row['n_solved']:>8}"
              f"{row['total_time_solved']:>12.2f}"
              f"{_fmt(row['mean_time_solved']):>10}")
    s = resp["sota"]
    print(f"{'sota (virtual best)':<24}{s['solved']:>8}"
          f"{'':>12}{_fmt(s['mean_time_solved']):>10}"
          f"   ({s['solved']}/{s['total']} solved)")


def cmd_stats(args) -> int:
    resp = request(args.server, "/stats",
                   {"runtimes_csv": _read(args.table)})
    _print_stats(resp)
    return 0


def cmd_cactus(args) -> int:
    resp = request(args.server, "/cactus",
                   {"runtimes_csv": _read(args.table)})
    _write_or_print(resp["csv"], args.output)
    return 0


def cmd_cv(args) -> int:
    resp = request(args.server, "/cv",
                   {"features_csv": _read(args.features),
                    "runtimes_csv": _read(args.runs), "algo": args.algo,
                    "folds": args.folds, "k": args.k,
                    "min_leaf": args.min_leaf, "seed": args.seed})
    print(f"accuracy: {resp['accuracy']:.4f} over "
          f"{len(resp['fold_accuracies'])} folds ({resp['n_rows']} rows)")
    folds = " ".join(f"{a:.3f}" for a in resp["fold_accuracies"])
    print(f"per-fold: {folds}")
    if resp["excluded"]:
        print(f"excluded (solved by no engine): "
              f"{', '.join(resp['excluded'])}")
    print("confusion (truth -> predicted):")
    for truth, row in sorted(resp["confusion"].items()):
        cells = ", ".join(f"{got}={n}" for got, n in sorted(row.items()))
        print(f"  {truth}: {cells}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="measp",
        description="Multi-engine ASP toolkit: feature extraction, engine "
                    "selection, benchmarking")
    parser.add_argument("--server", metavar="URL",
                        help="send requests to a running measp serve "
                             "instance instead of in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-ground",
                       help="52-feature vector of a ground program")
    p.add_argument("program")
    p.add_argument("--format", choices=["auto", "ground-numeric",
                                        "ground-text"], default="auto")
    p.add_argument("--instance-id", default=None)
    p.add_argument("--csv", action="store_true",
                   help="emit a CSV header+row instead of name-value lines")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_extract_ground)

    p = sub.add_parser("extract-nonground",
                       help="11-feature vector of a non-ground program")
    p.add_argument("program")
    p.add_argument("--instance-id", default=None)
    p.add_argument("--csv", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_extract_nonground)

    p = sub.add_parser("train", help="fit a model from features + runtimes")
    p.add_argument("--algo", choices=["knn", "part"], required=True)
    p.add_argument("--features", required=True, metavar="CSV")
    p.add_argument("--runs", required=True, metavar="CSV")
    p.add_argument("--model", required=True,
                   help="output path for the model file")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--min-leaf", type=int, default=2)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify feature rows with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True, metavar="CSV")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("solve", help="run the full selection pipeline")
    p.add_argument("program", help="non-ground program file (server-local)")
    p.add_argument("--engines", required=True, metavar="REGISTRY")
    p.add_argument("--model", help="solver-selection model file")
    p.add_argument("--grounder-model", help="grounder-selection model file")
    p.add_argument("--timeout", type=float, default=600.0,
                   help="CPU seconds per engine run (default 600)")
    p.add_argument("--memory", type=int, default=2048,
                   help="memory limit in MiB (default 2048)")
    p.add_argument("--bridge-mode",
                   choices=["canonical", "paper-faithful"],
                   default="canonical")
    p.add_argument("--simulate", action="store_true",
                   help="replay mock-engine tables without subprocesses")
    p.add_argument("--instance-id", default=None)
    p.add_argument("--trace", help="write the key-value trace here")
    p.add_argument("--trace-csv", help="write the one-row trace CSV here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run every engine on every instance")
    p.add_argument("--instances", nargs="+", required=True,
                   help="instance files or directories (server-local)")
    p.add_argument("--engines", required=True, metavar="REGISTRY")
    p.add_argument("--timeout", type=float, default=600.0)
    p.add_argument("--memory", type=int, default=2048)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--resume", metavar="CSV",
                   help="append to this runtime CSV, skipping finished pairs")
    p.add_argument("--simulate", action="store_true")
    p.add_argument("-o", "--output", metavar="CSV")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", help="per-engine summary of a runtime CSV")
    p.add_argument("table", metavar="CSV")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("cactus", help="cactus-plot CSV from a runtime CSV")
    p.add_argument("table", metavar="CSV")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_cactus)

    p = sub.add_parser("cv", help="cross-validate a classifier")
    p.add_argument("--features", required=True, metavar="CSV")
    p.add_argument("--runs", required=True, metavar="CSV")
    p.add_argument("--algo", choices=["knn", "part"], required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--min-leaf", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "instance_id", "x") is None:
        source = getattr(args, "program", None)
        args.instance_id = (Path(source).name.split(".")[0]
                            if source else "instance")
    try:
        return args.func(args)
    except ClientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
