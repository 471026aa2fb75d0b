"""Command-line entry points: run, bench, synth, and serve.

Report commands write delimited output (CSV/JSON) and render the matching
figures into the same directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path
from typing import Mapping, Sequence

from ..errors import DrillexError
from ..explain import CONDITIONS, synth_harness
from ..schema import ViewSpec
from .bench import run_bench
from .ingest import Dataset, ingest
from .sessions import SessionState, recommend, recommendation_payload, \
    set_complaint
from . import figures


def _view_from_json(dataset: Dataset, spec: Mapping | None) -> ViewSpec:
    view = dataset.root_view()
    if not spec:
        return view
    groupby = spec.get("groupby", {})
    ordered = tuple(
        (h.name, int(groupby[h.name])) for h in dataset.schema.hierarchies
        if h.name in groupby)
    provenance = tuple(sorted(spec.get("provenance", {}).items()))
    return ViewSpec(groupby=ordered, drilled=spec.get("drilled"),
                    provenance=provenance, aggregates=view.aggregates,
                    measure=spec.get("measure", view.measure))


def _load_complaint(text: str) -> dict:
    path = Path(text)
    if path.exists():
        text = path.read_text(encoding="utf-8")
    return json.loads(text)


def _write_candidates_csv(payload: Mapping, path: Path) -> None:
    fields = ["hierarchy", "rank", "group", "score", "repaired_value",
              "actual_count", "actual_mean", "actual_std",
              "repaired_count", "repaired_mean", "repaired_std"]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=fields)
        writer.writeheader()
        for ranking in payload["rankings"]:
            for position, c in enumerate(ranking["candidates"], start=1):
                writer.writerow({
                    "hierarchy": ranking["hierarchy"],
                    "rank": position,
                    "group": "|".join(str(v) for v in c["group"]),
                    "score": c["score"],
                    "repaired_value": c["repaired_value"],
                    "actual_count": c["actual"]["count"],
                    "actual_mean": c["actual"]["mean"],
                    "actual_std": c["actual"]["std"],
                    "repaired_count": c["repaired"]["count"],
                    "repaired_mean": c["repaired"]["mean"],
                    "repaired_std": c["repaired"]["std"],
                })


def _cmd_run(args: argparse.Namespace) -> int:
    dataset = ingest(args.config)
    raw = _load_complaint(args.complaint)
    view = _view_from_json(dataset, raw.get("view"))
    session = SessionState("cli", dataset, view)
    set_complaint(session, raw["group"], raw["stat"], raw["direction"],
                  raw.get("target_value"))
    payload = recommendation_payload(
        recommend(session, args.k, args.iterations))
    text = json.dumps(payload, indent=2)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "recommendations.json").write_text(text + "\n",
                                                  encoding="utf-8")
        _write_candidates_csv(payload, out / "candidates.csv")
        figures.save_scores_figure(payload, out / "scores.png")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    rows = run_bench(depths=range(1, args.depth + 1), width=args.width,
                     seed=args.seed, repeats=args.repeats)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fields = ["depth", "width", "rows", "materialize_s", "gram_s",
              "left_s", "right_s", "dense_gram_s"]
    with open(out / "bench.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(fields)
        for r in rows:
            writer.writerow([r.depth, r.width, r.rows,
                             f"{r.materialize_s:.6f}", f"{r.gram_s:.6f}",
                             f"{r.left_s:.6f}", f"{r.right_s:.6f}",
                             f"{r.dense_gram_s:.6f}"])
    figures.save_bench_figure(rows, out / "bench.png")
    print("\t".join(fields))
    for r in rows:
        print(f"{r.depth}\t{r.width}\t{r.rows}\t{r.materialize_s:.6f}"
              f"\t{r.gram_s:.6f}\t{r.left_s:.6f}\t{r.right_s:.6f}"
              f"\t{r.dense_gram_s:.6f}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    conditions = tuple(args.conditions.split(","))
    results = synth_harness(conditions=conditions, rhos=tuple(args.rho),
                            trials=args.trials, groups=args.groups,
                            seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "synth.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["condition", "method", "rho", "trials", "hits",
                         "accuracy"])
        for r in results:
            writer.writerow([r.condition, r.method, r.rho, r.trials,
                             r.hits, f"{r.accuracy:.4f}"])
    figures.save_synth_figure(results, out / "synth.png")
    print(json.dumps([
        {"condition": r.condition, "method": r.method, "rho": r.rho,
         "trials": r.trials, "accuracy": r.accuracy}
        for r in results
    ], indent=2))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    app = create_app(ingest(args.config), train_iterations=args.iterations)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drillex",
        description="Complaint-driven drill-down recommendations over "
                    "hierarchical data.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="score one complaint and emit "
                                       "recommendations as JSON")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--complaint", required=True,
                       help="JSON text or path: view, group, stat, "
                            "direction, target_value")
    run_p.add_argument("--k", type=int, default=5)
    run_p.add_argument("--iterations", type=int, default=20)
    run_p.add_argument("--seed", type=int, default=0,
                       help="accepted for interface parity; scoring is "
                            "deterministic")
    run_p.add_argument("--out", help="directory for JSON/CSV plus the "
                                     "score figure")
    run_p.set_defaults(fn=_cmd_run)

    bench_p = sub.add_parser("bench", help="time factorised operators vs "
                                           "the materialized route")
    bench_p.add_argument("--depth", type=int, default=5)
    bench_p.add_argument("--width", type=int, default=10)
    bench_p.add_argument("--repeats", type=int, default=3)
    bench_p.add_argument("--seed", type=int, default=0)
    bench_p.add_argument("--out", default="bench_report")
    bench_p.set_defaults(fn=_cmd_bench)

    synth_p = sub.add_parser("synth", help="synthetic accuracy harness")
    synth_p.add_argument("--trials", type=int, default=200)
    synth_p.add_argument("--rho", type=float, action="append",
                         default=None)
    synth_p.add_argument("--conditions", default=",".join(CONDITIONS))
    synth_p.add_argument("--groups", type=int, default=100)
    synth_p.add_argument("--seed", type=int, default=7)
    synth_p.add_argument("--out", default="synth_report")
    synth_p.set_defaults(fn=_cmd_synth)

    serve_p = sub.add_parser("serve", help="HTTP JSON API")
    serve_p.add_argument("--config", required=True)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int,
                         default=int(os.environ.get("DRILLEX_PORT", "8000")))
    serve_p.add_argument("--iterations", type=int, default=20)
    serve_p.set_defaults(fn=_cmd_serve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "synth" and args.rho is None:
        args.rho = [1.0]
    try:
        return args.fn(args)
    except (DrillexError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
