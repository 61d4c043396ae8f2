"""Command line surface.

Subcommands: analyze, index, run, gen, bench, catalog. Exit codes follow
the failure family, so scripts can tell a bad invocation from a planning
dead end from corrupt data:

    0  success
    1  usage: bad flags, unreadable job source, ill-typed program
    2  planning: stale index, descriptor/schema mismatch, bad injection
    3  data: corrupt files, runtime job errors, lock timeouts

The default catalog path comes from MINIMAP_CATALOG when --catalog is not
given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from minimap.analysis.cfg import cfg_to_dot
from minimap.analysis.context import AnalysisContext
from minimap.analysis.usedef import dump_usedef
from minimap.detect.descriptors import AnalysisDocument, InputId
from minimap.detect.detectors import analyze
from minimap.engine import run_index_gen, run_job
from minimap.errors import (
    DecodeError,
    DictionaryFullError,
    EmptyPoolError,
    JobError,
    LockError,
    MiniMapError,
    NotSargableError,
    ParseError,
    PlanMismatchError,
    RewriteError,
    StaleIndexError,
    TypeCheckError,
    UnsortedInputError,
    ValidationError,
)
from minimap.lang.ast import AssignStmt, EmitStmt, IfStmt, LetStmt, LogStmt, WhileStmt
from minimap.lang.parser import parse_program
from minimap.lang.pretty import pretty_expr
from minimap.lang.typecheck import TypedJob, typecheck
from minimap.optimizer import plan
from minimap.storage.catalog import Catalog, sha256_of
from minimap.workload.generators import (
    DocumentGenSpec,
    UserVisitsGenSpec,
    WebPageGenSpec,
    gen_documents,
    gen_pages_blob,
    gen_uservisits,
    gen_webpages,
)
from minimap.workload.suite import SCALES, bench_suite, render_report

_USAGE_ERRORS = (ParseError, TypeCheckError)
_PLAN_ERRORS = (StaleIndexError, PlanMismatchError, RewriteError,
                ValidationError, NotSargableError)
_DATA_ERRORS = (DecodeError, JobError, UnsortedInputError, DictionaryFullError,
                LockError, EmptyPoolError)

EXIT_OK, EXIT_USAGE, EXIT_PLAN, EXIT_DATA = 0, 1, 2, 3


def _classify_exit(exc: MiniMapError) -> int:
    if isinstance(exc, _USAGE_ERRORS):
        return EXIT_USAGE
    if isinstance(exc, _PLAN_ERRORS):
        return EXIT_PLAN
    if isinstance(exc, _DATA_ERRORS):
        return EXIT_DATA
    return EXIT_DATA


def _load_job(path: str) -> TypedJob:
    try:
        with open(path, "r", encoding="utf-8") as f:
            src = f.read()
    except OSError as exc:
        raise SystemExit(_fail(f"cannot read job source {path}: {exc}", EXIT_USAGE))
    return typecheck(parse_program(src))


def _fail(msg: str, code: int) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _require_file(path: str, what: str) -> None:
    if not os.path.isfile(path):
        raise SystemExit(_fail(f"{what} not found: {path}", EXIT_USAGE))


def _catalog_path(arg) -> str:
    path = arg if arg else os.environ.get("MINIMAP_CATALOG", "")
    if not path:
        raise SystemExit(_fail(
            "no catalog given: pass --catalog or set MINIMAP_CATALOG", EXIT_USAGE))
    return path


def _load_entries(catalog: Catalog, schema_name: str):
    entries, bad = catalog.load()
    for lineno, msg in bad:
        print(f"warning: {catalog.path}:{lineno}: {msg}", file=sys.stderr)
    return [e for e in entries if e.schema_name == schema_name]


# --------------------------------------------------------------------------
# subcommands

def _cmd_analyze(args) -> int:
    _require_file(args.job, "job source")
    typed = _load_job(args.job)
    ident = None
    if args.input:
        _require_file(args.input, "input file")
        ident = InputId(path=args.input, sha256=sha256_of(args.input))
    doc = analyze(typed, ident)
    if args.dump_cfg:
        _dump_cfg(typed)
    if args.dump_usedef:
        _dump_usedef(typed)
    print(json.dumps(doc.to_json(), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_index(args) -> int:
    _require_file(args.job, "job source")
    _require_file(args.input, "input file")
    typed = _load_job(args.job)
    ident = InputId(path=args.input, sha256=sha256_of(args.input))
    doc = analyze(typed, ident)
    specs = doc.index_specs
    if args.spec:
        specs = [s for s in specs if s.label == args.spec]
        if not specs:
            have = ", ".join(s.label for s in doc.index_specs) or "none"
            return _fail(f"no index spec labeled {args.spec!r} (have: {have})",
                         EXIT_PLAN)
    if not specs:
        print("nothing to build: analysis found no optimization opportunities")
        return EXIT_OK
    catalog = Catalog(_catalog_path(args.catalog))
    for spec in specs:
        entry = run_index_gen(spec, args.input, catalog, out_dir=args.out_dir)
        print(json.dumps({"label": entry.label, "artifact": entry.artifact,
                          "path": entry.path, "rows": entry.rows,
                          "size_bytes": entry.size_bytes}, sort_keys=True))
    return EXIT_OK


def _cmd_run(args) -> int:
    _require_file(args.job, "job source")
    _require_file(args.input, "input file")
    typed = _load_job(args.job)
    ident = InputId(path=args.input, sha256=sha256_of(args.input))

    if args.descriptors:
        _require_file(args.descriptors, "descriptor file")
        with open(args.descriptors, "r", encoding="utf-8") as f:
            try:
                obj = json.load(f)
            except ValueError as exc:
                return _fail(f"descriptor file is not JSON: {exc}", EXIT_PLAN)
        doc = AnalysisDocument.from_json(obj, typed)
        if doc.job_name != typed.job.name:
            print(f"note: descriptors were written for job {doc.job_name!r}",
                  file=sys.stderr)
    else:
        doc = analyze(typed, ident)

    drop_select = False
    if args.safe_mode and AnalysisContext(typed).logs_on_emit_paths():
        drop_select = True
        print("safe mode: log statements sit on emit paths, "
              "disabling selection so the log stream stays complete",
              file=sys.stderr)

    if args.no_opt:
        entries = []
    else:
        catalog = Catalog(_catalog_path(args.catalog))
        entries = _load_entries(catalog, typed.schema.name)

    desc = plan(doc, entries, ident, typed.schema,
                no_opt=args.no_opt, drop_select=drop_select)
    if args.explain:
        print(json.dumps(desc.to_json(), indent=2, sort_keys=True))
        return EXIT_OK

    output = args.output or f"{args.input}.{typed.job.name}.out.mmrf"
    result = run_job(typed, desc, output, reducers=args.reducers)
    for line in result.logs:
        print(f"log: {line}", file=sys.stderr)
    payload = {
        "output": result.output_path,
        "plan": desc.to_json(),
        "stats": result.stats.to_json(),
    }
    if args.stats == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        s = result.stats
        print(f"wrote {result.output_path}")
        print(f"plan: {desc.source} ({', '.join(desc.active) or 'no optimizations'})")
        print(f"records scanned: {s.records_scanned}  bytes read: {s.bytes_read}")
        print(f"pairs emitted: {s.pairs_emitted}  reduce groups: {s.reduce_groups}")
        print(f"wall: {s.wall_millis:.1f} ms")
    return EXIT_OK


def _cmd_gen(args) -> int:
    if args.kind == "webpages":
        gen_webpages(WebPageGenSpec(n=args.n, seed=args.seed,
                                    content_size=args.content_size,
                                    rank_max=args.rank_max), args.out)
    elif args.kind == "pages-blob":
        gen_pages_blob(WebPageGenSpec(n=args.n, seed=args.seed,
                                      content_size=args.content_size,
                                      rank_max=args.rank_max), args.out)
    elif args.kind == "uservisits":
        if not args.pages:
            return _fail("gen uservisits needs --pages (the URL pool file)",
                         EXIT_USAGE)
        _require_file(args.pages, "pages file")
        gen_uservisits(UserVisitsGenSpec(n=args.n, pages_path=args.pages,
                                         seed=args.seed, zipf_s=args.zipf_s),
                       args.out)
    else:
        gen_documents(DocumentGenSpec(n=args.n, seed=args.seed,
                                      content_size=args.content_size), args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    report = bench_suite(args.scale, args.workdir, seed=args.seed)
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(render_report(report))
    if report["errors"]:
        return EXIT_DATA
    return EXIT_OK


def _cmd_catalog(args) -> int:
    catalog = Catalog(_catalog_path(args.catalog))
    entries, bad = catalog.load()
    for lineno, msg in bad:
        print(f"warning: {catalog.path}:{lineno}: {msg}", file=sys.stderr)
    if args.action == "list":
        for e in entries:
            print(json.dumps(e.to_json(), sort_keys=True))
        print(f"{len(entries)} entries, {len(bad)} malformed lines",
              file=sys.stderr)
        return EXIT_OK
    failures = 0
    for e in entries:
        ok, reason = catalog.verify(e)
        status = "ok" if ok else f"FAIL ({reason})"
        print(f"{e.label:12} {e.artifact:6} {e.path}: {status}")
        failures += 0 if ok else 1
    if failures:
        return _fail(f"{failures} of {len(entries)} entries failed verification",
                     EXIT_DATA)
    print(f"all {len(entries)} entries verified")
    return EXIT_OK


# --------------------------------------------------------------------------
# debug dumps

def _stmt_head(s) -> str:
    """One-line rendering of a statement for graph labels."""
    if isinstance(s, LetStmt):
        return f"let {s.name} = {pretty_expr(s.expr)}"
    if isinstance(s, AssignStmt):
        return f"{s.name} = {pretty_expr(s.expr)}"
    if isinstance(s, EmitStmt):
        return f"emit({pretty_expr(s.key)}, {pretty_expr(s.value)})"
    if isinstance(s, LogStmt):
        return f"log({pretty_expr(s.expr)})"
    if isinstance(s, IfStmt):
        return f"if ({pretty_expr(s.cond)})"
    if isinstance(s, WhileStmt):
        return f"while ({pretty_expr(s.cond)})"
    return pretty_expr(s.expr)  # ExprStmt


def _dump_cfg(typed: TypedJob) -> None:
    ctx = AnalysisContext(typed)
    print(cfg_to_dot(ctx.cfg, _stmt_head), file=sys.stderr)


def _dump_usedef(typed: TypedJob) -> None:
    ctx = AnalysisContext(typed)
    for emit in ctx.map_emits:
        text = dump_usedef(ctx.cfg.stmts, ctx.reaching, emit.sid,
                           typed.schema.key_field, _stmt_head)
        print(text, file=sys.stderr)


# --------------------------------------------------------------------------
# argument parsing

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="minimap",
        description="analyze, index and run MiniMap jobs")
    sub = p.add_subparsers(dest="cmd", required=True)

    pa = sub.add_parser("analyze", help="print optimization descriptors for a job")
    pa.add_argument("job", help="job source file")
    pa.add_argument("--input", help="input record file (binds artifact identity)")
    pa.add_argument("--dump-cfg", action="store_true", help="print the CFG to stderr")
    pa.add_argument("--dump-usedef", action="store_true",
                    help="print per-emit use-def summaries to stderr")
    pa.set_defaults(fn=_cmd_analyze)

    pi = sub.add_parser("index", help="build index artifacts for a job's input")
    pi.add_argument("job")
    pi.add_argument("--input", required=True)
    pi.add_argument("--catalog", help="catalog file (default MINIMAP_CATALOG)")
    pi.add_argument("--spec", help="build only this labeled spec")
    pi.add_argument("--out-dir", help="directory for artifacts (default: beside input)")
    pi.set_defaults(fn=_cmd_index)

    pr = sub.add_parser("run", help="plan and execute a job")
    pr.add_argument("job")
    pr.add_argument("--input", required=True)
    pr.add_argument("--output", help="output record file")
    pr.add_argument("--catalog", help="catalog file (default MINIMAP_CATALOG)")
    pr.add_argument("--no-opt", action="store_true", help="force the raw scan")
    pr.add_argument("--descriptors", help="inject a descriptor document (skips analysis)")
    pr.add_argument("--safe-mode", action="store_true",
                    help="keep selection off when logs sit on emit paths")
    pr.add_argument("--reducers", type=int, default=1)
    pr.add_argument("--stats", choices=["text", "json"], default="text")
    pr.add_argument("--explain", action="store_true",
                    help="print the chosen plan and exit without running")
    pr.set_defaults(fn=_cmd_run)

    pg = sub.add_parser("gen", help="generate benchmark datasets")
    pg.add_argument("kind", choices=["webpages", "pages-blob", "uservisits",
                                     "documents"])
    pg.add_argument("--out", required=True)
    pg.add_argument("--n", type=int, required=True)
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--content-size", type=int, default=510)
    pg.add_argument("--rank-max", type=int, default=100)
    pg.add_argument("--pages", help="URL pool file (uservisits only)")
    pg.add_argument("--zipf-s", type=float, default=0.99)
    pg.set_defaults(fn=_cmd_gen)

    pb = sub.add_parser("bench", help="run the four-benchmark suite")
    pb.add_argument("--scale", choices=sorted(SCALES), required=True)
    pb.add_argument("--workdir", required=True)
    pb.add_argument("--seed", type=int, default=1234)
    pb.add_argument("--json", action="store_true", help="emit the report as JSON")
    pb.set_defaults(fn=_cmd_bench)

    pc = sub.add_parser("catalog", help="inspect or verify a catalog")
    pc.add_argument("action", choices=["list", "verify"])
    pc.add_argument("catalog", nargs="?", help="catalog file (default MINIMAP_CATALOG)")
    pc.set_defaults(fn=_cmd_catalog)

    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; remap to the documented usage code
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except MiniMapError as exc:
        return _fail(str(exc), _classify_exit(exc))
    except ValueError as exc:
        return _fail(str(exc), EXIT_USAGE)
    except OSError as exc:
        return _fail(str(exc), EXIT_DATA)


if __name__ == "__main__":
    sys.exit(main())
