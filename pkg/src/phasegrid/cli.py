"""Headless command line: inspect files, render pipelines, run the service.

Exit codes are a stable contract: 0 success, 1 input error (unreadable or
malformed data files), 2 pipeline error (a bad step, reported with its
index). `render` and the service share one rendering code path, so a CLI
render and a service export of the same step list are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from pathlib import Path

from .dataset import MetaKind, attach_meta
from .errors import PhaseGridError
from .ingest import parse_impute2, parse_meta, parse_vcf
from .render import AggStyle, Encoding, RenderOptions, export_image
from .steps import ClearSelection, InvalidStep, Select, step_from_json
from .transform import ViewChain

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_PIPELINE = 2


def _add_input_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("input", help="VCF or IMPUTE2 haplotype file")
    parser.add_argument("--input-format", choices=("vcf", "impute2"),
                        help="default: by extension (.haps/.hap -> impute2)")
    parser.add_argument("--sample", help="IMPUTE2 sample-ID file")
    parser.add_argument("--subject-meta", action="append", default=[],
                        metavar="FILE", help="two-header subject meta file")
    parser.add_argument("--variant-meta", action="append", default=[],
                        metavar="FILE", help="two-header variant meta file")


def _detect_format(args) -> str:
    if args.input_format:
        return args.input_format
    suffix = Path(args.input).suffix.lower()
    return "impute2" if suffix in (".haps", ".hap", ".impute2") else "vcf"


def _load_dataset(args):
    fmt = _detect_format(args)
    with open(args.input, "r", encoding="utf-8") as stream:
        if fmt == "impute2":
            if not args.sample:
                raise PhaseGridError("IMPUTE2 input needs --sample")
            with open(args.sample, "r", encoding="utf-8") as samples:
                ds, report = parse_impute2(stream, samples)
        else:
            ds, report = parse_vcf(stream)
    for kind, paths in ((MetaKind.SUBJECT, args.subject_meta),
                        (MetaKind.VARIANT, args.variant_meta)):
        for path in paths:
            with open(path, "r", encoding="utf-8") as stream:
                table = parse_meta(stream, kind, name=Path(path).stem)
            ds = attach_meta(ds, table, kind)
            unknown = ds.meta_tables(kind)[-1].unknown_ids
            if unknown:
                report.meta_unknown_ids[Path(path).stem] = len(unknown)
    return ds, report


def cmd_info(args) -> int:
    try:
        ds, report = _load_dataset(args)
    except (OSError, PhaseGridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"subjects: {ds.matrix.n_subjects}")
    print(f"variants: {ds.matrix.n_variants}")
    print(f"phased: {str(ds.phased).lower()}")
    print(f"mi_columns: {ds.mi_column_count()}")
    print(f"mi_rows: {ds.mi_row_count()}")
    print(f"records: {report.records}")
    print(f"retained: {report.retained}")
    print(f"skipped_non_snv: {report.skipped_non_snv}")
    print(f"mixed_separators: {str(report.mixed_separators).lower()}")
    for name, count in report.meta_unknown_ids.items():
        print(f"meta_unknown_ids[{name}]: {count}")
    return EXIT_OK


def _load_pipeline(path: str | None):
    if not path:
        return []
    with open(path, "r", encoding="utf-8") as stream:
        data = json.load(stream)
    if isinstance(data, dict) and "steps" in data:
        data = data["steps"]
    if not isinstance(data, list):
        raise InvalidStep("pipeline must be a JSON array of steps")
    return data


def cmd_render(args) -> int:
    try:
        ds, _ = _load_dataset(args)
    except (OSError, PhaseGridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        raw_steps = _load_pipeline(args.pipeline)
    except (OSError, json.JSONDecodeError, InvalidStep) as exc:
        print(f"error: pipeline: {exc}", file=sys.stderr)
        return EXIT_PIPELINE

    chain = ViewChain(ds)
    steps = []
    for index, obj in enumerate(raw_steps):
        try:
            steps.append(step_from_json(obj))
        except InvalidStep as exc:
            print(f"error: pipeline step {index}: {exc}", file=sys.stderr)
            return EXIT_PIPELINE
    sel_rows: set[int] = set()
    sel_cols: set[int] = set()
    try:
        for index, step in enumerate(steps):
            try:
                if isinstance(step, Select):
                    d = chain.derived
                    if any(not 0 <= i < d.n_rows for i in step.rows) or \
                       any(not 0 <= j < d.n_cols for j in step.cols):
                        raise PhaseGridError("selection outside derived view")
                    sel_rows, sel_cols = set(step.rows), set(step.cols)
                elif isinstance(step, ClearSelection):
                    sel_rows, sel_cols = set(), set()
                else:
                    chain = chain.with_step(step)
                    d = chain.derived
                    sel_rows = {i for i in sel_rows if i < d.n_rows}
                    sel_cols = {j for j in sel_cols if j < d.n_cols}
            except PhaseGridError as exc:
                print(f"error: pipeline step {index}: {exc}", file=sys.stderr)
                return EXIT_PIPELINE
        opts = RenderOptions(
            encoding=Encoding(args.encoding.upper()),
            agg_style=AggStyle(args.agg_style.upper()),
            cell_width=args.cell_w, cell_height=args.cell_h,
            show_grid=args.grid)
        blob = export_image(chain.derived, opts, args.format, "FULL",
                            selected_rows=sorted(sel_rows),
                            selected_cols=sorted(sel_cols))
    except PhaseGridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    try:
        Path(args.output).write_bytes(blob)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"wrote {args.output} ({len(blob)} bytes)")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    host, _, port_s = args.bind.rpartition(":")
    host = host or "127.0.0.1"
    try:
        port = int(port_s)
    except ValueError:
        print(f"error: bad --bind {args.bind!r}", file=sys.stderr)
        return EXIT_INPUT
    config = ServiceConfig(
        data_root=Path(args.data_root).resolve() if args.data_root else None,
        session_ttl=args.session_ttl,
        max_upload=args.max_upload,
        ui_dir=Path(args.ui_dir).resolve() if args.ui_dir else None,
    )
    app = create_app(config)
    try:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((host, port))
    except OSError as exc:
        print(f"error: cannot bind {host}:{port}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    try:
        # uvicorn re-raises the captured signal after its graceful shutdown
        server.run(sockets=[sock])
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasegrid",
        description="Packed haplotype matrix explorer: parse, transform, render, serve.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_info = sub.add_parser("info", help="parse inputs and print a summary")
    _add_input_args(p_info)
    p_info.set_defaults(func=cmd_info)

    p_render = sub.add_parser("render", help="run a pipeline file and export an image")
    _add_input_args(p_render)
    p_render.add_argument("--pipeline", help="JSON step list (service log schema)")
    p_render.add_argument("--output", required=True)
    p_render.add_argument("--format", default="png", choices=("png", "svg"))
    p_render.add_argument("--encoding", default="nucleotide",
                          choices=("nucleotide", "reference", "genotype"))
    p_render.add_argument("--agg-style", default="saturation",
                          choices=("saturation", "bar"))
    p_render.add_argument("--cell-w", type=int, default=8)
    p_render.add_argument("--cell-h", type=int, default=8)
    p_render.add_argument("--grid", action="store_true")
    p_render.set_defaults(func=cmd_render)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--bind", default="127.0.0.1:8765", metavar="HOST:PORT")
    p_serve.add_argument("--data-root", help="directory the JSON dataset API may read")
    p_serve.add_argument("--session-ttl", type=float, default=3600.0)
    p_serve.add_argument("--max-upload", type=int, default=512 * 1024 * 1024)
    p_serve.add_argument("--ui-dir", help="serve a built frontend at /ui")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
