"""Session-based HTTP facade over datasets, view chains, tiles and exports.

Control plane is JSON; tiles go out as the binary format in tile.py. Every
mutation of a session appends to its replayable step log and bumps the
chain version; readers may pass ?version= to fail fast (409) when a
mutation landed between their requests. Sessions are in-memory with an
idle TTL; their durable form is the serialized step log.
"""

from __future__ import annotations

import io
import json
import re
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .dataset import Dataset, MetaKind, MetaType, PM_TABLE, attach_meta
from .errors import (
    DimensionMismatch,
    EmptyRender,
    InvalidFormat,
    OutOfBounds,
    ParseError,
    PhaseGridError,
)
from .ingest import ParseReport, parse_impute2, parse_meta, parse_vcf
from .render import (
    AggStyle,
    Encoding,
    RenderOptions,
    export_image,
    render_overview,
    to_png,
)
from .steps import ClearSelection, Select, step_from_json, step_to_json
from .tile import Tile, encode_tile
from .transform import DerivedView, ViewChain, replay_steps, view_cells

#: Category color cycle for meta panels (client may override).
CATEGORY_PALETTE = (
    "#1B9E77", "#D95F02", "#7570B3", "#E7298A", "#66A61E",
    "#E6AB02", "#A6761D", "#666666", "#1F78B4", "#B2DF8A",
)


@dataclass
class ServiceConfig:
    data_root: Optional[Path] = None
    session_ttl: float = 3600.0
    max_upload: int = 512 * 1024 * 1024
    clock: Callable[[], float] = time.monotonic
    ui_dir: Optional[Path] = None


@dataclass
class DatasetEntry:
    id: str
    name: str
    dataset: Dataset
    report: ParseReport


@dataclass
class SessionState:
    id: str
    dataset_id: str
    chain: ViewChain
    log: list = field(default_factory=list)          # step JSON objects
    timestamps: list = field(default_factory=list)   # float seconds, not replayed
    sel_rows: set = field(default_factory=set)
    sel_cols: set = field(default_factory=set)
    version: int = 0
    last_access: float = 0.0
    lock: threading.Lock = field(default_factory=threading.Lock)


class ApiError(Exception):
    def __init__(self, status: int, kind: str, message: str, line=None):
        self.status = status
        self.payload = {"error": {"type": kind, "message": message}}
        if line is not None:
            self.payload["error"]["line"] = line
        super().__init__(message)


def _api_error(exc: Exception, status: int) -> ApiError:
    line = getattr(exc, "line", None)
    return ApiError(status, type(exc).__name__, str(exc), line)


_RANGE_RX = re.compile(r"^(\d+)\.\.(\d+)$")


def _parse_range(text: str, what: str) -> tuple[int, int]:
    m = _RANGE_RX.match(text or "")
    if not m:
        raise ApiError(400, "InvalidRange", f"{what} must look like a..b")
    return int(m.group(1)), int(m.group(2))


def _dataset_summary(entry: DatasetEntry) -> dict:
    ds = entry.dataset
    return {
        "dataset_id": entry.id,
        "name": entry.name,
        "n_subjects": ds.matrix.n_subjects,
        "n_variants": ds.matrix.n_variants,
        "phased": ds.phased,
        "mi_columns": ds.mi_column_count(),
        "mi_rows": ds.mi_row_count(),
        "parse_report": entry.report.to_json(),
    }


def _derived_summary(session: SessionState, derived: DerivedView) -> dict:
    return {
        "session_id": session.id,
        "dataset_id": session.dataset_id,
        "version": session.version,
        "rows": derived.n_rows,
        "cols": derived.n_cols,
        "variants": len(derived.variant_order()),
        "aggregated": derived.aggregated,
        "phased": derived.dataset.phased,
        "steps": len(session.log),
        "selection": {"rows": sorted(session.sel_rows), "cols": sorted(session.sel_cols)},
    }


def _render_options(params) -> RenderOptions:
    try:
        encoding = Encoding((params.get("encoding") or "NUCLEOTIDE").upper())
        agg_style = AggStyle((params.get("agg_style") or "SATURATION").upper())
    except ValueError as exc:
        raise ApiError(400, "InvalidFormat", str(exc)) from None
    try:
        cell_w = int(params.get("cell_w") or 8)
        cell_h = int(params.get("cell_h") or 8)
    except ValueError:
        raise ApiError(400, "InvalidFormat", "cell sizes must be integers") from None
    show_grid = (params.get("grid") or "").lower() in ("1", "true", "yes")
    try:
        return RenderOptions(encoding=encoding, agg_style=agg_style,
                             cell_width=cell_w, cell_height=cell_h,
                             show_grid=show_grid)
    except ValueError as exc:
        raise ApiError(400, "InvalidFormat", str(exc)) from None


class Registry:
    """In-memory datasets and sessions; sessions expire after an idle TTL."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.datasets: dict[str, DatasetEntry] = {}
        self.sessions: dict[str, SessionState] = {}
        self._lock = threading.Lock()

    def add_dataset(self, name: str, dataset: Dataset, report: ParseReport) -> DatasetEntry:
        entry = DatasetEntry(id=uuid.uuid4().hex[:12], name=name,
                             dataset=dataset, report=report)
        with self._lock:
            self.datasets[entry.id] = entry
        return entry

    def dataset(self, dataset_id: str) -> DatasetEntry:
        entry = self.datasets.get(dataset_id)
        if entry is None:
            raise ApiError(404, "UnknownDataset", f"no dataset {dataset_id!r}")
        return entry

    def create_session(self, dataset_id: str) -> SessionState:
        entry = self.dataset(dataset_id)
        session = SessionState(id=uuid.uuid4().hex[:12], dataset_id=entry.id,
                               chain=ViewChain(entry.dataset),
                               last_access=self.config.clock())
        with self._lock:
            self.sessions[session.id] = session
        return session

    def session(self, session_id: str) -> SessionState:
        now = self.config.clock()
        with self._lock:
            expired = [sid for sid, s in self.sessions.items()
                       if now - s.last_access > self.config.session_ttl]
            for sid in expired:
                del self.sessions[sid]
            session = self.sessions.get(session_id)
        if session is None:
            raise ApiError(404, "UnknownSession", f"no session {session_id!r}")
        session.last_access = now
        return session


def _resolve_under_root(root: Optional[Path], rel: str) -> Path:
    if root is None:
        raise ApiError(400, "NoDataRoot", "service started without a data root")
    base = root.resolve()
    candidate = (base / rel).resolve()
    if not candidate.is_relative_to(base):
        raise ApiError(400, "InvalidPath", f"path escapes the data root: {rel!r}")
    if not candidate.exists():
        raise ApiError(404, "UnknownPath", f"no such file under data root: {rel!r}")
    return candidate


def _parse_dataset(fmt: str, data_lines, sample_lines, name: str,
                   subject_meta_files, variant_meta_files) -> tuple[Dataset, ParseReport]:
    fmt = (fmt or "").upper()
    if fmt == "VCF":
        ds, report = parse_vcf(data_lines)
    elif fmt == "IMPUTE2":
        if sample_lines is None:
            raise ApiError(400, "MissingSample", "IMPUTE2 needs a sample file")
        ds, report = parse_impute2(data_lines, sample_lines)
    else:
        raise ApiError(400, "InvalidFormat", f"format must be VCF or IMPUTE2, got {fmt!r}")
    for kind, files in ((MetaKind.SUBJECT, subject_meta_files),
                        (MetaKind.VARIANT, variant_meta_files)):
        for meta_name, lines in files:
            table = parse_meta(lines, kind, name=meta_name)
            ds = attach_meta(ds, table, kind)
            unknown = ds.meta_tables(kind)[-1].unknown_ids
            if unknown:
                report.meta_unknown_ids[meta_name] = len(unknown)
    return ds, report


def _session_steps_mutation(session: SessionState, step_obj: dict):
    step = step_from_json(step_obj)
    derived = session.chain.derived
    if isinstance(step, Select):
        if any(not 0 <= i < derived.n_rows for i in step.rows) or \
           any(not 0 <= j < derived.n_cols for j in step.cols):
            raise ApiError(400, "OutOfBounds", "selection outside derived view")
        session.sel_rows, session.sel_cols = set(step.rows), set(step.cols)
    elif isinstance(step, ClearSelection):
        session.sel_rows, session.sel_cols = set(), set()
    else:
        session.chain = session.chain.with_step(step)
        d = session.chain.derived
        session.sel_rows = {i for i in session.sel_rows if i < d.n_rows}
        session.sel_cols = {j for j in session.sel_cols if j < d.n_cols}
    session.log.append(step_to_json(step))
    session.timestamps.append(time.time())
    session.version += 1


def _rebuild_from_log(session: SessionState, dataset: Dataset) -> None:
    steps = [step_from_json(obj) for obj in session.log]
    chain, sel_rows, sel_cols = replay_steps(dataset, steps)
    session.chain = chain
    session.sel_rows, session.sel_cols = sel_rows, sel_cols


def _check_version(session: SessionState, params) -> None:
    raw = params.get("version")
    if raw is None:
        return
    try:
        wanted = int(raw)
    except ValueError:
        raise ApiError(400, "InvalidVersion", "version must be an integer") from None
    if wanted != session.version:
        raise ApiError(409, "VersionMismatch",
                       f"chain version is {session.version}, request expected {wanted}")


def _meta_payload(session: SessionState) -> dict:
    derived = session.chain.derived
    ds = derived.dataset
    rows = derived.rows

    def column_payload(col, values):
        out = {"name": col.name, "type": col.type.value, "values": values}
        if col.type is MetaType.CATEGORICAL:
            cats = sorted({str(v) for v in values if v is not None})
            out["categories"] = cats
            out["palette"] = {c: CATEGORY_PALETTE[i % len(CATEGORY_PALETTE)]
                              for i, c in enumerate(cats)}
        else:
            present = [v for v in values if v is not None]
            out["range"] = ({"min": min(present), "max": max(present)}
                            if present else None)
        return out

    subject_tables = []
    for table in ds.subject_meta:
        cols = []
        for col in table.columns:
            values = []
            for row in rows:
                if row.aggregated:
                    values.append((row.meta or {}).get(col.name))
                else:
                    values.append(col.values.get(ds.subjects[row.members[0]]))
            cols.append(column_payload(col, values))
        subject_tables.append({"table": table.name, "columns": cols})

    variant_tables = []
    for table in ds.variant_meta:
        cols = []
        for col in table.columns:
            if table.name == PM_TABLE:
                values = derived.pm_values()
                payload = {"name": col.name, "type": col.type.value, "values": values,
                           "categories": ["M", "P"],
                           "palette": {"P": CATEGORY_PALETTE[0], "M": CATEGORY_PALETTE[1]}}
                cols.append(payload)
                continue
            values = [col.values.get(ds.variants.ids[v]) for v, _ in derived.cols]
            cols.append(column_payload(col, values))
        variant_tables.append({"table": table.name, "columns": cols})

    return {
        "version": session.version,
        "row_labels": derived.row_labels(),
        "col_labels": derived.col_labels(),
        "rows_aggregated": [r.aggregated for r in rows],
        "row_members": [len(r.members) for r in rows],
        # reference base per allele column: clients need it to paint the
        # REFERENCE and GENOTYPE encodings locally
        "col_refs": [ds.variants.refs[v] for v, _ in derived.cols],
        "subject_meta": subject_tables,
        "variant_meta": variant_tables,
    }


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    registry = Registry(config)
    app = FastAPI(title="phasegrid", version="0.1.0")
    app.state.registry = registry
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.exception_handler(ApiError)
    async def on_api_error(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.payload)

    async def read_body_guarded(request: Request) -> bytes:
        length = request.headers.get("content-length")
        if length and int(length) > config.max_upload:
            raise ApiError(413, "TooLarge", "upload exceeds the configured maximum")
        body = await request.body()
        if len(body) > config.max_upload:
            raise ApiError(413, "TooLarge", "upload exceeds the configured maximum")
        return body

    @app.post("/datasets")
    async def create_dataset(request: Request):
        content_type = request.headers.get("content-type", "")
        opened: list = []

        def tracked(stream):
            opened.append(stream)
            return stream

        try:
            if content_type.startswith("multipart/form-data"):
                form = await request.form()
                fmt = str(form.get("format") or "")
                data_file = form.get("data")
                if data_file is None:
                    raise ApiError(400, "MissingData", "multipart field 'data' required")
                name = getattr(data_file, "filename", None) or "upload"

                async def lines_of(upload):
                    if upload is None:
                        return None
                    raw = await upload.read()
                    if len(raw) > config.max_upload:
                        raise ApiError(413, "TooLarge", "upload exceeds the configured maximum")
                    return io.StringIO(raw.decode("utf-8"))

                data_lines = await lines_of(data_file)
                sample_lines = await lines_of(form.get("sample"))
                smeta = []
                vmeta = []
                for key, bucket in (("subject_meta", smeta), ("variant_meta", vmeta)):
                    for upload in form.getlist(key):
                        fname = getattr(upload, "filename", None) or key
                        bucket.append((Path(fname).stem, await lines_of(upload)))
            else:
                body = await read_body_guarded(request)
                try:
                    spec = json.loads(body or b"{}")
                except json.JSONDecodeError:
                    raise ApiError(400, "InvalidJson", "body must be JSON") from None
                fmt = spec.get("format", "")
                rel = spec.get("path")
                if not rel:
                    raise ApiError(400, "MissingData", "JSON body needs a 'path'")
                path = _resolve_under_root(config.data_root, str(rel))
                name = Path(str(rel)).name
                data_lines = tracked(open(path, "r", encoding="utf-8"))
                sample_lines = None
                if spec.get("sample_path"):
                    sample_lines = tracked(open(
                        _resolve_under_root(config.data_root, str(spec["sample_path"])),
                        "r", encoding="utf-8"))
                smeta = []
                vmeta = []
                for key, bucket in (("subject_meta", smeta), ("variant_meta", vmeta)):
                    for rel_meta in spec.get(key, ()) or ():
                        p = _resolve_under_root(config.data_root, str(rel_meta))
                        bucket.append((p.stem, tracked(open(p, "r", encoding="utf-8"))))
            try:
                ds, report = _parse_dataset(fmt, data_lines, sample_lines, name, smeta, vmeta)
            except (ParseError, DimensionMismatch, PhaseGridError) as exc:
                raise _api_error(exc, 422) from None
        finally:
            for stream in opened:
                stream.close()
        entry = registry.add_dataset(name, ds, report)
        return {"dataset_id": entry.id, "summary": _dataset_summary(entry)}

    @app.get("/datasets")
    def list_datasets():
        return {"datasets": [_dataset_summary(e) for e in registry.datasets.values()]}

    @app.get("/datasets/{dataset_id}")
    def get_dataset(dataset_id: str):
        return {"summary": _dataset_summary(registry.dataset(dataset_id))}

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await read_body_guarded(request)
        try:
            spec = json.loads(body or b"{}")
        except json.JSONDecodeError:
            raise ApiError(400, "InvalidJson", "body must be JSON") from None
        session = registry.create_session(str(spec.get("dataset_id", "")))
        return {"session_id": session.id,
                "summary": _derived_summary(session, session.chain.derived)}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = registry.session(session_id)
        return {"summary": _derived_summary(session, session.chain.derived)}

    @app.post("/sessions/{session_id}/steps")
    async def post_step(session_id: str, request: Request):
        session = registry.session(session_id)
        body = await read_body_guarded(request)
        try:
            step_obj = json.loads(body or b"{}")
        except json.JSONDecodeError:
            raise ApiError(400, "InvalidJson", "body must be a JSON step object") from None
        with session.lock:
            try:
                _session_steps_mutation(session, step_obj)
            except PhaseGridError as exc:
                raise _api_error(exc, 400) from None
            return {"summary": _derived_summary(session, session.chain.derived)}

    @app.delete("/sessions/{session_id}/steps/last")
    def undo_step(session_id: str):
        session = registry.session(session_id)
        with session.lock:
            if not session.log:
                raise ApiError(400, "NothingToUndo", "step log is empty")
            session.log.pop()
            session.timestamps.pop()
            entry = registry.dataset(session.dataset_id)
            _rebuild_from_log(session, entry.dataset)
            session.version += 1
            return {"summary": _derived_summary(session, session.chain.derived)}

    @app.get("/sessions/{session_id}/tile")
    def get_tile(session_id: str, rows: str = "", cols: str = "",
                 version: Optional[str] = None):
        session = registry.session(session_id)
        with session.lock:
            _check_version(session, {"version": version})
            derived = session.chain.derived
            current_version = session.version
        r0, r1 = _parse_range(rows, "rows")
        c0, c1 = _parse_range(cols, "cols")
        if not (r0 <= r1 <= derived.n_rows and c0 <= c1 <= derived.n_cols):
            raise ApiError(416, "OutOfBounds",
                           f"window outside derived view {derived.n_rows}x{derived.n_cols}")
        try:
            codes, freqs = view_cells(derived, r0, r1, c0, c1)
        except OutOfBounds as exc:
            raise _api_error(exc, 416) from None
        freq_bytes = None
        if freqs is not None:
            freq_bytes = np.minimum(255, (freqs * 255.0 + 0.5)).astype(np.uint8)
        tile = Tile(row_start=r0, col_start=c0, codes=codes, freqs=freq_bytes,
                    phased=derived.dataset.phased)
        return Response(content=encode_tile(tile),
                        media_type="application/octet-stream",
                        headers={"X-Chain-Version": str(current_version)})

    @app.get("/sessions/{session_id}/overview")
    def get_overview(session_id: str, request: Request,
                     maxW: int = 200, maxH: int = 200,
                     version: Optional[str] = None):
        session = registry.session(session_id)
        with session.lock:
            _check_version(session, {"version": version})
            derived = session.chain.derived
            current_version = session.version
        opts = _render_options(request.query_params)
        try:
            pixels = render_overview(derived, maxW, maxH, opts)
        except EmptyRender as exc:
            raise _api_error(exc, 400) from None
        return Response(content=to_png(pixels), media_type="image/png",
                        headers={"X-Chain-Version": str(current_version)})

    @app.get("/sessions/{session_id}/export")
    def get_export(session_id: str, request: Request, format: str = "PNG",
                   region: str = "FULL", rows: Optional[str] = None,
                   cols: Optional[str] = None, version: Optional[str] = None):
        session = registry.session(session_id)
        with session.lock:
            _check_version(session, {"version": version})
            derived = session.chain.derived
            sel_rows = sorted(session.sel_rows)
            sel_cols = sorted(session.sel_cols)
            current_version = session.version
        opts = _render_options(request.query_params)
        window = None
        if (region or "").upper() == "VISIBLE":
            if rows is None or cols is None:
                raise ApiError(400, "InvalidRange", "VISIBLE export needs rows and cols")
            r0, r1 = _parse_range(rows, "rows")
            c0, c1 = _parse_range(cols, "cols")
            window = (r0, r1, c0, c1)
        try:
            blob = export_image(derived, opts, format, region, window,
                                sel_rows, sel_cols)
        except (InvalidFormat, EmptyRender) as exc:
            raise _api_error(exc, 400) from None
        media = "image/png" if format.upper() == "PNG" else "image/svg+xml"
        return Response(content=blob, media_type=media,
                        headers={"X-Chain-Version": str(current_version)})

    @app.get("/sessions/{session_id}/meta")
    def get_meta(session_id: str, version: Optional[str] = None):
        session = registry.session(session_id)
        with session.lock:
            _check_version(session, {"version": version})
            return _meta_payload(session)

    @app.get("/sessions/{session_id}/log")
    def get_log(session_id: str):
        session = registry.session(session_id)
        with session.lock:
            return {"version": session.version,
                    "steps": list(session.log),
                    "timestamps": list(session.timestamps)}

    if config.ui_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=str(config.ui_dir), html=True),
                  name="ui")

    return app
