/** Thin fetch client for the session service; the UI's only backend. */

export interface DatasetSummary {
    dataset_id: string;
    name: string;
    n_subjects: number;
    n_variants: number;
    phased: boolean;
    mi_columns: number;
    mi_rows: number;
    parse_report: Record<string, unknown>;
}

export interface SessionSummary {
    session_id: string;
    dataset_id: string;
    version: number;
    rows: number;
    cols: number;
    variants: number;
    aggregated: boolean;
    phased: boolean;
    steps: number;
    selection: { rows: number[]; cols: number[] };
}

export interface MetaColumnPayload {
    name: string;
    type: "CATEGORICAL" | "NUMERICAL";
    values: (string | number | null)[];
    categories?: string[];
    palette?: Record<string, string>;
    range?: { min: number; max: number } | null;
}

export interface MetaPayload {
    version: number;
    row_labels: string[];
    col_labels: string[];
    rows_aggregated: boolean[];
    row_members: number[];
    col_refs: (string | null)[];
    subject_meta: { table: string; columns: MetaColumnPayload[] }[];
    variant_meta: { table: string; columns: MetaColumnPayload[] }[];
}

export type Step = Record<string, unknown> & { type: string };

export class ApiError extends Error {
    constructor(public status: number, public kind: string, message: string) {
        super(message);
    }
}

async function jsonOrThrow(resp: Response): Promise<any> {
    if (resp.ok) return resp.json();
    let kind = "HttpError";
    let message = `${resp.status}`;
    try {
        const body = await resp.json();
        kind = body?.error?.type ?? kind;
        message = body?.error?.message ?? message;
    } catch { /* non-JSON error body */ }
    throw new ApiError(resp.status, kind, message);
}

export class ApiClient {
    constructor(private base: string = "") {}

    url(path: string): string {
        return this.base + path;
    }

    async loadDatasetByPath(spec: {
        path: string; format: string; sample_path?: string;
        subject_meta?: string[]; variant_meta?: string[];
    }): Promise<{ dataset_id: string; summary: DatasetSummary }> {
        const resp = await fetch(this.url("/datasets"), {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(spec),
        });
        return jsonOrThrow(resp);
    }

    async uploadDataset(form: FormData): Promise<{ dataset_id: string; summary: DatasetSummary }> {
        const resp = await fetch(this.url("/datasets"), { method: "POST", body: form });
        return jsonOrThrow(resp);
    }

    async listDatasets(): Promise<{ datasets: DatasetSummary[] }> {
        return jsonOrThrow(await fetch(this.url("/datasets")));
    }

    async createSession(datasetId: string): Promise<{ session_id: string; summary: SessionSummary }> {
        const resp = await fetch(this.url("/sessions"), {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({ dataset_id: datasetId }),
        });
        return jsonOrThrow(resp);
    }

    async sessionSummary(sessionId: string): Promise<SessionSummary> {
        const body = await jsonOrThrow(await fetch(this.url(`/sessions/${sessionId}`)));
        return body.summary;
    }

    async postStep(sessionId: string, step: Step): Promise<SessionSummary> {
        const resp = await fetch(this.url(`/sessions/${sessionId}/steps`), {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(step),
        });
        return (await jsonOrThrow(resp)).summary;
    }

    async undo(sessionId: string): Promise<SessionSummary> {
        const resp = await fetch(this.url(`/sessions/${sessionId}/steps/last`),
                                 { method: "DELETE" });
        return (await jsonOrThrow(resp)).summary;
    }

    async fetchTile(sessionId: string, version: number, r0: number, r1: number,
                    c0: number, c1: number): Promise<ArrayBuffer> {
        const resp = await fetch(this.url(
            `/sessions/${sessionId}/tile?rows=${r0}..${r1}&cols=${c0}..${c1}&version=${version}`));
        if (!resp.ok) throw new ApiError(resp.status, "TileError", `tile ${resp.status}`);
        return resp.arrayBuffer();
    }

    async fetchMeta(sessionId: string): Promise<MetaPayload> {
        return jsonOrThrow(await fetch(this.url(`/sessions/${sessionId}/meta`)));
    }

    async fetchLog(sessionId: string): Promise<{ version: number; steps: Step[] }> {
        return jsonOrThrow(await fetch(this.url(`/sessions/${sessionId}/log`)));
    }

    overviewUrl(sessionId: string, maxW: number, maxH: number, encoding: string): string {
        return this.url(`/sessions/${sessionId}/overview?maxW=${maxW}&maxH=${maxH}`
            + `&encoding=${encoding}`);
    }

    exportUrl(sessionId: string, q: {
        format: string; region: string; rows?: string; cols?: string;
        encoding: string; aggStyle: string; cellW: number; cellH: number; grid: boolean;
    }): string {
        const params = new URLSearchParams({
            format: q.format, region: q.region, encoding: q.encoding,
            agg_style: q.aggStyle, cell_w: String(q.cellW), cell_h: String(q.cellH),
            grid: q.grid ? "1" : "0",
        });
        if (q.rows) params.set("rows", q.rows);
        if (q.cols) params.set("cols", q.cols);
        return this.url(`/sessions/${sessionId}/export?${params}`);
    }
}
