/**
 * Client session state: server-authoritative summaries and meta, local
 * render settings, the tile cache, and the step dispatch path every
 * gesture funnels through. No DOM in here.
 */

import { ApiClient, MetaPayload, SessionSummary, Step } from "./api.js";
import { AggStyle, ColorScheme, Encoding, defaultScheme } from "./colors.js";
import { TileCache, TileData, TileKey } from "./tiles.js";
import { Viewport, defaultViewport } from "./viewport.js";

export const TILE_SIZE = 64;

export interface RenderSettings {
    encoding: Encoding;
    style: AggStyle;
    showGrid: boolean;
    scheme: ColorScheme;
}

export type Listener = (event: string) => void;

export class SessionStore {
    summary: SessionSummary | null = null;
    meta: MetaPayload | null = null;
    viewport: Viewport = defaultViewport();
    settings: RenderSettings = {
        encoding: Encoding.NUCLEOTIDE,
        style: AggStyle.SATURATION,
        showGrid: false,
        scheme: defaultScheme(),
    };
    lastChange = "ready";
    readonly cache: TileCache;
    private listeners: Listener[] = [];

    constructor(public api: ApiClient, public sessionId: string) {
        this.cache = new TileCache((k: TileKey) =>
            api.fetchTile(this.sessionId, k.version, k.r0, k.r1, k.c0, k.c1));
    }

    onChange(listener: Listener): void {
        this.listeners.push(listener);
    }

    private emit(event: string): void {
        for (const l of this.listeners) l(event);
    }

    get version(): number {
        return this.summary?.version ?? 0;
    }

    /** Display dimensions under the current encoding. */
    dims(): { rows: number; cols: number } {
        if (!this.summary) return { rows: 0, cols: 0 };
        const cols = this.settings.encoding === Encoding.GENOTYPE
            ? Math.floor(this.summary.cols / 2) : this.summary.cols;
        return { rows: this.summary.rows, cols };
    }

    async refresh(): Promise<void> {
        this.summary = await this.api.sessionSummary(this.sessionId);
        this.meta = await this.api.fetchMeta(this.sessionId);
        this.cache.invalidate(this.summary.version);
        this.emit("refresh");
    }

    /** Apply one step; on success the cache is invalidated wholesale. */
    async dispatchStep(step: Step): Promise<SessionSummary> {
        const summary = await this.api.postStep(this.sessionId, step);
        this.summary = summary;
        this.meta = await this.api.fetchMeta(this.sessionId);
        this.cache.invalidate(summary.version);
        this.lastChange = `${step.type} -> ${summary.rows} rows x ${summary.cols} columns`
            + ` (${summary.variants} variants)`;
        this.emit("step");
        return summary;
    }

    async undo(): Promise<void> {
        const summary = await this.api.undo(this.sessionId);
        this.summary = summary;
        this.meta = await this.api.fetchMeta(this.sessionId);
        this.cache.invalidate(summary.version);
        this.lastChange = `undo -> ${summary.rows} rows x ${summary.cols} columns`;
        this.emit("step");
    }

    updateSettings(patch: Partial<RenderSettings>): void {
        this.settings = { ...this.settings, ...patch };
        this.emit("settings");
    }

    updateViewport(patch: Partial<Viewport>): void {
        this.viewport = { ...this.viewport, ...patch };
        this.emit("viewport");
    }

    /**
     * Tiles overlapping an allele-column window plus one tile of margin,
     * aligned to the TILE_SIZE lattice. Returns cached tiles immediately
     * and kicks off fetches for the rest.
     */
    tilesFor(r0: number, r1: number, c0: number, c1: number,
             onTile: (t: TileData) => void): TileData[] {
        if (!this.summary) return [];
        const nRows = this.summary.rows;
        const nCols = this.summary.cols;
        const ready: TileData[] = [];
        const lo = (v: number) => Math.max(0, Math.floor(v / TILE_SIZE) - 1) * TILE_SIZE;
        for (let r = lo(r0); r < Math.min(r1 + TILE_SIZE, nRows); r += TILE_SIZE) {
            for (let c = lo(c0); c < Math.min(c1 + TILE_SIZE, nCols); c += TILE_SIZE) {
                const key: TileKey = {
                    version: this.version,
                    r0: r, r1: Math.min(r + TILE_SIZE, nRows),
                    c0: c, c1: Math.min(c + TILE_SIZE, nCols),
                };
                const cached = this.cache.peek(key);
                if (cached) {
                    ready.push(cached);
                } else {
                    void this.cache.fetch(key).then((tile) => {
                        if (tile && key.version === this.version) onTile(tile);
                    }).catch(() => this.emit("tile-error"));
                }
            }
        }
        return ready;
    }
}
