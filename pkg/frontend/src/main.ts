/**
 * Six-panel browser UI: haplotype heatmap canvas fed by binary tiles,
 * subject and SNV meta panels, draggable overview, settings, summary, a
 * quick-button bar (New / Filtering / Aggregate / Export), a status bar
 * showing the last change, and a log viewer.
 *
 * Every canvas access is guarded so the component tree also mounts under
 * jsdom (where 2D contexts are unavailable) for gesture tests.
 */

import { ApiClient, MetaColumnPayload, Step } from "./api.js";
import { AggStyle, ColorRole, Encoding, MISSING_CODE, hexToRgb,
         rgbToHex, roleColor } from "./colors.js";
import { aggregateStep, clearSelectionStep, filterStep, selectStep,
         sortColsStep, sortRowsStep, FilterDialogValues } from "./gestures.js";
import { CellWindow, paintWindow } from "./paint.js";
import { SessionStore } from "./state.js";
import { TileData } from "./tiles.js";
import { clampViewport, dragToOffsets, overviewRect, visibleCounts, zoomCells,
         zoomMetaCells } from "./viewport.js";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, cls?: string, text?: string): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (cls) node.className = cls;
    if (text !== undefined) node.textContent = text;
    return node;
}

function ctx2d(canvas: HTMLCanvasElement): CanvasRenderingContext2D | null {
    try {
        return canvas.getContext("2d");
    } catch {
        return null; // jsdom throws without the optional canvas package
    }
}

function option(value: string, label?: string): HTMLOptionElement {
    const o = document.createElement("option");
    o.value = value;
    o.textContent = label ?? value;
    return o;
}

export class App {
    root: HTMLElement;
    store: SessionStore;
    heatmap = el("canvas", "heatmap-canvas");
    overview = el("canvas", "overview-canvas");
    subjectMeta = el("canvas", "subject-meta-canvas");
    variantMeta = el("canvas", "variant-meta-canvas");
    subjectMetaHeaders = el("div", "meta-headers subject-meta-headers");
    variantMetaLabels = el("div", "meta-labels variant-meta-labels");
    rowHeaders = el("div", "row-headers");
    colHeaders = el("div", "col-headers");
    summaryPanel = el("div", "panel summary-panel");
    settingsPanel = el("div", "panel settings-panel");
    statusBar = el("div", "status-bar", "ready");
    errorBanner = el("div", "error-banner hidden");
    dialogHost = el("div", "dialog-host");
    private overviewImage: HTMLImageElement | null = null;
    private raf = 0;

    constructor(root: HTMLElement, store: SessionStore) {
        this.root = root;
        this.store = store;
        this.build();
        store.onChange((event) => {
            if (event === "tile-error") this.showError("tile fetch/decode failed");
            if (event === "step" || event === "refresh") this.reloadOverview();
            this.statusBar.textContent = store.lastChange;
            this.renderSummary();
            this.renderSettingsValues();
            this.scheduleRepaint();
        });
    }

    private build(): void {
        this.root.textContent = "";
        this.root.appendChild(this.buildToolbar());

        const grid = el("div", "layout");
        const left = el("div", "left-column");
        const ovPanel = el("div", "panel overview-panel");
        ovPanel.appendChild(el("h3", undefined, "Overview"));
        ovPanel.appendChild(this.overview);
        left.appendChild(ovPanel);
        this.summaryPanel.appendChild(el("h3", undefined, "Summary"));
        left.appendChild(this.summaryPanel);
        grid.appendChild(left);

        const center = el("div", "center-column");
        const hap = el("div", "panel haplotype-panel");
        hap.appendChild(this.colHeaders);
        const hrow = el("div", "haplotype-row");
        hrow.appendChild(this.rowHeaders);
        hrow.appendChild(this.heatmap);
        hap.appendChild(hrow);
        center.appendChild(hap);
        const vmeta = el("div", "panel variant-meta-panel");
        vmeta.appendChild(el("h3", undefined, "SNV meta"));
        const vrow = el("div", "haplotype-row");
        vrow.appendChild(this.variantMetaLabels);
        vrow.appendChild(this.variantMeta);
        vmeta.appendChild(vrow);
        center.appendChild(vmeta);
        grid.appendChild(center);

        const smeta = el("div", "panel subject-meta-panel");
        smeta.appendChild(el("h3", undefined, "Subject meta"));
        smeta.appendChild(this.subjectMetaHeaders);
        smeta.appendChild(this.subjectMeta);
        grid.appendChild(smeta);

        this.settingsPanel.appendChild(el("h3", undefined, "Settings"));
        grid.appendChild(this.settingsPanel);

        this.root.appendChild(grid);
        this.root.appendChild(this.errorBanner);
        this.root.appendChild(this.statusBar);
        this.root.appendChild(this.dialogHost);

        this.buildSettings();
        this.wireHeatmapGestures();
        this.wireOverviewGestures();
    }

    // ------------------------------------------------------------ toolbar

    private buildToolbar(): HTMLElement {
        const bar = el("div", "toolbar");
        const mk = (label: string, cls: string, fn: () => void) => {
            const b = el("button", cls, label);
            b.addEventListener("click", fn);
            bar.appendChild(b);
            return b;
        };
        mk("New", "btn-new", () => this.openNewDialog());
        mk("Filtering", "btn-filter", () => this.openFilterDialog());
        mk("Aggregate", "btn-aggregate", () => this.openAggregateDialog());
        mk("Export", "btn-export", () => this.openExportDialog());
        mk("Undo", "btn-undo", () => { void this.safeStep(() => this.store.undo()); });
        mk("Clear selection", "btn-clear-selection",
           () => { void this.dispatch(clearSelectionStep()); });
        mk("Log", "btn-log", () => { void this.openLogViewer(); });
        return bar;
    }

    private async safeStep(fn: () => Promise<unknown>): Promise<void> {
        try {
            await fn();
            this.hideError();
        } catch (err) {
            this.showError(err instanceof Error ? err.message : String(err));
        }
    }

    async dispatch(step: Step): Promise<void> {
        await this.safeStep(() => this.store.dispatchStep(step));
    }

    showError(message: string): void {
        this.errorBanner.textContent = message;
        this.errorBanner.classList.remove("hidden");
    }

    hideError(): void {
        this.errorBanner.classList.add("hidden");
    }

    // ------------------------------------------------------------ dialogs

    private openDialog(title: string): { box: HTMLElement; close: () => void } {
        const overlay = el("div", "dialog-overlay");
        const box = el("div", "dialog");
        box.appendChild(el("h3", undefined, title));
        overlay.appendChild(box);
        this.dialogHost.appendChild(overlay);
        return { box, close: () => overlay.remove() };
    }

    openNewDialog(): void {
        const { box, close } = this.openDialog("Load data set");
        const form = el("form", "new-form");
        const path = el("input", "new-path");
        path.placeholder = "path under the server data root, e.g. chr22.vcf";
        const format = el("select", "new-format");
        format.append(option("VCF"), option("IMPUTE2"));
        const sample = el("input", "new-sample");
        sample.placeholder = "IMPUTE2 sample file (optional)";
        const smeta = el("input", "new-subject-meta");
        smeta.placeholder = "subject meta files, comma separated";
        const vmeta = el("input", "new-variant-meta");
        vmeta.placeholder = "variant meta files, comma separated";
        const submit = el("button", "new-submit", "Load");
        submit.type = "submit";
        form.append(path, format, sample, smeta, vmeta, submit);
        form.addEventListener("submit", (ev) => {
            ev.preventDefault();
            const split = (s: string) => s.split(",").map((x) => x.trim()).filter(Boolean);
            void this.safeStep(async () => {
                const loaded = await this.store.api.loadDatasetByPath({
                    path: path.value.trim(),
                    format: format.value,
                    sample_path: sample.value.trim() || undefined,
                    subject_meta: split(smeta.value),
                    variant_meta: split(vmeta.value),
                });
                const session = await this.store.api.createSession(loaded.dataset_id);
                this.store.sessionId = session.session_id;
                await this.store.refresh();
                this.store.lastChange = `loaded ${loaded.summary.name}`;
            });
            close();
        });
        box.appendChild(form);
    }

    openFilterDialog(): void {
        const { box, close } = this.openDialog("Filter SNVs");
        const form = el("form", "filter-form");
        const kind = el("select", "filter-kind");
        kind.append(option("region"), option("ids"), option("regex"), option("frequency"));
        const chrom = el("input", "filter-chrom");
        chrom.placeholder = "chromosome";
        const start = el("input", "filter-start");
        start.placeholder = "start";
        const end = el("input", "filter-end");
        end.placeholder = "end";
        const ids = el("input", "filter-ids");
        ids.placeholder = "SNV identifiers";
        const pattern = el("input", "filter-pattern");
        pattern.placeholder = "identifier regex";
        const threshold = el("input", "filter-threshold");
        threshold.placeholder = "frequency threshold, e.g. 0.005";
        const mode = el("select", "filter-mode");
        mode.append(option("ABOVE"), option("BELOW"));
        const submit = el("button", "filter-submit", "Apply");
        submit.type = "submit";
        form.append(kind, chrom, start, end, ids, pattern, threshold, mode, submit);
        form.addEventListener("submit", (ev) => {
            ev.preventDefault();
            const values: FilterDialogValues = {
                kind: kind.value as FilterDialogValues["kind"],
                chrom: chrom.value, start: start.value, end: end.value,
                ids: ids.value, pattern: pattern.value,
                threshold: threshold.value,
                mode: mode.value as "ABOVE" | "BELOW",
            };
            void this.dispatch(filterStep(values));
            close();
        });
        box.appendChild(form);
    }

    openAggregateDialog(): void {
        const { box, close } = this.openDialog("Aggregate rows");
        const form = el("form", "aggregate-form");
        const grouping = el("select", "aggregate-grouping");
        grouping.append(option("__selection__", "current selection"));
        for (const table of this.store.meta?.subject_meta ?? []) {
            for (const col of table.columns) {
                if (col.type === "CATEGORICAL") grouping.append(option(col.name));
            }
        }
        const allele = el("select", "aggregate-allele-method");
        allele.append(option("MAXIMUM"), option("MINIMUM"));
        const meta = el("select", "aggregate-meta-method");
        meta.append(option("MEAN"), option("MIN"), option("MAX"), option("MODE"));
        const submit = el("button", "aggregate-submit", "Aggregate");
        submit.type = "submit";
        form.append(grouping, allele, meta, submit);
        form.addEventListener("submit", (ev) => {
            ev.preventDefault();
            const bySelection = grouping.value === "__selection__";
            void this.dispatch(aggregateStep({
                grouping: bySelection ? null : grouping.value,
                selectionRows: this.store.summary?.selection.rows ?? [],
                alleleMethod: allele.value as "MAXIMUM" | "MINIMUM",
                metaMethod: meta.value as "MIN" | "MAX" | "MEAN" | "MODE",
            }));
            close();
        });
        box.appendChild(form);
    }

    openExportDialog(): void {
        const { box, close } = this.openDialog("Export image");
        const form = el("form", "export-form");
        const format = el("select", "export-format");
        format.append(option("PNG"), option("SVG"));
        const region = el("select", "export-region");
        region.append(option("FULL"), option("VISIBLE"));
        const cellW = el("input", "export-cell-w");
        cellW.value = String(this.store.viewport.cellW);
        const cellH = el("input", "export-cell-h");
        cellH.value = String(this.store.viewport.cellH);
        const preview = el("img", "export-preview") as HTMLImageElement;
        const refresh = () => {
            preview.src = this.exportUrl(format.value, region.value,
                                         parseInt(cellW.value, 10) || 8,
                                         parseInt(cellH.value, 10) || 8)
                + "&preview=1";
        };
        for (const ctl of [format, region, cellW, cellH]) {
            ctl.addEventListener("change", refresh);
        }
        const download = el("a", "export-download", "Download") as HTMLAnchorElement;
        download.addEventListener("click", () => {
            download.href = this.exportUrl(format.value, region.value,
                                           parseInt(cellW.value, 10) || 8,
                                           parseInt(cellH.value, 10) || 8);
            download.setAttribute("download", `phasegrid.${format.value.toLowerCase()}`);
        });
        const done = el("button", "export-close", "Close");
        done.type = "button";
        done.addEventListener("click", close);
        form.append(format, region, cellW, cellH, preview, download, done);
        box.appendChild(form);
        refresh();
    }

    private exportUrl(format: string, region: string, cellW: number, cellH: number): string {
        const dims = this.store.dims();
        const vp = this.store.viewport;
        const panel = this.panelSize();
        const vis = visibleCounts(vp, dims, panel.w, panel.h);
        const rows = `${vp.rowOffset}..${vp.rowOffset + vis.rows}`;
        const colScale = this.store.settings.encoding === Encoding.GENOTYPE ? 1 : 1;
        const cols = `${vp.colOffset * colScale}..${(vp.colOffset + vis.cols) * colScale}`;
        return this.store.api.exportUrl(this.store.sessionId, {
            format, region,
            rows: region === "VISIBLE" ? rows : undefined,
            cols: region === "VISIBLE" ? cols : undefined,
            encoding: this.store.settings.encoding,
            aggStyle: this.store.settings.style,
            cellW, cellH,
            grid: this.store.settings.showGrid,
        });
    }

    async openLogViewer(): Promise<void> {
        const { box, close } = this.openDialog("Interaction log");
        const list = el("ol", "log-list");
        box.appendChild(list);
        const done = el("button", "log-close", "Close");
        done.addEventListener("click", close);
        box.appendChild(done);
        try {
            const log = await this.store.api.fetchLog(this.store.sessionId);
            for (const step of log.steps) {
                list.appendChild(el("li", "log-entry", JSON.stringify(step)));
            }
        } catch (err) {
            this.showError(err instanceof Error ? err.message : String(err));
        }
    }

    // ----------------------------------------------------------- settings

    private buildSettings(): void {
        const s = this.settingsPanel;
        const field = (label: string, control: HTMLElement) => {
            const row = el("label", "settings-row");
            row.appendChild(el("span", undefined, label));
            row.appendChild(control);
            s.appendChild(row);
        };
        const encoding = el("select", "setting-encoding");
        encoding.append(option(Encoding.NUCLEOTIDE), option(Encoding.REFERENCE),
                        option(Encoding.GENOTYPE));
        encoding.addEventListener("change", () =>
            this.store.updateSettings({ encoding: encoding.value as Encoding }));
        field("Encoding", encoding);

        const style = el("select", "setting-agg-style");
        style.append(option(AggStyle.SATURATION), option(AggStyle.BAR));
        style.addEventListener("change", () =>
            this.store.updateSettings({ style: style.value as AggStyle }));
        field("Aggregation style", style);

        const grid = el("input", "setting-grid");
        grid.type = "checkbox";
        grid.addEventListener("change", () =>
            this.store.updateSettings({ showGrid: grid.checked }));
        field("Grid", grid);

        const cellW = el("input", "setting-cell-w");
        cellW.type = "number";
        cellW.min = "1";
        cellW.addEventListener("change", () =>
            this.store.updateViewport({ cellW: Math.max(1, parseInt(cellW.value, 10) || 1) }));
        field("Cell width", cellW);
        const cellH = el("input", "setting-cell-h");
        cellH.type = "number";
        cellH.min = "1";
        cellH.addEventListener("change", () =>
            this.store.updateViewport({ cellH: Math.max(1, parseInt(cellH.value, 10) || 1) }));
        field("Cell height", cellH);

        const metaW = el("input", "setting-meta-cell-w");
        metaW.type = "number";
        metaW.min = "1";
        metaW.addEventListener("change", () =>
            this.store.updateViewport({ metaCellW: Math.max(1, parseInt(metaW.value, 10) || 1) }));
        field("Meta cell width", metaW);
        const metaH = el("input", "setting-meta-cell-h");
        metaH.type = "number";
        metaH.min = "1";
        metaH.addEventListener("change", () =>
            this.store.updateViewport({ metaCellH: Math.max(1, parseInt(metaH.value, 10) || 1) }));
        field("Meta cell height", metaH);

        const roles: [string, ColorRole][] = [
            ["A", ColorRole.BASE_A], ["C", ColorRole.BASE_C], ["G", ColorRole.BASE_G],
            ["T", ColorRole.BASE_T], ["missing", ColorRole.MISSING],
            ["ref match", ColorRole.REF_MATCH], ["ref diff", ColorRole.REF_DIFF],
            ["hom alt", ColorRole.HOM_ALT], ["het", ColorRole.HET],
            ["hom ref", ColorRole.HOM_REF], ["selection", ColorRole.SELECTION],
        ];
        for (const [label, role] of roles) {
            const picker = el("input", `setting-color-${label.replace(" ", "-")}`);
            picker.type = "color";
            picker.value = rgbToHex(roleColor(this.store.settings.scheme, role));
            picker.addEventListener("change", () => {
                const scheme = structuredClone(this.store.settings.scheme);
                const rgb = hexToRgb(picker.value);
                switch (role) {
                    case ColorRole.BASE_A: scheme.baseColors.A = rgb; break;
                    case ColorRole.BASE_C: scheme.baseColors.C = rgb; break;
                    case ColorRole.BASE_G: scheme.baseColors.G = rgb; break;
                    case ColorRole.BASE_T: scheme.baseColors.T = rgb; break;
                    case ColorRole.MISSING: scheme.missing = rgb; break;
                    case ColorRole.REF_MATCH: scheme.refMatch = rgb; break;
                    case ColorRole.REF_DIFF: scheme.refDiff = rgb; break;
                    case ColorRole.HOM_ALT: scheme.homAlt = rgb; break;
                    case ColorRole.HET: scheme.het = rgb; break;
                    case ColorRole.HOM_REF: scheme.homRef = rgb; break;
                    case ColorRole.SELECTION: scheme.selection = rgb; break;
                }
                // a pure settings change: repaint from cached tiles, no refetch
                this.store.updateSettings({ scheme });
            });
            field(`Color ${label}`, picker);
        }
    }

    private renderSettingsValues(): void {
        const vp = this.store.viewport;
        const set = (cls: string, v: string) => {
            const node = this.settingsPanel.querySelector<HTMLInputElement>("." + cls);
            if (node && node !== document.activeElement) node.value = v;
        };
        set("setting-cell-w", String(vp.cellW));
        set("setting-cell-h", String(vp.cellH));
        set("setting-meta-cell-w", String(vp.metaCellW));
        set("setting-meta-cell-h", String(vp.metaCellH));
    }

    private renderSummary(): void {
        const s = this.store.summary;
        this.summaryPanel.querySelectorAll(".summary-line").forEach((n) => n.remove());
        if (!s) return;
        const lines = [
            `rows: ${s.rows}`,
            `allele columns: ${s.cols}`,
            `variants: ${s.variants}`,
            `phased: ${s.phased}`,
            `aggregated: ${s.aggregated}`,
            `steps applied: ${s.steps}`,
            `selection: ${s.selection.rows.length} rows, ${s.selection.cols.length} columns`,
        ];
        for (const line of lines) {
            this.summaryPanel.appendChild(el("div", "summary-line", line));
        }
    }

    // ----------------------------------------------------------- painting

    private panelSize(): { w: number; h: number } {
        const w = this.heatmap.width || 768;
        const h = this.heatmap.height || 512;
        return { w, h };
    }

    scheduleRepaint(): void {
        const run = () => {
            this.raf = 0;
            this.repaint();
        };
        if (typeof requestAnimationFrame === "function") {
            if (!this.raf) this.raf = requestAnimationFrame(run);
        } else {
            setTimeout(run, 0);
        }
    }

    /** Assemble the visible window from cached tiles (placeholders where a
     * tile has not arrived) and blit it; arriving tiles trigger repaints. */
    repaint(): void {
        const store = this.store;
        const summary = store.summary;
        if (!summary) return;
        const dims = store.dims();
        const panel = this.panelSize();
        const vp = clampViewport(store.viewport, dims, panel.w, panel.h);
        const vis = visibleCounts(vp, dims, panel.w, panel.h);
        if (vis.rows === 0 || vis.cols === 0) return;
        const genotype = store.settings.encoding === Encoding.GENOTYPE;
        const scale = genotype ? 2 : 1;
        const r0 = vp.rowOffset;
        const r1 = vp.rowOffset + vis.rows;
        const ac0 = vp.colOffset * scale;
        const ac1 = (vp.colOffset + vis.cols) * scale;
        const acols = ac1 - ac0;

        const codes = new Uint8Array(vis.rows * acols).fill(MISSING_CODE);
        const freqs = summary.aggregated
            ? new Uint8Array(vis.rows * acols).fill(255) : null;
        const tiles = store.tilesFor(r0, r1, ac0, ac1, () => this.scheduleRepaint());
        for (const tile of tiles) {
            this.copyTile(tile, codes, freqs, r0, ac0, vis.rows, acols);
        }
        const refs = (store.meta?.col_refs ?? []).slice(ac0, ac1);
        while (refs.length < acols) refs.push(null);
        const win: CellWindow = { rows: vis.rows, acols, codes, freqs, refs };
        const selRows = new Set((summary.selection.rows ?? [])
            .map((r) => r - r0).filter((r) => r >= 0 && r < vis.rows));
        const selCols = new Set((summary.selection.cols ?? [])
            .map((c) => Math.floor(c / scale) - vp.colOffset)
            .filter((c) => c >= 0 && c < vis.cols));
        let pixels: Uint8ClampedArray;
        try {
            pixels = paintWindow(win, {
                encoding: store.settings.encoding,
                style: store.settings.style,
                cellW: vp.cellW, cellH: vp.cellH,
                showGrid: store.settings.showGrid,
                scheme: store.settings.scheme,
            }, selRows, selCols);
        } catch (err) {
            this.showError(err instanceof Error ? err.message : String(err));
            return;
        }
        const width = vis.cols * vp.cellW;
        const height = vis.rows * vp.cellH;
        const ctx = ctx2d(this.heatmap);
        if (ctx && typeof ImageData === "function") {
            ctx.clearRect(0, 0, this.heatmap.width, this.heatmap.height);
            ctx.putImageData(new ImageData(pixels as Uint8ClampedArray<ArrayBuffer>, width, height), 0, 0);
        }
        this.renderHeaders(vp, vis, scale);
        this.paintSubjectMeta(vp, vis, r0);
        this.paintVariantMeta(vp, vis, ac0, acols);
        this.paintOverviewRect(vp, dims, panel);
    }

    private copyTile(tile: TileData, codes: Uint8Array, freqs: Uint8Array | null,
                     r0: number, c0: number, rows: number, cols: number): void {
        const rs = Math.max(tile.rowStart, r0);
        const re = Math.min(tile.rowStart + tile.nRows, r0 + rows);
        const cs = Math.max(tile.colStart, c0);
        const ce = Math.min(tile.colStart + tile.nCols, c0 + cols);
        for (let r = rs; r < re; r++) {
            const srcOff = (r - tile.rowStart) * tile.nCols + (cs - tile.colStart);
            const dstOff = (r - r0) * cols + (cs - c0);
            codes.set(tile.codes.subarray(srcOff, srcOff + (ce - cs)), dstOff);
            if (freqs && tile.freqs) {
                freqs.set(tile.freqs.subarray(srcOff, srcOff + (ce - cs)), dstOff);
            }
        }
    }

    private renderHeaders(vp: ReturnType<typeof clampViewport>,
                          vis: { rows: number; cols: number }, scale: number): void {
        const meta = this.store.meta;
        this.rowHeaders.textContent = "";
        this.colHeaders.textContent = "";
        if (!meta) return;
        for (let i = 0; i < vis.rows; i++) {
            const label = meta.row_labels[vp.rowOffset + i] ?? "";
            const span = el("span", "row-header", label);
            span.style.height = `${vp.cellH}px`;
            span.dataset.row = String(vp.rowOffset + i);
            span.addEventListener("click", () => {
                void this.dispatch(selectStep([vp.rowOffset + i], []));
            });
            this.rowHeaders.appendChild(span);
        }
        for (let j = 0; j < vis.cols; j++) {
            const col = (vp.colOffset + j) * scale;
            const label = meta.col_labels[col] ?? "";
            const span = el("span", "col-header", label);
            span.style.width = `${vp.cellW}px`;
            span.dataset.col = String(col);
            span.addEventListener("click", () => {
                void this.dispatch(selectStep([], [col]));
            });
            this.colHeaders.appendChild(span);
        }
    }

    private paintSubjectMeta(vp: ReturnType<typeof clampViewport>,
                             vis: { rows: number }, r0: number): void {
        const meta = this.store.meta;
        this.subjectMetaHeaders.textContent = "";
        if (!meta) return;
        const columns: MetaColumnPayload[] = [];
        for (const table of meta.subject_meta) {
            for (const col of table.columns) {
                columns.push(col);
                const head = el("span", "meta-header", col.name);
                head.dataset.column = col.name;
                head.style.width = `${vp.metaCellW}px`;
                head.addEventListener("dblclick", () => {
                    void this.dispatch(sortRowsStep(col.name));
                });
                this.subjectMetaHeaders.appendChild(head);
            }
        }
        const ctx = ctx2d(this.subjectMeta);
        if (!ctx) return;
        this.subjectMeta.width = Math.max(1, columns.length * vp.metaCellW);
        this.subjectMeta.height = Math.max(1, vis.rows * vp.cellH);
        ctx.clearRect(0, 0, this.subjectMeta.width, this.subjectMeta.height);
        columns.forEach((col, k) => {
            for (let i = 0; i < vis.rows; i++) {
                const value = col.values[r0 + i];
                ctx.fillStyle = this.metaColor(col, value);
                ctx.fillRect(k * vp.metaCellW, i * vp.cellH, vp.metaCellW, vp.cellH);
            }
        });
    }

    private paintVariantMeta(vp: ReturnType<typeof clampViewport>,
                             vis: { cols: number }, ac0: number, acols: number): void {
        const meta = this.store.meta;
        this.variantMetaLabels.textContent = "";
        if (!meta) return;
        const rows: MetaColumnPayload[] = [];
        for (const table of meta.variant_meta) {
            for (const col of table.columns) {
                rows.push(col);
                const label = el("span", "meta-label", col.name);
                label.dataset.column = col.name;
                label.style.height = `${vp.metaCellH}px`;
                label.addEventListener("dblclick", () => {
                    void this.dispatch(sortColsStep(col.name));
                });
                this.variantMetaLabels.appendChild(label);
            }
        }
        const ctx = ctx2d(this.variantMeta);
        if (!ctx) return;
        this.variantMeta.width = Math.max(1, acols * vp.cellW);
        this.variantMeta.height = Math.max(1, rows.length * vp.metaCellH);
        ctx.clearRect(0, 0, this.variantMeta.width, this.variantMeta.height);
        rows.forEach((row, k) => {
            for (let j = 0; j < acols; j++) {
                const value = row.values[ac0 + j];
                ctx.fillStyle = this.metaColor(row, value);
                ctx.fillRect(j * vp.cellW, k * vp.metaCellH, vp.cellW, vp.metaCellH);
            }
        });
    }

    private metaColor(col: MetaColumnPayload, value: string | number | null): string {
        if (value === null || value === undefined) return "#FFFFFF";
        if (col.type === "CATEGORICAL") {
            return col.palette?.[String(value)] ?? "#CCCCCC";
        }
        const range = col.range;
        if (!range || range.max === range.min) return "#808080";
        const t = (Number(value) - range.min) / (range.max - range.min);
        const v = Math.round(255 - t * 200);
        return rgbToHex([v, v, 255]);
    }

    // ------------------------------------------------------- overview

    private reloadOverview(): void {
        if (typeof Image !== "function") return;
        const img = new Image();
        img.onload = () => {
            this.overviewImage = img;
            this.overview.width = img.width;
            this.overview.height = img.height;
            this.scheduleRepaint();
        };
        img.src = this.store.api.overviewUrl(
            this.store.sessionId, 220, 160, this.store.settings.encoding);
    }

    private paintOverviewRect(vp: ReturnType<typeof clampViewport>,
                              dims: { rows: number; cols: number },
                              panel: { w: number; h: number }): void {
        const ctx = ctx2d(this.overview);
        if (!ctx) return;
        ctx.clearRect(0, 0, this.overview.width, this.overview.height);
        if (this.overviewImage) ctx.drawImage(this.overviewImage, 0, 0);
        if (dims.rows === 0 || dims.cols === 0) return;
        const rect = overviewRect(vp, dims, panel.w, panel.h,
                                  this.overview.width, this.overview.height);
        ctx.strokeStyle = "#FF0000";
        ctx.lineWidth = 1;
        ctx.strokeRect(rect.x + 0.5, rect.y + 0.5, rect.w - 1, rect.h - 1);
    }

    private wireOverviewGestures(): void {
        let dragging = false;
        const apply = (ev: MouseEvent) => {
            const dims = this.store.dims();
            if (dims.rows === 0 || dims.cols === 0) return;
            const panel = this.panelSize();
            const bounds = typeof this.overview.getBoundingClientRect === "function"
                ? this.overview.getBoundingClientRect()
                : { left: 0, top: 0 };
            const px = ev.clientX - bounds.left;
            const py = ev.clientY - bounds.top;
            const ovW = this.overview.width || 220;
            const ovH = this.overview.height || 160;
            const next = dragToOffsets(px, py, this.store.viewport, dims,
                                       panel.w, panel.h, ovW, ovH);
            this.store.updateViewport(next);
        };
        this.overview.addEventListener("mousedown", (ev) => {
            dragging = true;
            apply(ev as MouseEvent);
        });
        this.overview.addEventListener("mousemove", (ev) => {
            if (dragging) apply(ev as MouseEvent);
        });
        for (const evt of ["mouseup", "mouseleave"]) {
            this.overview.addEventListener(evt, () => { dragging = false; });
        }
    }

    private wireHeatmapGestures(): void {
        this.heatmap.addEventListener("wheel", (ev) => {
            ev.preventDefault();
            const step = (ev as WheelEvent).deltaY < 0 ? 1 : -1;
            const axis = (ev as WheelEvent).shiftKey ? "width"
                : (ev as WheelEvent).ctrlKey ? "height" : "both";
            this.store.updateViewport(zoomCells(this.store.viewport, step, axis));
        });
        for (const panel of [this.subjectMeta, this.variantMeta]) {
            panel.addEventListener("wheel", (ev) => {
                ev.preventDefault();
                const step = (ev as WheelEvent).deltaY < 0 ? 1 : -1;
                this.store.updateViewport(zoomMetaCells(this.store.viewport, step));
            });
        }
    }
}

export async function bootstrap(root: HTMLElement, apiBase = ""): Promise<App | null> {
    const api = new ApiClient(apiBase);
    const params = new URLSearchParams(location.search);
    const sessionParam = params.get("session");
    let sessionId = sessionParam;
    if (!sessionId) {
        const dataset = params.get("dataset");
        if (dataset) {
            sessionId = (await api.createSession(dataset)).session_id;
        }
    }
    const store = new SessionStore(api, sessionId ?? "");
    const app = new App(root, store);
    if (sessionId) {
        await store.refresh();
        store.lastChange = `session ${sessionId}`;
        app.scheduleRepaint();
    } else {
        store.lastChange = "no session: use New to load a data set";
    }
    return app;
}

if (typeof document !== "undefined" && document.getElementById("phasegrid-app")) {
    const apiBase = new URLSearchParams(location.search).get("api") ?? "";
    void bootstrap(document.getElementById("phasegrid-app")!, apiBase);
}
