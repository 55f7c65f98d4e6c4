/**
 * Pure cell painter: turns decoded tile codes into RGBA pixels using the
 * same role, saturation, bar and grid rules as the server renderer, so a
 * locally painted window matches a server export pixel for pixel.
 *
 * Painting works on raw RGBA buffers (what putImageData consumes), which
 * keeps it testable without a real canvas.
 */

import {
    AggStyle,
    ColorRole,
    ColorScheme,
    Encoding,
    MISSING_CODE,
    RGB,
    alleleRole,
    baseCode,
    genotypeRole,
    roleColor,
    roundHalfUp,
    saturate,
} from "./colors.js";

export interface PaintOptions {
    encoding: Encoding;
    style: AggStyle;
    cellW: number;
    cellH: number;
    showGrid: boolean;
    scheme: ColorScheme;
}

export interface CellWindow {
    rows: number;
    /** allele columns in the window; GENOTYPE paints rows x (acols/2) cells */
    acols: number;
    codes: Uint8Array;          // rows * acols
    freqs: Uint8Array | null;   // same shape, 0..255
    /** reference base per allele column (needed by REFERENCE/GENOTYPE) */
    refs: (string | null)[];
}

const GRID_RGB: RGB = [200, 200, 200];
const GRID_MIN_CELL = 3;

export function displayCols(acols: number, encoding: Encoding): number {
    return encoding === Encoding.GENOTYPE ? Math.floor(acols / 2) : acols;
}

function fillRect(out: Uint8ClampedArray, width: number, x0: number, y0: number,
                  w: number, h: number, rgb: RGB): void {
    for (let y = y0; y < y0 + h; y++) {
        let o = (y * width + x0) * 4;
        for (let x = 0; x < w; x++) {
            out[o] = rgb[0];
            out[o + 1] = rgb[1];
            out[o + 2] = rgb[2];
            out[o + 3] = 255;
            o += 4;
        }
    }
}

function refCodeFor(refs: (string | null)[], col: number): number {
    const code = baseCode(refs[col] ?? null);
    if (code === null) {
        throw new Error(`column ${col} has no reference base for this encoding`);
    }
    return code;
}

/** Paint a window of cells; returns RGBA of (cols*cellW) x (rows*cellH). */
export function paintWindow(win: CellWindow, opts: PaintOptions,
                            selectedRows: Set<number> = new Set(),
                            selectedCols: Set<number> = new Set()): Uint8ClampedArray {
    const enc = opts.encoding;
    const cols = displayCols(win.acols, enc);
    const { cellW, cellH } = opts;
    const width = cols * cellW;
    const height = win.rows * cellH;
    const out = new Uint8ClampedArray(width * height * 4);

    for (let i = 0; i < win.rows; i++) {
        for (let j = 0; j < cols; j++) {
            let role: ColorRole;
            let freq = 1;
            if (enc === Encoding.GENOTYPE) {
                const a = win.codes[i * win.acols + 2 * j];
                const b = win.codes[i * win.acols + 2 * j + 1];
                role = genotypeRole(a, b, refCodeFor(win.refs, 2 * j));
                if (win.freqs) {
                    const fs: number[] = [];
                    if (a !== MISSING_CODE) fs.push(win.freqs[i * win.acols + 2 * j] / 255);
                    if (b !== MISSING_CODE) fs.push(win.freqs[i * win.acols + 2 * j + 1] / 255);
                    freq = fs.length ? fs.reduce((s, v) => s + v, 0) / fs.length : 0;
                }
            } else {
                const code = win.codes[i * win.acols + j];
                const refCode = enc === Encoding.NUCLEOTIDE ? null : refCodeFor(win.refs, j);
                role = alleleRole(enc, code, refCode);
                if (win.freqs) freq = win.freqs[i * win.acols + j] / 255;
            }
            const color = roleColor(opts.scheme, role);
            const x = j * cellW;
            const y = i * cellH;
            if (!win.freqs) {
                fillRect(out, width, x, y, cellW, cellH, color);
            } else if (opts.style === AggStyle.SATURATION) {
                fillRect(out, width, x, y, cellW, cellH, saturate(color, freq));
            } else {
                fillRect(out, width, x, y, cellW, cellH, opts.scheme.missing);
                const bar = roundHalfUp(freq * cellH);
                if (bar > 0) fillRect(out, width, x, y + cellH - bar, cellW, bar, color);
            }
        }
    }

    if (opts.showGrid && cellW >= GRID_MIN_CELL && cellH >= GRID_MIN_CELL) {
        for (let j = 1; j < cols; j++) {
            fillRect(out, width, j * cellW - 1, 0, 1, height, GRID_RGB);
        }
        for (let i = 1; i < win.rows; i++) {
            fillRect(out, width, 0, i * cellH - 1, width, 1, GRID_RGB);
        }
    }

    const sel = opts.scheme.selection;
    for (const r of selectedRows) {
        if (r < 0 || r >= win.rows) continue;
        const y = r * cellH;
        fillRect(out, width, 0, y, width, 1, sel);
        fillRect(out, width, 0, y + cellH - 1, width, 1, sel);
        fillRect(out, width, 0, y, 1, cellH, sel);
        fillRect(out, width, width - 1, y, 1, cellH, sel);
    }
    for (const c of selectedCols) {
        if (c < 0 || c >= cols) continue;
        const x = c * cellW;
        fillRect(out, width, x, 0, cellW, 1, sel);
        fillRect(out, width, x, height - 1, cellW, 1, sel);
        fillRect(out, width, x, 0, 1, height, sel);
        fillRect(out, width, x + cellW - 1, 0, 1, height, sel);
    }
    return out;
}

/** RGB triple at a pixel, for tests and color sampling. */
export function pixelAt(buf: Uint8ClampedArray, width: number, x: number, y: number): RGB {
    const o = (y * width + x) * 4;
    return [buf[o], buf[o + 1], buf[o + 2]];
}
