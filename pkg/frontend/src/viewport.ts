/**
 * Viewport state and the overview rectangle geometry. All pure math, so
 * drag/zoom behaviour is testable without a browser.
 */

export interface Viewport {
    rowOffset: number;
    colOffset: number;
    cellW: number;
    cellH: number;
    metaCellW: number;
    metaCellH: number;
}

export interface ViewDims {
    rows: number;
    cols: number; // display columns
}

export function defaultViewport(): Viewport {
    return { rowOffset: 0, colOffset: 0, cellW: 12, cellH: 12, metaCellW: 14, metaCellH: 12 };
}

export function visibleCounts(vp: Viewport, dims: ViewDims,
                              panelW: number, panelH: number): { rows: number; cols: number } {
    const cols = Math.min(Math.ceil(panelW / vp.cellW), dims.cols - vp.colOffset);
    const rows = Math.min(Math.ceil(panelH / vp.cellH), dims.rows - vp.rowOffset);
    return { rows: Math.max(rows, 0), cols: Math.max(cols, 0) };
}

export function clampViewport(vp: Viewport, dims: ViewDims,
                              panelW: number, panelH: number): Viewport {
    const fitCols = Math.floor(panelW / vp.cellW);
    const fitRows = Math.floor(panelH / vp.cellH);
    const maxCol = Math.max(0, dims.cols - fitCols);
    const maxRow = Math.max(0, dims.rows - fitRows);
    return {
        ...vp,
        colOffset: Math.min(Math.max(0, vp.colOffset), maxCol),
        rowOffset: Math.min(Math.max(0, vp.rowOffset), maxRow),
    };
}

/** Wheel zoom: positive steps grow cells, floor of 1 px in each dimension. */
export function zoomCells(vp: Viewport, step: number,
                          axis: "both" | "width" | "height" = "both"): Viewport {
    const w = axis === "height" ? vp.cellW : Math.max(1, vp.cellW + step);
    const h = axis === "width" ? vp.cellH : Math.max(1, vp.cellH + step);
    return { ...vp, cellW: w, cellH: h };
}

export function zoomMetaCells(vp: Viewport, step: number): Viewport {
    return {
        ...vp,
        metaCellW: Math.max(1, vp.metaCellW + step),
        metaCellH: Math.max(1, vp.metaCellH + step),
    };
}

export interface OverviewRect {
    x: number;
    y: number;
    w: number;
    h: number;
}

/**
 * The red focus rectangle: the viewport's share of the whole view mapped
 * onto the overview image, so its area ratio equals visible/total cells.
 */
export function overviewRect(vp: Viewport, dims: ViewDims, panelW: number,
                             panelH: number, ovW: number, ovH: number): OverviewRect {
    const vis = visibleCounts(vp, dims, panelW, panelH);
    const w = Math.max(1, (vis.cols / dims.cols) * ovW);
    const h = Math.max(1, (vis.rows / dims.rows) * ovH);
    return {
        x: (vp.colOffset / dims.cols) * ovW,
        y: (vp.rowOffset / dims.rows) * ovH,
        w, h,
    };
}

/**
 * Dragging the rectangle: the pointer position becomes the rectangle
 * centre, converted back to row/col offsets and clamped to the view.
 */
export function dragToOffsets(px: number, py: number, vp: Viewport, dims: ViewDims,
                              panelW: number, panelH: number,
                              ovW: number, ovH: number): { rowOffset: number; colOffset: number } {
    const rect = overviewRect(vp, dims, panelW, panelH, ovW, ovH);
    const x = px - rect.w / 2;
    const y = py - rect.h / 2;
    const col = Math.round((x / ovW) * dims.cols);
    const row = Math.round((y / ovH) * dims.rows);
    const clamped = clampViewport({ ...vp, colOffset: col, rowOffset: row },
                                  dims, panelW, panelH);
    return { rowOffset: clamped.rowOffset, colOffset: clamped.colOffset };
}
