/**
 * Gesture-to-step mapping: every UI gesture produces exactly one session
 * step object (or a viewport change, handled elsewhere). Pure builders so
 * the mapping is directly testable.
 */

import { Step } from "./api.js";

/** Double-click on a subject meta header sorts rows by that column. */
export function sortRowsStep(column: string): Step {
    return { type: "sort_rows", column };
}

/** Double-click on a variant meta row label sorts allele columns. */
export function sortColsStep(column: string): Step {
    return { type: "sort_cols", column };
}

export interface FilterDialogValues {
    kind: "region" | "ids" | "regex" | "frequency";
    chrom?: string;
    start?: string;
    end?: string;
    ids?: string;        // whitespace/comma separated
    pattern?: string;
    threshold?: string;  // users type percentages as fractions, e.g. 0.005
    mode?: "ABOVE" | "BELOW";
}

export function filterStep(v: FilterDialogValues): Step {
    switch (v.kind) {
        case "region":
            return {
                type: "filter_region",
                chrom: (v.chrom ?? "").trim(),
                start: parseInt(v.start ?? "0", 10),
                end: parseInt(v.end ?? "0", 10),
            };
        case "ids":
            return {
                type: "filter_ids",
                ids: (v.ids ?? "").split(/[\s,]+/).filter((s) => s.length > 0),
            };
        case "regex":
            return { type: "filter_regex", pattern: v.pattern ?? "" };
        case "frequency":
            return {
                type: "filter_frequency",
                threshold: parseFloat(v.threshold ?? "0"),
                mode: v.mode ?? "ABOVE",
            };
    }
}

export interface AggregateDialogValues {
    grouping: string | null;      // categorical column name, or null for selection
    selectionRows: number[];      // used when grouping is null
    alleleMethod: "MAXIMUM" | "MINIMUM";
    metaMethod: "MIN" | "MAX" | "MEAN" | "MODE";
}

export function aggregateStep(v: AggregateDialogValues): Step {
    const step: Step = {
        type: "aggregate_rows",
        allele_method: v.alleleMethod,
        meta_method: v.metaMethod,
    };
    if (v.grouping !== null) step.grouping = v.grouping;
    else step.rows = v.selectionRows;
    return step;
}

export function selectStep(rows: number[], cols: number[]): Step {
    return { type: "select", rows, cols };
}

export function clearSelectionStep(): Step {
    return { type: "clear_selection" };
}
