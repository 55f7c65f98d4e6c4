"""Pure, replayable view transforms: filtering, stable sorting, aggregation.

A ViewChain is a dataset reference plus an ordered step list; the derived
view (row list, allele-column order, per-row aggregation state) is a pure
function of the two, so serializing the steps and replaying them always
reproduces the identical view.

Rows are either single subjects or aggregated AGN rows carrying the merged
subject set. Columns are allele columns, two per variant (paternal then
maternal storage slot); a variant's pair only separates under a P/M column
sort, which groups all paternal columns before all maternal ones.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .dataset import Dataset, MetaColumn, MetaType, PM_TABLE
from .errors import (
    InvalidGrouping,
    InvalidPattern,
    InvalidRange,
    InvalidThreshold,
    OutOfBounds,
    UnknownMeta,
    UnknownReference,
)
from .steps import (
    AggregateRows,
    ClearSelection,
    FilterFrequency,
    FilterIds,
    FilterRegex,
    FilterRegion,
    Select,
    SortCols,
    SortRows,
)
from .store import BASE_TO_CODE, MISSING_CODE

#: Synthetic variant sort keys always available besides attached meta.
POSITION_KEY = "Position"
CHROMOSOME_KEY = "Chromosome"


class AggregatedCell(NamedTuple):
    """Consensus base (or MISSING_CODE) with its group frequency."""

    code: int
    frequency: float


@dataclass(frozen=True)
class ViewRow:
    """One display row: a single subject or an aggregated subject group."""

    label: str
    members: tuple[int, ...]
    aggregated: bool = False
    allele_method: str = "MAXIMUM"
    #: Aggregated subject-meta values, keyed by column name (AGN rows only).
    meta: Optional[Mapping[str, object]] = None


@dataclass(frozen=True)
class DerivedView:
    """Materialized result of replaying a step list over a dataset."""

    dataset: Dataset
    rows: tuple[ViewRow, ...]
    cols: tuple[tuple[int, int], ...]  # (variant index, allele slot)
    aggregated: bool
    step_infos: tuple[dict, ...] = ()

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.cols)

    def variant_order(self) -> list[int]:
        """Distinct variants in first-appearance column order."""
        seen: set[int] = set()
        order: list[int] = []
        for v, _ in self.cols:
            if v not in seen:
                seen.add(v)
                order.append(v)
        return order

    def row_labels(self) -> list[str]:
        return [r.label for r in self.rows]

    def col_labels(self) -> list[str]:
        return [self.dataset.variants.ids[v] for v, _ in self.cols]

    def pm_values(self) -> list[str]:
        """P/M marker per allele column (paternal storage slot = P)."""
        return ["P" if slot == 0 else "M" for _, slot in self.cols]

    def subjects_in_view(self) -> list[int]:
        seen: set[int] = set()
        out: list[int] = []
        for row in self.rows:
            for s in row.members:
                if s not in seen:
                    seen.add(s)
                    out.append(s)
        return out


def resolve_subject_column(ds: Dataset, name: str) -> MetaColumn:
    for table in ds.subject_meta:
        for col in table.columns:
            if col.name == name:
                return col
    raise UnknownMeta(f"no subject meta column named {name!r}")


def resolve_variant_column(ds: Dataset, name: str) -> Optional[MetaColumn]:
    """User variant column by name; None for the built-in P/M, Position and
    Chromosome keys (handled positionally by the caller)."""
    if name == PM_TABLE:
        if not ds.phased:
            raise UnknownMeta("P/M row exists only for phased datasets")
        return None
    if name in (POSITION_KEY, CHROMOSOME_KEY):
        return None
    for table in ds.variant_meta:
        if table.synthetic:
            continue
        for col in table.columns:
            if col.name == name:
                return col
    raise UnknownMeta(f"no variant meta column named {name!r}")


def _sort_key(col_type: MetaType, value):
    """ABSENT values sort last; categorical by name, numerical by value."""
    if value is None:
        return (1, "")
    if col_type is MetaType.NUMERICAL:
        return (0, float(value))
    return (0, str(value))


def _mode(values: list) -> object:
    counts: dict = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def _aggregate_meta(ds: Dataset, member_ids: Sequence[str], meta_method: str) -> dict:
    """Fold subject meta for an AGN row; categorical columns always use MODE,
    ABSENT values are excluded, all-ABSENT folds to ABSENT."""
    out: dict = {}
    for table in ds.subject_meta:
        for col in table.columns:
            present = [col.values[i] for i in member_ids if i in col.values]
            if col.name in out:
                continue  # first matching name wins, same as resolution order
            if not present:
                out[col.name] = None
            elif col.type is MetaType.CATEGORICAL or meta_method == "MODE":
                out[col.name] = _mode(present)
            elif meta_method == "MIN":
                out[col.name] = min(present)
            elif meta_method == "MAX":
                out[col.name] = max(present)
            else:  # MEAN
                out[col.name] = sum(present) / len(present)
    return out


def _row_meta_value(ds: Dataset, row: ViewRow, col: MetaColumn):
    if row.aggregated:
        return (row.meta or {}).get(col.name)
    return col.values.get(ds.subjects[row.members[0]])


class _State:
    """Mutable evaluation state threaded through step application."""

    def __init__(self, ds: Dataset):
        self.ds = ds
        self.rows: list[ViewRow] = [
            ViewRow(label=ident, members=(i,)) for i, ident in enumerate(ds.subjects)
        ]
        self.cols: list[tuple[int, int]] = [
            (v, slot) for v in range(len(ds.variants)) for slot in (0, 1)
        ]

    def variant_order(self) -> list[int]:
        seen: set[int] = set()
        order: list[int] = []
        for v, _ in self.cols:
            if v not in seen:
                seen.add(v)
                order.append(v)
        return order

    def keep_variants(self, keep: set[int]) -> None:
        self.cols = [c for c in self.cols if c[0] in keep]


def _apply_filter_region(state: _State, step: FilterRegion) -> dict:
    if step.start > step.end:
        raise InvalidRange(f"start {step.start} > end {step.end}")
    variants = state.ds.variants
    keep = {
        v for v in state.variant_order()
        if variants.chromosomes[v] == step.chrom
        and step.start <= variants.positions[v] <= step.end
    }
    state.keep_variants(keep)
    return {}


def _apply_filter_ids(state: _State, step: FilterIds) -> dict:
    wanted = set(step.ids)
    view_ids = {state.ds.variants.ids[v] for v in state.variant_order()}
    keep = {v for v in state.variant_order() if state.ds.variants.ids[v] in wanted}
    state.keep_variants(keep)
    return {"unknown_ids": len(wanted - view_ids)}


def _apply_filter_regex(state: _State, step: FilterRegex) -> dict:
    try:
        rx = re.compile(step.pattern)
    except re.error as exc:
        raise InvalidPattern(f"bad pattern {step.pattern!r}: {exc}") from None
    keep = {
        v for v in state.variant_order()
        if rx.fullmatch(state.ds.variants.ids[v]) is not None
    }
    state.keep_variants(keep)
    return {}


def allele_counts(ds: Dataset, subjects: Sequence[int],
                  variants: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Per-base allele counts over both slots of the given subjects.

    Returns (counts, non_missing): counts has shape (4, len(variants)),
    non_missing is the per-variant total of non-missing alleles. Scans
    subject rows (contiguous in the plane) rather than variant columns.
    """
    v_idx = np.asarray(list(variants), dtype=np.int64)
    counts = np.zeros((4, len(v_idx)), dtype=np.int64)
    m = ds.matrix
    for s in subjects:
        rc = m.row_codes(s, 0, m.n_variants)[v_idx, :]  # (V, 2)
        for b in range(4):
            counts[b] += (rc == b).sum(axis=1)
    non_missing = counts.sum(axis=0)
    return counts, non_missing


def _apply_filter_frequency(state: _State, step: FilterFrequency) -> dict:
    if not 0.0 <= step.threshold <= 1.0:
        raise InvalidThreshold(f"threshold {step.threshold} outside [0, 1]")
    order = state.variant_order()
    refs = state.ds.variants.refs
    for v in order:
        if refs[v] is None:
            raise UnknownReference(
                f"variant {state.ds.variants.ids[v]!r} has no reference base")
    subjects = [s for row in state.rows for s in row.members]
    subjects = sorted(set(subjects))
    counts, non_missing = allele_counts(state.ds, subjects, order)
    ref_codes = np.array([BASE_TO_CODE[refs[v]] for v in order], dtype=np.int64)
    ref_count = counts[ref_codes, np.arange(len(order))]
    alt_count = non_missing - ref_count
    keep: set[int] = set()
    for i, v in enumerate(order):
        if non_missing[i] == 0:
            continue  # all alleles missing: dropped in both modes
        f = alt_count[i] / non_missing[i]
        if step.mode == "ABOVE" and f > step.threshold:
            keep.add(v)
        elif step.mode == "BELOW" and f < step.threshold:
            keep.add(v)
    state.keep_variants(keep)
    return {}


def _apply_sort_rows(state: _State, step: SortRows) -> dict:
    col = resolve_subject_column(state.ds, step.column)
    keyed = [
        (_sort_key(col.type, _row_meta_value(state.ds, row, col)), i)
        for i, row in enumerate(state.rows)
    ]
    keyed.sort(key=lambda t: t[0])
    state.rows = [state.rows[i] for _, i in keyed]
    return {}


def _variant_sort_value(ds: Dataset, name: str, col: Optional[MetaColumn], v: int):
    if name == POSITION_KEY:
        return (MetaType.NUMERICAL, ds.variants.positions[v])
    if name == CHROMOSOME_KEY:
        return (MetaType.CATEGORICAL, ds.variants.chromosomes[v])
    return (col.type, col.values.get(ds.variants.ids[v]))


def _apply_sort_cols(state: _State, step: SortCols) -> dict:
    if step.column == PM_TABLE:
        resolve_variant_column(state.ds, step.column)  # phased check
        order = state.variant_order()
        state.cols = [(v, 0) for v in order] + [(v, 1) for v in order]
        return {}
    col = resolve_variant_column(state.ds, step.column)
    order = state.variant_order()
    keyed = []
    for i, v in enumerate(order):
        ctype, value = _variant_sort_value(state.ds, step.column, col, v)
        keyed.append((_sort_key(ctype, value), i))
    keyed.sort(key=lambda t: t[0])
    state.cols = [(order[i], slot) for _, i in keyed for slot in (0, 1)]
    return {}


def _merge_rows(ds: Dataset, rows: Sequence[ViewRow], allele_method: str,
                meta_method: str) -> ViewRow:
    members = sorted({s for row in rows for s in row.members})
    member_ids = [ds.subjects[s] for s in members]
    return ViewRow(
        label=f"AGN{len(members)}",
        members=tuple(members),
        aggregated=True,
        allele_method=allele_method,
        meta=_aggregate_meta(ds, member_ids, meta_method),
    )


def _apply_aggregate(state: _State, step: AggregateRows) -> dict:
    if step.grouping is not None:
        col = resolve_subject_column(state.ds, step.grouping)
        if col.type is not MetaType.CATEGORICAL:
            raise InvalidGrouping(f"grouping column {step.grouping!r} is not categorical")
        groups: dict = {}
        order: list = []
        for row in state.rows:
            key = _row_meta_value(state.ds, row, col)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(row)
        state.rows = [
            _merge_rows(state.ds, groups[key], step.allele_method, step.meta_method)
            for key in order
        ]
        return {"groups": len(order)}
    sel = step.rows or ()
    if not sel:
        raise InvalidGrouping("selection aggregation needs at least one row")
    if len(set(sel)) != len(sel) or any(not 0 <= i < len(state.rows) for i in sel):
        raise InvalidGrouping(f"row selection outside view: {sel}")
    chosen = set(sel)
    merged = _merge_rows(state.ds, [state.rows[i] for i in sorted(chosen)],
                         step.allele_method, step.meta_method)
    out: list[ViewRow] = []
    placed = False
    for i, row in enumerate(state.rows):
        if i in chosen:
            if not placed:
                out.append(merged)
                placed = True
        else:
            out.append(row)
    state.rows = out
    return {"groups": 1}


_APPLIERS = {
    FilterRegion: _apply_filter_region,
    FilterIds: _apply_filter_ids,
    FilterRegex: _apply_filter_regex,
    FilterFrequency: _apply_filter_frequency,
    SortRows: _apply_sort_rows,
    SortCols: _apply_sort_cols,
    AggregateRows: _apply_aggregate,
}


def evaluate(ds: Dataset, steps: Sequence) -> DerivedView:
    """Replay transform steps from the base dataset; pure and deterministic."""
    state = _State(ds)
    infos = []
    for step in steps:
        applier = _APPLIERS.get(type(step))
        if applier is None:
            raise TypeError(f"not a transform step: {step!r}")
        infos.append(applier(state, step))
    return DerivedView(
        dataset=ds,
        rows=tuple(state.rows),
        cols=tuple(state.cols),
        aggregated=any(r.aggregated for r in state.rows),
        step_infos=tuple(infos),
    )


class ViewChain:
    """Ordered, replayable step list over an immutable dataset."""

    def __init__(self, dataset: Dataset, steps: Sequence = ()):
        self.dataset = dataset
        self.steps = tuple(steps)
        self._derived: Optional[DerivedView] = None

    @property
    def derived(self) -> DerivedView:
        if self._derived is None:
            self._derived = evaluate(self.dataset, self.steps)
        return self._derived

    def with_step(self, step) -> "ViewChain":
        """Append one step; errors surface here, not at later reads."""
        chain = ViewChain(self.dataset, self.steps + (step,))
        chain.derived
        return chain

    def truncated(self) -> "ViewChain":
        """Drop the last step (undo); no-op on an empty chain."""
        return ViewChain(self.dataset, self.steps[:-1])


def consensus_cells(ds: Dataset, members: Sequence[int],
                    cols: Sequence[tuple[int, int]], allele_method: str):
    """Consensus code / count / total per allele column for a subject group.

    MAXIMUM picks the most frequent non-missing base, MINIMUM the least
    frequent base actually present; ties break on the fixed base order
    A<C<G<T. All-missing columns yield MISSING_CODE with zero counts.
    """
    n = len(cols)
    counts = np.zeros((4, n), dtype=np.int64)
    if n:
        v_idx = np.fromiter((v for v, _ in cols), dtype=np.int64, count=n)
        s_idx = np.fromiter((s for _, s in cols), dtype=np.int64, count=n)
        m = ds.matrix
        for s in members:
            rc = m.row_codes(s, 0, m.n_variants)[v_idx, s_idx]
            for b in range(4):
                counts[b] += rc == b
    totals = counts.sum(axis=0)
    if allele_method == "MINIMUM":
        masked = np.where(counts > 0, counts, np.iinfo(np.int64).max)
        cons = masked.argmin(axis=0)
    else:
        cons = counts.argmax(axis=0)
    cons = cons.astype(np.uint8)
    cons_counts = counts[cons, np.arange(n)] if n else np.zeros(0, dtype=np.int64)
    cons[totals == 0] = MISSING_CODE
    return cons, cons_counts, totals


def cells_for_columns(view: DerivedView, r0: int, r1: int,
                      cols: Sequence[tuple[int, int]]):
    """Cell codes (and frequencies when any row is aggregated) for the given
    row range over an explicit allele-column list.

    Returns (codes, freqs): codes is (rows, cols) uint8 with values 0..3 and
    MISSING_CODE; freqs is a float array in [0,1] or None for plain views.
    Plain rows in a mixed view carry frequency 1.0 (0.0 for missing cells).
    """
    if not 0 <= r0 <= r1 <= view.n_rows:
        raise OutOfBounds(f"rows [{r0},{r1}) outside {view.n_rows}")
    n_r, n_c = r1 - r0, len(cols)
    codes = np.empty((n_r, n_c), dtype=np.uint8)
    freqs = np.zeros((n_r, n_c), dtype=np.float64) if view.aggregated else None
    m = view.dataset.matrix
    if n_c:
        v_idx = np.fromiter((v for v, _ in cols), dtype=np.int64, count=n_c)
        s_idx = np.fromiter((s for _, s in cols), dtype=np.int64, count=n_c)
    for i in range(n_r):
        row = view.rows[r0 + i]
        if not row.aggregated:
            if n_c:
                rc = m.row_codes(row.members[0], 0, m.n_variants)[v_idx, s_idx]
            else:
                rc = np.empty(0, dtype=np.uint8)
            codes[i] = rc
            if freqs is not None:
                freqs[i] = np.where(rc == MISSING_CODE, 0.0, 1.0)
        else:
            cons, cons_counts, totals = consensus_cells(
                view.dataset, row.members, cols, row.allele_method)
            codes[i] = cons
            if freqs is not None:
                with np.errstate(invalid="ignore", divide="ignore"):
                    f = np.where(totals > 0, cons_counts / np.maximum(totals, 1), 0.0)
                freqs[i] = f
    return codes, freqs


def view_cells(view: DerivedView, r0: int, r1: int, c0: int, c1: int):
    """Window form of cells_for_columns over the view's own column order."""
    if not (0 <= c0 <= c1 <= view.n_cols):
        raise OutOfBounds(f"cols [{c0},{c1}) outside {view.n_cols}")
    return cells_for_columns(view, r0, r1, view.cols[c0:c1])


def replay_steps(ds: Dataset, step_objs: Sequence) -> tuple[ViewChain, set[int], set[int]]:
    """Replay a full step log (transforms plus selection steps).

    Returns the resulting chain and the selected row/column index sets.
    Selection indices that fall outside the view after a later transform are
    pruned, mirroring the session behaviour.
    """
    chain = ViewChain(ds)
    sel_rows: set[int] = set()
    sel_cols: set[int] = set()
    for step in step_objs:
        if isinstance(step, Select):
            d = chain.derived
            if any(not 0 <= i < d.n_rows for i in step.rows) or \
               any(not 0 <= j < d.n_cols for j in step.cols):
                raise OutOfBounds("selection outside derived view")
            sel_rows, sel_cols = set(step.rows), set(step.cols)
        elif isinstance(step, ClearSelection):
            sel_rows, sel_cols = set(), set()
        else:
            chain = chain.with_step(step)
            d = chain.derived
            sel_rows = {i for i in sel_rows if i < d.n_rows}
            sel_cols = {j for j in sel_cols if j < d.n_cols}
    return chain, sel_rows, sel_cols
