"""Dataset model: sealed matrix plus subject/variant tables and meta tables."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Union

from .errors import DuplicateMeta, MetaKindMismatch
from .store import PackedHaplotypeMatrix

#: Name of the synthetic variant-meta row marking allele columns paternal/maternal.
PM_TABLE = "P/M"


class MetaKind(enum.Enum):
    SUBJECT = "SUBJECT"
    VARIANT = "VARIANT"


class MetaType(enum.Enum):
    CATEGORICAL = "CATEGORICAL"
    NUMERICAL = "NUMERICAL"


MetaValue = Union[str, float]


@dataclass(frozen=True)
class MetaColumn:
    """One typed annotation column; IDs absent from values are ABSENT cells."""

    name: str
    type: MetaType
    values: Mapping[str, MetaValue]

    def get(self, ident: str) -> Optional[MetaValue]:
        return self.values.get(ident)

    def categories(self) -> list[str]:
        if self.type is not MetaType.CATEGORICAL:
            return []
        return sorted({str(v) for v in self.values.values()})


@dataclass(frozen=True)
class MetaTable:
    name: str
    kind: MetaKind
    columns: tuple[MetaColumn, ...]
    #: True for auto-generated tables such as the P/M row.
    synthetic: bool = False
    #: Row IDs that did not resolve against the dataset at attach time.
    unknown_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class VariantTable:
    """Per-variant identity columns, parallel tuples indexed by variant."""

    ids: tuple[str, ...]
    chromosomes: tuple[str, ...]
    positions: tuple[int, ...]
    refs: tuple[Optional[str], ...]   # None = UNKNOWN
    alts: tuple[Optional[str], ...]

    def __len__(self) -> int:
        return len(self.ids)


def _pm_table() -> MetaTable:
    # Values are positional (paternal/maternal slot of each variant), so the
    # table carries no id-keyed values; consumers special-case PM_TABLE.
    col = MetaColumn(name=PM_TABLE, type=MetaType.CATEGORICAL, values={})
    return MetaTable(name=PM_TABLE, kind=MetaKind.VARIANT, columns=(col,), synthetic=True)


@dataclass(frozen=True)
class Dataset:
    """Sealed matrix plus tables; immutable, shared freely across sessions."""

    matrix: PackedHaplotypeMatrix
    subjects: tuple[str, ...]
    variants: VariantTable
    subject_meta: tuple[MetaTable, ...] = ()
    variant_meta: tuple[MetaTable, ...] = ()
    phased: bool = False
    _subject_index: dict = field(init=False, default_factory=dict, repr=False, compare=False)
    _variant_index: dict = field(init=False, default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.subjects) != self.matrix.n_subjects:
            raise ValueError("subject table does not match matrix rows")
        if len(self.variants) != self.matrix.n_variants:
            raise ValueError("variant table does not match matrix columns")
        self._subject_index.update({s: i for i, s in enumerate(self.subjects)})
        self._variant_index.update({v: i for i, v in enumerate(self.variants.ids)})

    def subject_pos(self, ident: str) -> Optional[int]:
        return self._subject_index.get(ident)

    def variant_pos(self, ident: str) -> Optional[int]:
        return self._variant_index.get(ident)

    def meta_tables(self, kind: MetaKind) -> tuple[MetaTable, ...]:
        return self.subject_meta if kind is MetaKind.SUBJECT else self.variant_meta

    def mi_column_count(self) -> int:
        """Subject meta columns ("MI columns" in the summary panel)."""
        return sum(len(t.columns) for t in self.subject_meta)

    def mi_row_count(self) -> int:
        """Variant meta columns ("MI rows"), including the synthetic P/M row."""
        return sum(len(t.columns) for t in self.variant_meta)


def make_dataset(matrix: PackedHaplotypeMatrix, subjects: tuple[str, ...],
                 variants: VariantTable, phased: bool) -> Dataset:
    """Assemble a dataset; phased data always exposes the P/M meta row."""
    variant_meta = (_pm_table(),) if phased else ()
    return Dataset(matrix=matrix, subjects=subjects, variants=variants,
                   subject_meta=(), variant_meta=variant_meta, phased=phased)


def attach_meta(ds: Dataset, table: MetaTable, axis: MetaKind) -> Dataset:
    """Attach a parsed meta table to the subject or variant axis.

    Row IDs that do not resolve against the dataset are kept in the table
    (they are inert) but recorded on ``unknown_ids`` so callers can report
    them. Raises MetaKindMismatch on a wrong-axis table and DuplicateMeta on
    a name collision.
    """
    if table.kind is not axis:
        raise MetaKindMismatch(
            f"cannot attach {table.kind.value} table {table.name!r} to {axis.value} axis")
    existing = ds.meta_tables(axis)
    if any(t.name == table.name for t in existing):
        raise DuplicateMeta(f"meta table {table.name!r} already attached")
    resolve = ds.subject_pos if axis is MetaKind.SUBJECT else ds.variant_pos
    seen: set[str] = set()
    for col in table.columns:
        for ident in col.values:
            if resolve(ident) is None:
                seen.add(ident)
    table = replace(table, unknown_ids=tuple(sorted(seen)))
    if axis is MetaKind.SUBJECT:
        return replace(ds, subject_meta=existing + (table,))
    return replace(ds, variant_meta=existing + (table,))
