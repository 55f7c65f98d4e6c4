"""Step schema shared by the service log, session persistence, and CLI pipelines.

A pipeline is a JSON array of step objects, each {"type": ..., ...params}.
The same serialized form is what GET /sessions/{id}/log returns, so any log
can be replayed as a pipeline and vice versa.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import PhaseGridError


class InvalidStep(PhaseGridError):
    """Step object does not match the schema."""


@dataclass(frozen=True)
class FilterRegion:
    chrom: str
    start: int
    end: int
    type: str = field(default="filter_region", init=False)


@dataclass(frozen=True)
class FilterIds:
    ids: tuple[str, ...]
    type: str = field(default="filter_ids", init=False)


@dataclass(frozen=True)
class FilterRegex:
    pattern: str
    type: str = field(default="filter_regex", init=False)


@dataclass(frozen=True)
class FilterFrequency:
    threshold: float
    mode: str  # ABOVE | BELOW
    type: str = field(default="filter_frequency", init=False)


@dataclass(frozen=True)
class SortRows:
    column: str
    type: str = field(default="sort_rows", init=False)


@dataclass(frozen=True)
class SortCols:
    column: str
    type: str = field(default="sort_cols", init=False)


@dataclass(frozen=True)
class AggregateRows:
    """Group by a categorical column, or merge an explicit row selection."""

    grouping: Optional[str] = None        # categorical subject column name
    rows: Optional[tuple[int, ...]] = None  # view row indices, selection mode
    allele_method: str = "MAXIMUM"        # MAXIMUM | MINIMUM
    meta_method: str = "MEAN"             # MIN | MAX | MEAN | MODE
    type: str = field(default="aggregate_rows", init=False)


@dataclass(frozen=True)
class Select:
    rows: tuple[int, ...] = ()
    cols: tuple[int, ...] = ()
    type: str = field(default="select", init=False)


@dataclass(frozen=True)
class ClearSelection:
    type: str = field(default="clear_selection", init=False)


Step = (FilterRegion, FilterIds, FilterRegex, FilterFrequency,
        SortRows, SortCols, AggregateRows, Select, ClearSelection)

#: Steps that change the derived view (everything except selection).
TRANSFORM_TYPES = ("filter_region", "filter_ids", "filter_regex",
                   "filter_frequency", "sort_rows", "sort_cols", "aggregate_rows")

_ALLELE_METHODS = ("MAXIMUM", "MINIMUM")
_META_METHODS = ("MIN", "MAX", "MEAN", "MODE")
_FREQ_MODES = ("ABOVE", "BELOW")


def _need(obj: dict, key: str, types, what: str):
    if key not in obj:
        raise InvalidStep(f"{what}: missing {key!r}")
    val = obj[key]
    if not isinstance(val, types):
        raise InvalidStep(f"{what}: {key!r} has wrong type")
    return val


def _str_list(obj: dict, key: str, what: str) -> tuple[str, ...]:
    val = _need(obj, key, list, what)
    if not all(isinstance(x, str) for x in val):
        raise InvalidStep(f"{what}: {key!r} must be a list of strings")
    return tuple(val)


def _int_list(obj: dict, key: str, what: str) -> tuple[int, ...]:
    val = obj.get(key, [])
    if not isinstance(val, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in val):
        raise InvalidStep(f"{what}: {key!r} must be a list of integers")
    return tuple(val)


def step_from_json(obj: dict):
    """Validate and build a step object from its JSON form."""
    if not isinstance(obj, dict):
        raise InvalidStep("step must be an object")
    kind = obj.get("type")
    if kind == "filter_region":
        return FilterRegion(chrom=str(_need(obj, "chrom", (str, int), kind)),
                            start=_need(obj, "start", int, kind),
                            end=_need(obj, "end", int, kind))
    if kind == "filter_ids":
        return FilterIds(ids=_str_list(obj, "ids", kind))
    if kind == "filter_regex":
        return FilterRegex(pattern=_need(obj, "pattern", str, kind))
    if kind == "filter_frequency":
        threshold = _need(obj, "threshold", (int, float), kind)
        mode = _need(obj, "mode", str, kind).upper()
        if mode not in _FREQ_MODES:
            raise InvalidStep(f"filter_frequency: mode must be one of {_FREQ_MODES}")
        return FilterFrequency(threshold=float(threshold), mode=mode)
    if kind == "sort_rows":
        return SortRows(column=_need(obj, "column", str, kind))
    if kind == "sort_cols":
        return SortCols(column=_need(obj, "column", str, kind))
    if kind == "aggregate_rows":
        grouping = obj.get("grouping")
        rows = obj.get("rows")
        if (grouping is None) == (rows is None):
            raise InvalidStep("aggregate_rows: exactly one of grouping/rows required")
        if grouping is not None and not isinstance(grouping, str):
            raise InvalidStep("aggregate_rows: grouping must be a column name")
        allele = str(obj.get("allele_method", "MAXIMUM")).upper()
        meta = str(obj.get("meta_method", "MEAN")).upper()
        if allele not in _ALLELE_METHODS:
            raise InvalidStep(f"aggregate_rows: allele_method must be one of {_ALLELE_METHODS}")
        if meta not in _META_METHODS:
            raise InvalidStep(f"aggregate_rows: meta_method must be one of {_META_METHODS}")
        return AggregateRows(
            grouping=grouping,
            rows=_int_list(obj, "rows", kind) if rows is not None else None,
            allele_method=allele, meta_method=meta)
    if kind == "select":
        return Select(rows=_int_list(obj, "rows", kind), cols=_int_list(obj, "cols", kind))
    if kind == "clear_selection":
        return ClearSelection()
    raise InvalidStep(f"unknown step type {kind!r}")


def step_to_json(step) -> dict:
    """Serialize a step; inverse of step_from_json."""
    if isinstance(step, FilterRegion):
        return {"type": step.type, "chrom": step.chrom, "start": step.start, "end": step.end}
    if isinstance(step, FilterIds):
        return {"type": step.type, "ids": list(step.ids)}
    if isinstance(step, FilterRegex):
        return {"type": step.type, "pattern": step.pattern}
    if isinstance(step, FilterFrequency):
        return {"type": step.type, "threshold": step.threshold, "mode": step.mode}
    if isinstance(step, (SortRows, SortCols)):
        return {"type": step.type, "column": step.column}
    if isinstance(step, AggregateRows):
        out = {"type": step.type, "allele_method": step.allele_method,
               "meta_method": step.meta_method}
        if step.grouping is not None:
            out["grouping"] = step.grouping
        else:
            out["rows"] = list(step.rows or ())
        return out
    if isinstance(step, Select):
        return {"type": step.type, "rows": list(step.rows), "cols": list(step.cols)}
    if isinstance(step, ClearSelection):
        return {"type": step.type}
    raise InvalidStep(f"not a step: {step!r}")
