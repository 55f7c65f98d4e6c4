"""Streaming parsers: VCF, IMPUTE2 haplotypes, and two-header meta files.

All parsers consume iterables of text lines (open files work directly), keep
only one input line plus the packed staging buffers in memory, and return a
sealed Dataset together with a ParseReport describing what was skipped.

Only single-base substitutions are retained; INDELs and other non-SNV
records are skipped and counted. Multi-allelic SNVs are kept, each genotype
index mapping to its own base.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .dataset import Dataset, MetaColumn, MetaKind, MetaTable, MetaType, VariantTable, make_dataset
from .errors import DimensionMismatch, MalformedHeader, MalformedRecord
from .store import BASE_TO_CODE, MISSING_CODE, MatrixBuilder

_VCF_FIXED_COLS = 9
_TAB, _PIPE, _SLASH = 0x09, 0x7C, 0x2F


@dataclass
class ParseReport:
    """Data-quality feedback returned alongside every parsed Dataset."""

    source_format: str
    records: int = 0
    retained: int = 0
    skipped_non_snv: int = 0
    mixed_separators: bool = False
    meta_unknown_ids: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "source_format": self.source_format,
            "records": self.records,
            "retained": self.retained,
            "skipped_non_snv": self.skipped_non_snv,
            "mixed_separators": self.mixed_separators,
            "meta_unknown_ids": dict(self.meta_unknown_ids),
        }


def _snv_base(token: str) -> Optional[int]:
    """Code of a single-base allele string, None if not a plain SNV base."""
    if len(token) != 1:
        return None
    return BASE_TO_CODE.get(token.upper())


class _VariantAccumulator:
    """Shared bookkeeping for both parsers: ordering, IDs, table columns."""

    def __init__(self):
        self.ids: list[str] = []
        self.chroms: list[str] = []
        self.positions: list[int] = []
        self.refs: list[Optional[str]] = []
        self.alts: list[Optional[str]] = []
        self._seen: set[str] = set()
        self._last_pos: dict[str, int] = {}

    def add(self, ident: str, chrom: str, pos: int,
            ref: Optional[str], alt: Optional[str], line_no: int) -> None:
        if ident in self._seen:
            raise MalformedRecord(f"duplicate variant identifier {ident!r}", line_no)
        last = self._last_pos.get(chrom)
        if last is not None and pos < last:
            raise MalformedRecord(
                f"position {pos} decreases on chromosome {chrom}", line_no)
        self._last_pos[chrom] = pos
        self._seen.add(ident)
        self.ids.append(ident)
        self.chroms.append(chrom)
        self.positions.append(pos)
        self.refs.append(ref)
        self.alts.append(alt)

    def fresh_id(self, chrom: str, pos: int) -> str:
        base = f"{chrom}:{pos}"
        ident, k = base, 1
        while ident in self._seen:
            k += 1
            ident = f"{base}_{k}"
        return ident

    def table(self) -> VariantTable:
        return VariantTable(ids=tuple(self.ids), chromosomes=tuple(self.chroms),
                            positions=tuple(self.positions), refs=tuple(self.refs),
                            alts=tuple(self.alts))


def _fast_gt_row(region: str, n_subjects: int, allele_map: np.ndarray):
    """Vectorized decode of a sample region made of uniform "a|b" fields.

    Returns (paternal, maternal, saw_pipe, saw_slash) or None when the region
    is not in the strict single-digit diploid shape (caller falls back to the
    per-token path). Raises MalformedRecord via the caller for indices beyond
    the ALT list, which surface here as unmapped digits.
    """
    try:
        raw = region.encode("ascii")
    except UnicodeEncodeError:
        return None
    if len(raw) != 4 * n_subjects - 1:
        return None
    arr = np.frombuffer(raw, dtype=np.uint8)
    if n_subjects > 1 and not (arr[3::4] == _TAB).all():
        return None
    seps = arr[1::4]
    pipe = bool((seps == _PIPE).any())
    slash = bool((seps == _SLASH).any())
    if not ((seps == _PIPE) | (seps == _SLASH)).all():
        return None
    d0, d1 = arr[0::4], arr[2::4]
    digits = (d0 >= 0x30) & (d0 <= 0x39) & (d1 >= 0x30) & (d1 <= 0x39)
    if not digits.all():
        return None
    pat = allele_map[d0 - 0x30]
    mat = allele_map[d1 - 0x30]
    if (pat == 0xFF).any() or (mat == 0xFF).any():
        raise MalformedRecord("genotype index exceeds ALT count")
    return pat, mat, pipe, slash


def _gt_token_code(token: str, codes: list[int], line_no: int) -> int:
    if token == ".":
        return MISSING_CODE
    if not token.isdigit():
        raise MalformedRecord(f"bad genotype allele index {token!r}", line_no)
    idx = int(token)
    if idx >= len(codes):
        raise MalformedRecord(
            f"genotype index {idx} exceeds ALT count {len(codes) - 1}", line_no)
    return codes[idx]


def parse_vcf(stream: Iterable[str]) -> tuple[Dataset, ParseReport]:
    """Parse a VCF text stream into a sealed Dataset.

    GT "a|b" marks phased and "a/b" unphased; the dataset is phased only if
    no '/' separator appears. '.' alleles become missing; a single-allele GT
    leaves the second allele missing. Non-SNV records are skipped and
    counted in the report.
    """
    report = ParseReport(source_format="VCF")
    subjects: Optional[tuple[str, ...]] = None
    builder: Optional[MatrixBuilder] = None
    acc = _VariantAccumulator()
    saw_pipe = saw_slash = False
    line_no = 0

    for raw in stream:
        line_no += 1
        line = raw.rstrip("\r\n")
        if not line:
            continue
        if line.startswith("##"):
            continue
        if line.startswith("#"):
            if subjects is not None:
                raise MalformedHeader("second header line", line_no)
            cols = line.split("\t")
            if len(cols) < _VCF_FIXED_COLS or not cols[0].startswith("#CHROM"):
                raise MalformedHeader("expected #CHROM header with 9 fixed columns", line_no)
            names = tuple(cols[_VCF_FIXED_COLS:])
            if len(set(names)) != len(names):
                raise MalformedHeader("duplicate subject identifier", line_no)
            subjects = names
            builder = MatrixBuilder(len(names), phased=True)
            continue
        if subjects is None:
            raise MalformedHeader("record before #CHROM header", line_no)

        report.records += 1
        n = len(subjects)
        parts = line.split("\t", _VCF_FIXED_COLS)
        if len(parts) < _VCF_FIXED_COLS + (1 if n else 0):
            raise MalformedRecord(
                f"expected {_VCF_FIXED_COLS + n} columns, got {len(parts)}", line_no)
        chrom, pos_s, vid, ref_s, alt_s = parts[0], parts[1], parts[2], parts[3], parts[4]
        fmt = parts[8]
        try:
            pos = int(pos_s)
        except ValueError:
            raise MalformedRecord(f"bad position {pos_s!r}", line_no) from None

        ref_code = _snv_base(ref_s)
        alt_codes = [_snv_base(a) for a in alt_s.split(",")] if alt_s not in (".", "") else []
        if ref_code is None or not alt_codes or any(c is None for c in alt_codes):
            report.skipped_non_snv += 1
            continue

        fmt_fields = fmt.split(":")
        try:
            gt_at = fmt_fields.index("GT")
        except ValueError:
            raise MalformedRecord("FORMAT lacks GT", line_no) from None

        codes_by_index: list[int] = [ref_code] + [int(c) for c in alt_codes]
        # digit -> code lookup for the vectorized path, 0xFF = beyond ALT count
        allele_map = np.full(10, 0xFF, dtype=np.uint8)
        for k, c in enumerate(codes_by_index[:10]):
            allele_map[k] = c

        if n == 0:
            if len(parts) != _VCF_FIXED_COLS:
                raise MalformedRecord("unexpected sample columns", line_no)
            pat = mat = np.empty(0, dtype=np.uint8)
        else:
            region = parts[9]
            fast = None
            if gt_at == 0 and len(codes_by_index) <= 10:
                try:
                    fast = _fast_gt_row(region, n, allele_map)
                except MalformedRecord as exc:
                    raise MalformedRecord(str(exc), line_no) from None
            if fast is not None:
                pat, mat, pipe, slash = fast
                saw_pipe |= pipe
                saw_slash |= slash
            else:
                tokens = region.split("\t")
                if len(tokens) != n:
                    raise MalformedRecord(
                        f"expected {n} sample columns, got {len(tokens)}", line_no)
                pat = np.empty(n, dtype=np.uint8)
                mat = np.empty(n, dtype=np.uint8)
                for i, token in enumerate(tokens):
                    subfields = token.split(":")
                    if gt_at >= len(subfields):
                        raise MalformedRecord(f"sample field lacks GT: {token!r}", line_no)
                    gt = subfields[gt_at]
                    if "|" in gt:
                        saw_pipe = True
                        alleles = gt.split("|")
                    elif "/" in gt:
                        saw_slash = True
                        alleles = gt.split("/")
                    else:
                        alleles = [gt]
                    if len(alleles) > 2:
                        raise MalformedRecord(f"more than two alleles in GT {gt!r}", line_no)
                    pat[i] = _gt_token_code(alleles[0], codes_by_index, line_no)
                    if len(alleles) == 2:
                        mat[i] = _gt_token_code(alleles[1], codes_by_index, line_no)
                    else:
                        mat[i] = MISSING_CODE

        ident = vid if vid not in (".", "") else acc.fresh_id(chrom, pos)
        acc.add(ident, chrom, pos, ref_s.upper(), alt_s.split(",")[0].upper(), line_no)
        builder.append_variant(pat, mat)
        report.retained += 1

    if subjects is None:
        raise MalformedHeader("missing #CHROM header", line_no or None)
    phased = not saw_slash
    report.mixed_separators = saw_pipe and saw_slash
    builder.phased = phased
    ds = make_dataset(builder.seal(), subjects, acc.table(), phased)
    return ds, report


def parse_impute2(hap_stream: Iterable[str],
                  sample_stream: Iterable[str]) -> tuple[Dataset, ParseReport]:
    """Parse an IMPUTE2 haplotype stream plus its subject-ID list.

    Hap lines carry "chrom id position alleleA alleleB" and 2N {0,1}
    indicators; indicator 0 selects alleleA, 1 selects alleleB. Columns 2k
    and 2k+1 are subject k's paternal and maternal alleles. The result is
    always phased.
    """
    report = ParseReport(source_format="IMPUTE2")
    subjects: list[str] = []
    for s_no, raw in enumerate(sample_stream, start=1):
        token = raw.strip()
        if not token:
            continue
        ident = token.split()[0]
        if ident in subjects:
            raise MalformedRecord(f"duplicate subject identifier {ident!r}", s_no)
        subjects.append(ident)
    n = len(subjects)

    builder = MatrixBuilder(n, phased=True)
    acc = _VariantAccumulator()
    expected = 5 + 2 * n
    first_data_line = True
    line_no = 0
    for raw in hap_stream:
        line_no += 1
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != expected:
            if first_data_line:
                raise DimensionMismatch(
                    f"hap line has {len(tokens)} tokens; {n} subjects need {expected}")
            raise MalformedRecord(
                f"expected {expected} tokens, got {len(tokens)}", line_no)
        first_data_line = False
        report.records += 1
        chrom, ident, pos_s, a_s, b_s = tokens[:5]
        try:
            pos = int(pos_s)
        except ValueError:
            raise MalformedRecord(f"bad position {pos_s!r}", line_no) from None
        code_a, code_b = _snv_base(a_s), _snv_base(b_s)
        if code_a is None or code_b is None:
            report.skipped_non_snv += 1
            continue
        ind = np.array(tokens[5:], dtype="U1")
        if not np.isin(ind, ("0", "1")).all():
            raise MalformedRecord("haplotype indicator outside {0,1}", line_no)
        codes = np.where(ind == "1", np.uint8(code_b), np.uint8(code_a))
        acc.add(ident, chrom, pos, a_s.upper(), b_s.upper(), line_no)
        builder.append_variant(codes[0::2], codes[1::2])
        report.retained += 1

    ds = make_dataset(builder.seal(), tuple(subjects), acc.table(), phased=True)
    return ds, report


_META_TYPES = {"CATEGORICAL": MetaType.CATEGORICAL, "NUMERICAL": MetaType.NUMERICAL}


def parse_meta(stream: Iterable[str], kind: MetaKind, name: str = "meta") -> MetaTable:
    """Parse a tab-delimited meta file with two header lines.

    Line one names the columns (first column holds the IDs), line two
    declares each value column CATEGORICAL or NUMERICAL (case-insensitive;
    the token above the ID column is ignored). Empty cells are ABSENT.
    """
    lines = iter(stream)
    line_no = 0

    def next_line() -> Optional[str]:
        nonlocal line_no
        for raw in lines:
            line_no += 1
            return raw.rstrip("\r\n")
        return None

    header = next_line()
    types_line = next_line()
    if header is None or types_line is None:
        raise MalformedHeader("meta file needs two header lines", line_no or None)
    names = header.split("\t")
    type_tokens = types_line.split("\t")
    if len(type_tokens) != len(names):
        raise MalformedHeader(
            f"{len(names)} column names but {len(type_tokens)} type tokens", 2)
    if len(names) < 2:
        raise MalformedHeader("meta file needs an ID column and at least one value column", 1)
    col_types = []
    for token in type_tokens[1:]:
        t = _META_TYPES.get(token.strip().upper())
        if t is None:
            raise MalformedHeader(f"unknown type token {token!r}", 2)
        col_types.append(t)

    values: list[dict[str, object]] = [{} for _ in col_types]
    seen: set[str] = set()
    while True:
        line = next_line()
        if line is None:
            break
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) > len(names):
            raise MalformedRecord(
                f"row has {len(fields)} fields, header has {len(names)}", line_no)
        fields += [""] * (len(names) - len(fields))
        ident = fields[0]
        if not ident:
            raise MalformedRecord("row without an identifier", line_no)
        if ident in seen:
            raise MalformedRecord(f"duplicate identifier {ident!r}", line_no)
        seen.add(ident)
        for j, (ctype, cell) in enumerate(zip(col_types, fields[1:])):
            if cell == "":
                continue
            if ctype is MetaType.NUMERICAL:
                try:
                    num = float(cell)
                except ValueError:
                    raise MalformedRecord(
                        f"non-numeric value {cell!r} in NUMERICAL column", line_no) from None
                if not math.isfinite(num):
                    raise MalformedRecord(
                        f"non-finite value {cell!r} in NUMERICAL column", line_no)
                values[j][ident] = num
            else:
                values[j][ident] = cell

    columns = tuple(
        MetaColumn(name=names[j + 1], type=col_types[j], values=values[j])
        for j in range(len(col_types))
    )
    return MetaTable(name=name, kind=kind, columns=columns)
