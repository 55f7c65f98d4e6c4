"""Shared fixture generators and independent oracle parsers.

The oracles here deliberately avoid every phasegrid code path: they parse
with plain string handling into dense Python lists so the package's packed
store and streaming parsers can be checked against them.
"""

from __future__ import annotations

import random

BASES = "ACGT"
MISSING = None  # oracle representation of an absent allele


def random_truth(rng: random.Random, n_subjects: int, n_variants: int,
                 chrom: str = "1", missing_rate: float = 0.0,
                 start_pos: int = 100, pos_step: int = 10):
    """Random cohort truth: dense base grid plus variant identity columns.

    Grid cells are (paternal, maternal) base chars or None for missing.
    Every cell allele is either the variant's REF or its single ALT, so the
    same truth can be rendered as a VCF or an IMPUTE2 fixture.
    """
    subjects = [f"S{i:03d}" for i in range(n_subjects)]
    ids, positions, refs, alts = [], [], [], []
    grid = [[None] * n_variants for _ in range(n_subjects)]
    pos = start_pos
    for v in range(n_variants):
        ref, alt = rng.sample(BASES, 2)
        ids.append(f"rs{v + 1:05d}")
        positions.append(pos)
        pos += rng.randint(1, pos_step)
        refs.append(ref)
        alts.append(alt)
        for s in range(n_subjects):
            pair = []
            for _ in range(2):
                if missing_rate and rng.random() < missing_rate:
                    pair.append(MISSING)
                else:
                    pair.append(ref if rng.random() < 0.7 else alt)
            grid[s][v] = tuple(pair)
    return {
        "subjects": subjects, "ids": ids, "chrom": chrom,
        "positions": positions, "refs": refs, "alts": alts, "grid": grid,
    }


def truth_to_vcf(truth, phased: bool = True) -> str:
    """Render a truth cohort as VCF text (GT-only FORMAT)."""
    sep = "|" if phased else "/"
    out = ["##fileformat=VCFv4.2"]
    out.append("#CHROM\tPOS\tID\tREF\tALT\tQUAL\tFILTER\tINFO\tFORMAT\t"
               + "\t".join(truth["subjects"]))
    n_s = len(truth["subjects"])
    for v in range(len(truth["ids"])):
        ref, alt = truth["refs"][v], truth["alts"][v]
        fields = [truth["chrom"], str(truth["positions"][v]), truth["ids"][v],
                  ref, alt, ".", "PASS", ".", "GT"]
        for s in range(n_s):
            pair = truth["grid"][s][v]
            toks = ["." if a is MISSING else ("0" if a == ref else "1") for a in pair]
            fields.append(sep.join(toks))
        out.append("\t".join(fields))
    return "\n".join(out) + "\n"


def truth_to_impute2(truth) -> tuple[str, str]:
    """Render a truth cohort as (haps text, sample text); requires no missing."""
    hap_lines = []
    n_s = len(truth["subjects"])
    for v in range(len(truth["ids"])):
        ref, alt = truth["refs"][v], truth["alts"][v]
        tokens = [truth["chrom"], truth["ids"][v], str(truth["positions"][v]), ref, alt]
        for s in range(n_s):
            for a in truth["grid"][s][v]:
                assert a is not MISSING, "IMPUTE2 fixtures cannot carry missing alleles"
                tokens.append("0" if a == ref else "1")
        hap_lines.append(" ".join(tokens))
    samples = "\n".join(truth["subjects"]) + "\n"
    return "\n".join(hap_lines) + "\n", samples


def naive_parse_vcf(text: str):
    """Reference VCF reader: dense grid of (pat, mat) base chars / None."""
    subjects = None
    grid_rows = []  # variant-major: list of per-subject pairs
    ids, refs, alts, positions, chroms = [], [], [], [], []
    for line in text.splitlines():
        if not line or line.startswith("##"):
            continue
        if line.startswith("#"):
            subjects = line.split("\t")[9:]
            continue
        f = line.split("\t")
        ref, alt_field = f[3], f[4]
        alleles = [ref] + alt_field.split(",")
        if any(len(a) != 1 or a.upper() not in BASES for a in alleles) or alt_field in (".", ""):
            continue
        row = []
        for tok in f[9:]:
            gt = tok.split(":")[0]
            sep = "|" if "|" in gt else "/"
            parts = gt.split(sep) if sep in gt else [gt]
            pair = []
            for p in parts:
                pair.append(MISSING if p == "." else alleles[int(p)].upper())
            while len(pair) < 2:
                pair.append(MISSING)
            row.append(tuple(pair))
        grid_rows.append(row)
        ids.append(f[2])
        chroms.append(f[0])
        positions.append(int(f[1]))
        refs.append(ref.upper())
        alts.append(alt_field.split(",")[0].upper())
    grid = [[grid_rows[v][s] for v in range(len(grid_rows))] for s in range(len(subjects))]
    return {"subjects": subjects, "ids": ids, "chroms": chroms,
            "positions": positions, "refs": refs, "alts": alts, "grid": grid}


def naive_parse_impute2(hap_text: str, sample_text: str):
    """Reference IMPUTE2 reader mirroring naive_parse_vcf's output shape."""
    subjects = [l.split()[0] for l in sample_text.splitlines() if l.strip()]
    ids, refs, alts, positions, chroms = [], [], [], [], []
    grid_rows = []
    for line in hap_text.splitlines():
        if not line.strip():
            continue
        t = line.split()
        chrom, ident, pos, a, b = t[:5]
        if len(a) != 1 or len(b) != 1 or a.upper() not in BASES or b.upper() not in BASES:
            continue
        ind = t[5:]
        row = []
        for k in range(len(subjects)):
            pat = a if ind[2 * k] == "0" else b
            mat = a if ind[2 * k + 1] == "0" else b
            row.append((pat.upper(), mat.upper()))
        grid_rows.append(row)
        ids.append(ident)
        chroms.append(chrom)
        positions.append(int(pos))
        refs.append(a.upper())
        alts.append(b.upper())
    grid = [[grid_rows[v][s] for v in range(len(grid_rows))] for s in range(len(subjects))]
    return {"subjects": subjects, "ids": ids, "chroms": chroms,
            "positions": positions, "refs": refs, "alts": alts, "grid": grid}


def dataset_grid(ds):
    """Dense (pat, mat) grid decoded cell-by-cell from a parsed Dataset."""
    m = ds.matrix
    return [
        [tuple(m.get_genotype(s, v)) for v in range(m.n_variants)]
        for s in range(m.n_subjects)
    ]


def make_ds(codes, *, chrom="1", positions=None, ids=None, refs=None, alts=None,
            phased=True, subject_meta=None, variant_meta=None, subjects=None):
    """Assemble a Dataset straight from a dense code array (tests only).

    codes: (n_subjects, n_variants, 2) ints 0..3 or 4 for missing.
    subject_meta/variant_meta: {table_name: [(col_name, "CATEGORICAL"|"NUMERICAL",
    {id: value})]} attached in iteration order.
    """
    import numpy as np
    from phasegrid.dataset import (MetaColumn, MetaKind, MetaTable, MetaType,
                                   VariantTable, attach_meta, make_dataset)
    from phasegrid.store import build_matrix

    codes = np.asarray(codes, dtype=np.uint8)
    ns, nv = codes.shape[0], codes.shape[1]
    subjects = tuple(subjects or (f"S{i:03d}" for i in range(ns)))
    ids = tuple(ids or (f"rs{v + 1:05d}" for v in range(nv)))
    positions = tuple(positions or range(100, 100 + 10 * nv, 10))
    refs = tuple(refs or ("A",) * nv)
    alts = tuple(alts or ("G",) * nv)
    chroms = (chrom,) * nv if isinstance(chrom, str) else tuple(chrom)
    table = VariantTable(ids=ids, chromosomes=chroms, positions=positions,
                         refs=refs, alts=alts)
    ds = make_dataset(build_matrix(codes, phased), subjects, table, phased)
    for kind, spec in ((MetaKind.SUBJECT, subject_meta), (MetaKind.VARIANT, variant_meta)):
        for name, cols in (spec or {}).items():
            columns = tuple(
                MetaColumn(name=cn, type=MetaType[ct], values=dict(vals))
                for cn, ct, vals in cols
            )
            ds = attach_meta(ds, MetaTable(name=name, kind=kind, columns=columns), kind)
    return ds
