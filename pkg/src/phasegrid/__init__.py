"""phasegrid: exploration engine for phased haplotype / genotype matrices."""

from .dataset import (
    Dataset,
    MetaColumn,
    MetaKind,
    MetaTable,
    MetaType,
    PM_TABLE,
    VariantTable,
    attach_meta,
    make_dataset,
)
from .errors import PhaseGridError
from .ingest import ParseReport, parse_impute2, parse_meta, parse_vcf
from .store import (
    BASES,
    Genotype,
    MISSING_CODE,
    MatrixBuilder,
    PackedHaplotypeMatrix,
    pack_allele,
    unpack_allele,
)

__version__ = "0.1.0"

__all__ = [
    "BASES",
    "Dataset",
    "Genotype",
    "MISSING_CODE",
    "MatrixBuilder",
    "MetaColumn",
    "MetaKind",
    "MetaTable",
    "MetaType",
    "PM_TABLE",
    "PackedHaplotypeMatrix",
    "ParseReport",
    "PhaseGridError",
    "VariantTable",
    "attach_meta",
    "make_dataset",
    "pack_allele",
    "parse_impute2",
    "parse_meta",
    "parse_vcf",
    "unpack_allele",
    "__version__",
]
