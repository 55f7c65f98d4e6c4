"""Packed storage for diploid allele calls.

Each allele is one of A/C/G/T and packs into two bits (A=0, C=1, G=2, T=3).
A cell (one subject at one variant) holds the paternal and maternal allele in
a single nibble, paternal in bits 0-1 and maternal in bits 2-3. Cells are laid
out row-major by subject (cell index = subject * n_variants + variant) with
even cell indices in the low nibble of their byte, so the plane occupies
exactly ceil(n_subjects * n_variants / 2) bytes.

Missing alleles ("-" calls, e.g. the absent second allele of a male X
genotype) are not widened into the 2-bit code space. They live in a separate
bitset with one bit per allele (allele index = 2 * cell + slot, LSB-first
within bytes) that is only allocated when the dataset actually contains a
missing allele. A flagged allele always stores code 0 in the plane and the
code is never interpreted.

Matrices are built append-by-variant (parser friendly) into a variant-major
staging buffer and transposed once at seal time; sealed matrices are
immutable and safe to share across threads.
"""

from __future__ import annotations

from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import InvalidBase, OutOfBounds

BASES = "ACGT"
BASE_TO_CODE = {b: i for i, b in enumerate(BASES)}
#: Unpacked code for a missing allele. Never stored in the plane.
MISSING_CODE = 4


def pack_allele(base: str) -> int:
    """Map a base character to its fixed 2-bit code (A=0, C=1, G=2, T=3)."""
    code = BASE_TO_CODE.get(base)
    if code is None:
        raise InvalidBase(f"not a nucleotide in {{A,C,G,T}}: {base!r}")
    return code


def unpack_allele(code: int) -> str:
    """Inverse of pack_allele for codes 0..3."""
    if not 0 <= code < 4:
        raise InvalidBase(f"allele code out of range: {code}")
    return BASES[code]


class Genotype(NamedTuple):
    """Decoded cell; None marks a missing allele.

    For unphased datasets the paternal/maternal naming is storage order only
    and carries no phase meaning.
    """

    paternal: Optional[str]
    maternal: Optional[str]


def _read_nibbles(buf: np.ndarray, start: int, count: int) -> np.ndarray:
    """Nibble values [start, start+count) of a packed buffer, LSB-first."""
    if count == 0:
        return np.empty(0, dtype=np.uint8)
    b0 = start >> 1
    b1 = (start + count + 1) >> 1
    chunk = buf[b0:b1]
    out = np.empty(2 * len(chunk), dtype=np.uint8)
    out[0::2] = chunk & 0x0F
    out[1::2] = chunk >> 4
    off = start & 1
    return out[off:off + count]


def _write_nibbles(buf: np.ndarray, start: int, values: np.ndarray) -> None:
    """Write nibble values (each < 16) at nibble offset start, LSB-first."""
    n = len(values)
    if n == 0:
        return
    i = start
    if i & 1:
        buf[i >> 1] = (buf[i >> 1] & 0x0F) | (values[0] << 4)
        i += 1
        values = values[1:]
        n -= 1
        if n == 0:
            return
    pairs = n >> 1
    if pairs:
        lo = values[0:2 * pairs:2]
        hi = values[1:2 * pairs:2]
        buf[i >> 1:(i >> 1) + pairs] = lo | (hi << 4)
    if n & 1:
        j = (i >> 1) + pairs
        buf[j] = (buf[j] & 0xF0) | values[n - 1]


def _read_bits(buf: np.ndarray, start: int, count: int) -> np.ndarray:
    """Bit values [start, start+count) of a packed buffer, LSB-first."""
    if count == 0:
        return np.empty(0, dtype=np.uint8)
    b0 = start >> 3
    b1 = (start + count + 7) >> 3
    bits = np.unpackbits(buf[b0:b1], bitorder="little")
    off = start & 7
    return bits[off:off + count]


def _write_bits(buf: np.ndarray, start: int, bits: np.ndarray) -> None:
    """Write 0/1 values at bit offset start, LSB-first, preserving neighbours."""
    n = len(bits)
    if n == 0:
        return
    b0 = start >> 3
    off = start & 7
    total = off + n
    nbytes = (total + 7) >> 3
    tmp = np.zeros(nbytes * 8, dtype=np.uint8)
    tmp[off:off + n] = bits
    packed = np.packbits(tmp, bitorder="little")
    head_mask = (1 << off) - 1
    packed[0] |= buf[b0] & head_mask
    tail = total & 7
    if tail:
        packed[-1] |= buf[b0 + nbytes - 1] & (0xFF ^ ((1 << tail) - 1))
    buf[b0:b0 + nbytes] = packed


class PackedHaplotypeMatrix:
    """Sealed, immutable 2-bit-per-allele genotype store."""

    def __init__(self, n_subjects: int, n_variants: int, phased: bool,
                 plane: np.ndarray, missing: Optional[np.ndarray]):
        expected = (n_subjects * n_variants + 1) // 2
        if len(plane) != expected:
            raise ValueError(f"plane must be exactly {expected} bytes, got {len(plane)}")
        self.n_subjects = n_subjects
        self.n_variants = n_variants
        self.phased = phased
        self._plane = plane
        self._missing = missing
        self._plane.setflags(write=False)
        if self._missing is not None:
            self._missing.setflags(write=False)

    @property
    def plane_bytes(self) -> int:
        return len(self._plane)

    @property
    def missing_bytes(self) -> int:
        return 0 if self._missing is None else len(self._missing)

    def memory_footprint(self) -> int:
        """Bytes held by the packed plane plus the missing bitset if allocated."""
        return self.plane_bytes + self.missing_bytes

    def _check_cell(self, subject: int, variant: int) -> None:
        if not (0 <= subject < self.n_subjects and 0 <= variant < self.n_variants):
            raise OutOfBounds(
                f"cell ({subject},{variant}) outside {self.n_subjects}x{self.n_variants}")

    def get_genotype(self, subject: int, variant: int) -> Genotype:
        """Decode one cell, honouring the missing bitset."""
        self._check_cell(subject, variant)
        ci = subject * self.n_variants + variant
        byte = self._plane[ci >> 1]
        nib = int(byte & 0x0F if (ci & 1) == 0 else byte >> 4)
        pat: Optional[str] = BASES[nib & 0x3]
        mat: Optional[str] = BASES[nib >> 2]
        if self._missing is not None:
            ai = 2 * ci
            if self._missing[ai >> 3] >> (ai & 7) & 1:
                pat = None
            ai += 1
            if self._missing[ai >> 3] >> (ai & 7) & 1:
                mat = None
        return Genotype(pat, mat)

    def _check_window(self, r0: int, r1: int, c0: int, c1: int) -> None:
        if not (0 <= r0 <= r1 <= self.n_subjects and 0 <= c0 <= c1 <= self.n_variants):
            raise OutOfBounds(
                f"window rows [{r0},{r1}) cols [{c0},{c1}) outside "
                f"{self.n_subjects}x{self.n_variants}")

    def row_codes(self, subject: int, c0: int, c1: int) -> np.ndarray:
        """Codes for one subject over variants [c0, c1).

        Returns a (c1-c0, 2) uint8 array with values 0..3 plus MISSING_CODE
        for flagged alleles. Contiguous in the plane, so this is the fast
        access path for whole-row scans.
        """
        self._check_window(subject, subject + 1, c0, c1)
        n = c1 - c0
        start = subject * self.n_variants + c0
        nib = _read_nibbles(self._plane, start, n)
        out = np.empty((n, 2), dtype=np.uint8)
        out[:, 0] = nib & 0x3
        out[:, 1] = nib >> 2
        if self._missing is not None and n:
            miss = _read_bits(self._missing, 2 * start, 2 * n)
            out[miss.reshape(n, 2) == 1] = MISSING_CODE
        return out

    def window_codes(self, r0: int, r1: int, c0: int, c1: int) -> np.ndarray:
        """Dense codes for the rectangular window [r0,r1) x [c0,c1).

        Shape (rows, cols, 2), values 0..3 plus MISSING_CODE. Only the
        requested window is unpacked from the plane.
        """
        self._check_window(r0, r1, c0, c1)
        rows, cols = r1 - r0, c1 - c0
        out = np.empty((rows, cols, 2), dtype=np.uint8)
        for i in range(rows):
            out[i] = self.row_codes(r0 + i, c0, c1)
        return out

    def window(self, r0: int, r1: int, c0: int, c1: int) -> list[list[Genotype]]:
        """Dense Genotype grid for the window; empty ranges yield empty grids."""
        codes = self.window_codes(r0, r1, c0, c1)
        lut: list[Optional[str]] = [*BASES, None]
        return [
            [Genotype(lut[int(p)], lut[int(m)]) for p, m in row]
            for row in codes
        ]


class MatrixBuilder:
    """Single-writer, append-by-variant builder for PackedHaplotypeMatrix.

    Variants are staged variant-major (nibble stream, cell = variant *
    n_subjects + subject) so appends touch contiguous bytes; seal() performs
    one subject-major transpose into the final plane. Peak memory stays at
    roughly twice the packed size.
    """

    _FLUSH_VARIANTS = 256

    def __init__(self, n_subjects: int, phased: bool):
        self.n_subjects = n_subjects
        self.phased = phased
        self.n_variants = 0
        self._pending: list[np.ndarray] = []        # code nibbles per variant
        self._pending_miss: list[np.ndarray] = []   # missing nibbles per variant
        self._nibbles = np.zeros(1024, dtype=np.uint8)
        self._nib_len = 0                            # nibbles used
        self._miss_nibbles: Optional[np.ndarray] = None
        self._any_missing = False
        self._sealed = False

    def append_variant(self, paternal: Sequence[int] | np.ndarray,
                       maternal: Sequence[int] | np.ndarray) -> None:
        """Append one variant column pair; codes 0..3, MISSING_CODE for absent."""
        if self._sealed:
            raise RuntimeError("builder already sealed")
        pat = np.asarray(paternal, dtype=np.uint8)
        mat = np.asarray(maternal, dtype=np.uint8)
        if pat.shape != (self.n_subjects,) or mat.shape != (self.n_subjects,):
            raise ValueError(f"expected {self.n_subjects} alleles per column")
        if pat.size and (pat.max() > MISSING_CODE or mat.max() > MISSING_CODE):
            raise InvalidBase("allele code above MISSING_CODE")
        # MISSING_CODE & 0x3 == 0: flagged alleles store code 0, as required.
        self._pending.append((pat & 0x3) | ((mat & 0x3) << 2))
        miss = (pat == MISSING_CODE).astype(np.uint8) | \
               ((mat == MISSING_CODE).astype(np.uint8) << 1)
        self._pending_miss.append(miss)
        if miss.any():
            self._any_missing = True
        self.n_variants += 1
        if len(self._pending) >= self._FLUSH_VARIANTS:
            self._flush()

    def _ensure_capacity(self, buf: np.ndarray, nibbles_needed: int) -> np.ndarray:
        bytes_needed = (nibbles_needed + 1) // 2
        if bytes_needed <= len(buf):
            return buf
        new = np.zeros(max(bytes_needed, 2 * len(buf)), dtype=np.uint8)
        new[:len(buf)] = buf
        return new

    def _flush(self) -> None:
        if not self._pending:
            return
        vals = np.concatenate(self._pending)
        self._nibbles = self._ensure_capacity(self._nibbles, self._nib_len + len(vals))
        _write_nibbles(self._nibbles, self._nib_len, vals)
        if self._any_missing and self._miss_nibbles is None:
            # Lazily allocate and zero-backfill variants flushed before the
            # first missing allele appeared.
            self._miss_nibbles = np.zeros(len(self._nibbles), dtype=np.uint8)
        if self._miss_nibbles is not None:
            miss_vals = np.concatenate(self._pending_miss)
            self._miss_nibbles = self._ensure_capacity(
                self._miss_nibbles, self._nib_len + len(miss_vals))
            _write_nibbles(self._miss_nibbles, self._nib_len, miss_vals)
        self._nib_len += len(vals)
        self._pending.clear()
        self._pending_miss.clear()

    def seal(self) -> PackedHaplotypeMatrix:
        """Transpose staging into the subject-major plane and freeze it."""
        if self._sealed:
            raise RuntimeError("builder already sealed")
        self._flush()
        self._sealed = True
        ns, nv = self.n_subjects, self.n_variants
        plane = np.zeros((ns * nv + 1) // 2, dtype=np.uint8)
        missing = None
        if self._any_missing:
            missing = np.zeros((2 * ns * nv + 7) // 8, dtype=np.uint8)
        if nv and ns:
            src_idx = np.arange(nv, dtype=np.int64) * ns
            for s in range(ns):
                ni = src_idx + s
                chunk = self._nibbles[ni >> 1]
                nib = np.where(ni & 1, chunk >> 4, chunk & 0x0F).astype(np.uint8)
                _write_nibbles(plane, s * nv, nib)
                if missing is not None:
                    mchunk = self._miss_nibbles[ni >> 1]
                    mnib = np.where(ni & 1, mchunk >> 4, mchunk & 0x0F)
                    bits = np.empty(2 * nv, dtype=np.uint8)
                    bits[0::2] = mnib & 1
                    bits[1::2] = (mnib >> 1) & 1
                    _write_bits(missing, 2 * s * nv, bits)
        self._nibbles = np.empty(0, dtype=np.uint8)
        self._miss_nibbles = None
        return PackedHaplotypeMatrix(ns, nv, self.phased, plane, missing)


def build_matrix(codes: np.ndarray, phased: bool) -> PackedHaplotypeMatrix:
    """Pack a dense (n_subjects, n_variants, 2) code array. Test/tool helper."""
    codes = np.asarray(codes, dtype=np.uint8)
    ns, nv = codes.shape[0], codes.shape[1]
    builder = MatrixBuilder(ns, phased)
    for v in range(nv):
        builder.append_variant(codes[:, v, 0], codes[:, v, 1])
    return builder.seal()
