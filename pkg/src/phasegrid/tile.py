"""Binary tile wire format: rectangular windows of semantic cell codes.

Exact layout, all integers little-endian, header exactly 16 bytes:

    offset  size  field
    0       4     magic "IPHT"
    4       1     version (1)
    5       1     flags: bit0 = frequency bytes present, bit1 = phased
                  two-column layout
    6       3     rowStart  (u24)
    9       3     colStart  (u24)
    12      2     nRows     (u16)
    14      2     nCols     (u16)
    16      ...   codes: nRows*nCols bytes, row-major
                  (0=A, 1=C, 2=G, 3=T, 4=missing)
    ...     ...   freqs: nRows*nCols bytes, round(frequency*255) with ties
                  up, present iff flags bit0

Total size is 16 + nRows*nCols*(1 or 2) bytes exactly. Codes are per allele
column; the client pairs adjacent columns into genotype cells when the
phased flag is clear.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import TileFormatError

MAGIC = b"IPHT"
VERSION = 1
HEADER_SIZE = 16
FLAG_FREQS = 0x01
FLAG_PHASED = 0x02

_U24_MAX = (1 << 24) - 1
_U16_MAX = (1 << 16) - 1


def quantize_frequency(f: float) -> int:
    """round(f * 255) with half-up ties; clamped to [0, 255]."""
    return min(255, max(0, int(f * 255 + 0.5)))


@dataclass(frozen=True)
class Tile:
    row_start: int
    col_start: int
    codes: np.ndarray                 # (nRows, nCols) uint8, values <= 4
    freqs: Optional[np.ndarray]       # same shape uint8, or None
    phased: bool

    @property
    def n_rows(self) -> int:
        return self.codes.shape[0]

    @property
    def n_cols(self) -> int:
        return self.codes.shape[1]


def _u24(value: int) -> bytes:
    return value.to_bytes(3, "little")


def encode_tile(tile: Tile) -> bytes:
    """Serialize a tile; validates every field range."""
    n_rows, n_cols = tile.codes.shape
    if not (0 <= tile.row_start <= _U24_MAX and 0 <= tile.col_start <= _U24_MAX):
        raise TileFormatError("tile start offsets exceed 24 bits")
    if n_rows > _U16_MAX or n_cols > _U16_MAX:
        raise TileFormatError("tile dimensions exceed 16 bits")
    codes = np.ascontiguousarray(tile.codes, dtype=np.uint8)
    if codes.size and codes.max() > 4:
        raise TileFormatError("cell code above 4")
    flags = (FLAG_FREQS if tile.freqs is not None else 0) | \
            (FLAG_PHASED if tile.phased else 0)
    head = (MAGIC + bytes([VERSION, flags])
            + _u24(tile.row_start) + _u24(tile.col_start)
            + n_rows.to_bytes(2, "little") + n_cols.to_bytes(2, "little"))
    body = codes.tobytes()
    if tile.freqs is not None:
        freqs = np.ascontiguousarray(tile.freqs, dtype=np.uint8)
        if freqs.shape != codes.shape:
            raise TileFormatError("frequency plane shape mismatch")
        body += freqs.tobytes()
    return head + body


def decode_tile(buf: bytes) -> Tile:
    """Parse and validate a tile buffer; raises TileFormatError on any
    deviation from the layout (wrong magic/version, bad lengths, code > 4)."""
    if len(buf) < HEADER_SIZE:
        raise TileFormatError(f"buffer shorter than the {HEADER_SIZE}-byte header")
    if buf[0:4] != MAGIC:
        raise TileFormatError("bad magic")
    if buf[4] != VERSION:
        raise TileFormatError(f"unsupported version {buf[4]}")
    flags = buf[5]
    if flags & ~(FLAG_FREQS | FLAG_PHASED):
        raise TileFormatError(f"unknown flag bits 0x{flags:02X}")
    row_start = int.from_bytes(buf[6:9], "little")
    col_start = int.from_bytes(buf[9:12], "little")
    n_rows = int.from_bytes(buf[12:14], "little")
    n_cols = int.from_bytes(buf[14:16], "little")
    cells = n_rows * n_cols
    planes = 2 if flags & FLAG_FREQS else 1
    if len(buf) != HEADER_SIZE + cells * planes:
        raise TileFormatError(
            f"payload length {len(buf) - HEADER_SIZE} != {cells} cells x {planes}")
    codes = np.frombuffer(buf, dtype=np.uint8, count=cells,
                          offset=HEADER_SIZE).reshape(n_rows, n_cols).copy()
    if cells and codes.max() > 4:
        raise TileFormatError("cell code above 4")
    freqs = None
    if flags & FLAG_FREQS:
        freqs = np.frombuffer(buf, dtype=np.uint8, count=cells,
                              offset=HEADER_SIZE + cells).reshape(n_rows, n_cols).copy()
    return Tile(row_start=row_start, col_start=col_start, codes=codes,
                freqs=freqs, phased=bool(flags & FLAG_PHASED))
