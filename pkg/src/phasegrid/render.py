"""Color encodings and rasterization of derived views to PNG and SVG.

Three encodings: NUCLEOTIDE gives each base its own color, REFERENCE paints
match/difference against the reference base, GENOTYPE classifies each
variant cell as homozygous-alt / heterozygous / homozygous-ref. The first
two paint one cell per allele column; GENOTYPE collapses a variant's pair
into a single display column.

Aggregated cells carry a consensus frequency shown either as color
saturation (HSV S scaled by frequency) or as a bottom-anchored bar of
height round(frequency * cell height), ties rounding up.

Defaults follow ColorBrewer Set1 hues: A green, C blue, T red, G yellow,
missing white; reference match blue / difference yellow; genotype red,
yellow, green; selection black.
"""

from __future__ import annotations

import colorsys
import enum
import io
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from PIL import Image

from .dataset import Dataset
from .errors import EmptyRender, InvalidFormat, UnknownReference
from .store import BASE_TO_CODE, MISSING_CODE
from .transform import AggregatedCell, DerivedView, cells_for_columns

RGB = tuple[int, int, int]


def hex_to_rgb(value: str) -> RGB:
    value = value.lstrip("#")
    return (int(value[0:2], 16), int(value[2:4], 16), int(value[4:6], 16))


def rgb_to_hex(rgb: RGB) -> str:
    return "#{:02X}{:02X}{:02X}".format(*rgb)


class Encoding(enum.Enum):
    NUCLEOTIDE = "NUCLEOTIDE"
    REFERENCE = "REFERENCE"
    GENOTYPE = "GENOTYPE"


class AggStyle(enum.Enum):
    SATURATION = "SATURATION"
    BAR = "BAR"


class ColorRole(enum.IntEnum):
    """Every paintable role; order is the deterministic tie-break for the
    overview's modal bucketing."""

    BASE_A = 0
    BASE_C = 1
    BASE_G = 2
    BASE_T = 3
    MISSING = 4
    REF_MATCH = 5
    REF_DIFF = 6
    HOM_ALT = 7
    HET = 8
    HOM_REF = 9
    SELECTION = 10


_GREEN = hex_to_rgb("#4DAF4A")
_BLUE = hex_to_rgb("#377EB8")
_RED = hex_to_rgb("#E41A1C")
_YELLOW = hex_to_rgb("#FFFF33")


@dataclass(frozen=True)
class ColorScheme:
    """All eight color roles; defaults per the fixed palette, all overridable."""

    base_colors: dict = field(default_factory=lambda: {
        "A": _GREEN, "C": _BLUE, "G": _YELLOW, "T": _RED})
    missing: RGB = (255, 255, 255)
    ref_match: RGB = _BLUE
    ref_diff: RGB = _YELLOW
    hom_alt: RGB = _RED
    het: RGB = _YELLOW
    hom_ref: RGB = _GREEN
    selection: RGB = (0, 0, 0)

    def role_color(self, role: ColorRole) -> RGB:
        if role <= ColorRole.BASE_T:
            return self.base_colors["ACGT"[int(role)]]
        return {
            ColorRole.MISSING: self.missing,
            ColorRole.REF_MATCH: self.ref_match,
            ColorRole.REF_DIFF: self.ref_diff,
            ColorRole.HOM_ALT: self.hom_alt,
            ColorRole.HET: self.het,
            ColorRole.HOM_REF: self.hom_ref,
            ColorRole.SELECTION: self.selection,
        }[role]

    def with_overrides(self, overrides: dict[str, str]) -> "ColorScheme":
        """Override colors by role name ("A", "missing", "het", ...) -> hex."""
        bases = dict(self.base_colors)
        kwargs = {}
        for key, value in overrides.items():
            rgb = hex_to_rgb(value)
            if key.upper() in bases:
                bases[key.upper()] = rgb
            else:
                kwargs[key.lower()] = rgb
        return replace(self, base_colors=bases, **kwargs)


@dataclass(frozen=True)
class RenderOptions:
    encoding: Encoding = Encoding.NUCLEOTIDE
    agg_style: AggStyle = AggStyle.SATURATION
    cell_width: int = 8
    cell_height: int = 8
    show_grid: bool = False
    scheme: ColorScheme = field(default_factory=ColorScheme)

    def __post_init__(self):
        if self.cell_width < 1 or self.cell_height < 1:
            raise ValueError("cell size must be at least 1 px")


_GRID_RGB = (200, 200, 200)
_GRID_MIN_CELL = 3


def round_half_up(x: float) -> int:
    return int(x + 0.5)


def saturate(rgb: RGB, frequency: float) -> RGB:
    """Scale HSV saturation by frequency, keeping hue and value."""
    f = min(max(frequency, 0.0), 1.0)
    h, s, v = colorsys.rgb_to_hsv(rgb[0] / 255, rgb[1] / 255, rgb[2] / 255)
    r, g, b = colorsys.hsv_to_rgb(h, s * f, v)
    return (round_half_up(r * 255), round_half_up(g * 255), round_half_up(b * 255))


def _ref_code(ds: Dataset, variant: int) -> int:
    ref = ds.variants.refs[variant]
    if ref is None:
        raise UnknownReference(
            f"variant {ds.variants.ids[variant]!r} has no reference base")
    return BASE_TO_CODE[ref]


def _allele_role(enc: Encoding, code: int, ref_code: Optional[int]) -> ColorRole:
    if code == MISSING_CODE:
        return ColorRole.MISSING
    if enc is Encoding.NUCLEOTIDE:
        return ColorRole(int(code))
    return ColorRole.REF_DIFF if code != ref_code else ColorRole.REF_MATCH


def _genotype_role(a: int, b: int, ref_code: int) -> ColorRole:
    present = [c for c in (a, b) if c != MISSING_CODE]
    if not present:
        return ColorRole.MISSING
    diffs = sum(1 for c in present if c != ref_code)
    if len(present) == 1:
        # hemizygous: classify by the present allele alone
        return ColorRole.HOM_ALT if diffs else ColorRole.HOM_REF
    if diffs == 2:
        return ColorRole.HOM_ALT
    if diffs == 1:
        return ColorRole.HET
    return ColorRole.HOM_REF


def encode_cell(enc: Encoding, cell, ref: Optional[str] = None):
    """Map one cell to (ColorRole, intensity).

    For NUCLEOTIDE/REFERENCE the cell is one allele: a code int or an
    AggregatedCell. For GENOTYPE it is the (paternal, maternal) pair of
    either. Intensity is the consensus frequency for aggregated cells and
    1.0 otherwise; REFERENCE and GENOTYPE require a known reference base.
    """
    ref_code: Optional[int] = None
    if enc is not Encoding.NUCLEOTIDE:
        if ref is None:
            raise UnknownReference(f"{enc.value} encoding requires a reference base")
        ref_code = BASE_TO_CODE[ref]
    if enc is Encoding.GENOTYPE:
        a, b = cell
        fa = a.frequency if isinstance(a, AggregatedCell) else 1.0
        fb = b.frequency if isinstance(b, AggregatedCell) else 1.0
        ca = a.code if isinstance(a, AggregatedCell) else int(a)
        cb = b.code if isinstance(b, AggregatedCell) else int(b)
        role = _genotype_role(ca, cb, ref_code)
        present = [(c, f) for c, f in ((ca, fa), (cb, fb)) if c != MISSING_CODE]
        if not present:
            return role, 0.0
        return role, sum(f for _, f in present) / len(present)
    if isinstance(cell, AggregatedCell):
        return _allele_role(enc, cell.code, ref_code), cell.frequency
    code = int(cell)
    role = _allele_role(enc, code, ref_code)
    return role, 0.0 if code == MISSING_CODE else 1.0


def _display_columns(view: DerivedView, enc: Encoding) -> list:
    """Display column descriptors: allele columns, or variant pairs for
    GENOTYPE (one display column per variant)."""
    if enc is Encoding.GENOTYPE:
        return view.variant_order()
    return list(view.cols)


def display_dims(view: DerivedView, enc: Encoding) -> tuple[int, int]:
    return view.n_rows, len(_display_columns(view, enc))


def _window_roles(view: DerivedView, enc: Encoding, r0: int, r1: int,
                  c0: int, c1: int):
    """(roles, freqs) arrays for a display window; freqs None on plain views."""
    cols = _display_columns(view, enc)[c0:c1]
    n_r, n_c = r1 - r0, c1 - c0
    roles = np.empty((n_r, n_c), dtype=np.uint8)
    ds = view.dataset
    if enc is Encoding.GENOTYPE:
        pair_cols = [(v, slot) for v in cols for slot in (0, 1)]
        codes, freqs = cells_for_columns(view, r0, r1, pair_cols)
        refs = np.array([_ref_code(ds, v) for v in cols], dtype=np.int64) \
            if n_c else np.empty(0, dtype=np.int64)
        out_freqs = np.zeros((n_r, n_c)) if freqs is not None else None
        for i in range(n_r):
            for j in range(n_c):
                a, b = int(codes[i, 2 * j]), int(codes[i, 2 * j + 1])
                roles[i, j] = _genotype_role(a, b, int(refs[j]))
                if out_freqs is not None:
                    fs = [freqs[i, 2 * j + k] for k in (0, 1)
                          if int(codes[i, 2 * j + k]) != MISSING_CODE]
                    out_freqs[i, j] = sum(fs) / len(fs) if fs else 0.0
        return roles, out_freqs
    codes, freqs = cells_for_columns(view, r0, r1, cols)
    if enc is Encoding.NUCLEOTIDE:
        roles[:] = codes  # codes 0..4 coincide with the first five roles
    else:
        refs = np.array([_ref_code(ds, v) for v, _ in cols], dtype=np.uint8) \
            if n_c else np.empty(0, dtype=np.uint8)
        roles[:] = np.where(codes == MISSING_CODE, np.uint8(ColorRole.MISSING),
                            np.where(codes == refs[None, :], np.uint8(ColorRole.REF_MATCH),
                                     np.uint8(ColorRole.REF_DIFF)))
    return roles, freqs


def _check_window(view: DerivedView, enc: Encoding, rows, cols) -> tuple[int, int, int, int]:
    n_rows, n_cols = display_dims(view, enc)
    r0, r1 = rows
    c0, c1 = cols
    if not (0 <= r0 <= r1 <= n_rows and 0 <= c0 <= c1 <= n_cols):
        raise EmptyRender(f"window outside view {n_rows}x{n_cols}")
    if r1 - r0 == 0 or c1 - c0 == 0:
        raise EmptyRender("zero-dimension render window")
    return r0, r1, c0, c1


def render_view(view: DerivedView, opts: RenderOptions, rows: tuple[int, int],
                cols: tuple[int, int], selected_rows: Sequence[int] = (),
                selected_cols: Sequence[int] = ()) -> np.ndarray:
    """Rasterize a display window to an RGB pixel array.

    rows/cols are half-open display ranges: allele columns under
    NUCLEOTIDE/REFERENCE, variants under GENOTYPE. Selected display rows and
    columns are outlined in the selection color. The result has exactly
    (cols * cell_width, rows * cell_height) pixels.
    """
    r0, r1, c0, c1 = _check_window(view, opts.encoding, rows, cols)
    roles, freqs = _window_roles(view, opts.encoding, r0, r1, c0, c1)
    cw, ch = opts.cell_width, opts.cell_height
    n_r, n_c = r1 - r0, c1 - c0
    scheme = opts.scheme
    out = np.empty((n_r * ch, n_c * cw, 3), dtype=np.uint8)
    for i in range(n_r):
        for j in range(n_c):
            role = ColorRole(int(roles[i, j]))
            color = scheme.role_color(role)
            y, x = i * ch, j * cw
            if freqs is None:
                out[y:y + ch, x:x + cw] = color
            elif opts.agg_style is AggStyle.SATURATION:
                out[y:y + ch, x:x + cw] = saturate(color, float(freqs[i, j]))
            else:
                bar = round_half_up(float(freqs[i, j]) * ch)
                out[y:y + ch, x:x + cw] = scheme.missing
                if bar > 0:
                    out[y + ch - bar:y + ch, x:x + cw] = color
    if opts.show_grid and cw >= _GRID_MIN_CELL and ch >= _GRID_MIN_CELL:
        for j in range(1, n_c):
            out[:, j * cw - 1] = _GRID_RGB
        for i in range(1, n_r):
            out[i * ch - 1, :] = _GRID_RGB
    sel = scheme.selection
    for r in selected_rows:
        if r0 <= r < r1:
            y = (r - r0) * ch
            out[y, :] = sel
            out[y + ch - 1, :] = sel
            out[y:y + ch, 0] = sel
            out[y:y + ch, -1] = sel
    for c in selected_cols:
        if c0 <= c < c1:
            x = (c - c0) * cw
            out[:, x] = sel
            out[:, x + cw - 1] = sel
            out[0, x:x + cw] = sel
            out[-1, x:x + cw] = sel
    return out


def render_overview(view: DerivedView, max_w: int, max_h: int,
                    opts: Optional[RenderOptions] = None) -> np.ndarray:
    """Zoomed-out image of the whole view, each pixel the modal role of the
    cells it covers; never upscales (1 cell : 1 pixel when it fits)."""
    opts = opts or RenderOptions()
    n_rows, n_cols = display_dims(view, opts.encoding)
    if n_rows == 0 or n_cols == 0 or max_w < 1 or max_h < 1:
        raise EmptyRender("overview of an empty view")
    scale = min(max_w / n_cols, max_h / n_rows, 1.0)
    out_w = max(1, int(n_cols * scale))
    out_h = max(1, int(n_rows * scale))
    roles, _ = _window_roles(view, opts.encoding, 0, n_rows, 0, n_cols)
    out = np.empty((out_h, out_w, 3), dtype=np.uint8)
    scheme = opts.scheme
    for i in range(out_h):
        y0, y1 = (i * n_rows) // out_h, ((i + 1) * n_rows) // out_h
        y1 = max(y1, y0 + 1)
        for j in range(out_w):
            x0, x1 = (j * n_cols) // out_w, ((j + 1) * n_cols) // out_w
            x1 = max(x1, x0 + 1)
            bucket = roles[y0:y1, x0:x1]
            modal = np.bincount(bucket.reshape(-1), minlength=11).argmax()
            out[i, j] = scheme.role_color(ColorRole(int(modal)))
    return out


def to_png(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def _svg_rect(x: int, y: int, w: int, h: int, color: RGB, extra: str = "") -> str:
    return (f'<rect x="{x}" y="{y}" width="{w}" height="{h}" '
            f'fill="{rgb_to_hex(color)}"{extra}/>')


def render_svg(view: DerivedView, opts: RenderOptions, rows: tuple[int, int],
               cols: tuple[int, int], selected_rows: Sequence[int] = (),
               selected_cols: Sequence[int] = ()) -> str:
    """Vector form of render_view: one rect per cell plus one bar rect per
    aggregated BAR cell with non-zero height; grid as line elements and
    selection outlines as unfilled rects."""
    r0, r1, c0, c1 = _check_window(view, opts.encoding, rows, cols)
    roles, freqs = _window_roles(view, opts.encoding, r0, r1, c0, c1)
    cw, ch = opts.cell_width, opts.cell_height
    n_r, n_c = r1 - r0, c1 - c0
    width, height = n_c * cw, n_r * ch
    scheme = opts.scheme
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}" '
        f'shape-rendering="crispEdges">'
    ]
    for i in range(n_r):
        for j in range(n_c):
            role = ColorRole(int(roles[i, j]))
            color = scheme.role_color(role)
            x, y = j * cw, i * ch
            if freqs is None:
                parts.append(_svg_rect(x, y, cw, ch, color))
            elif opts.agg_style is AggStyle.SATURATION:
                parts.append(_svg_rect(x, y, cw, ch, saturate(color, float(freqs[i, j]))))
            else:
                parts.append(_svg_rect(x, y, cw, ch, scheme.missing))
                bar = round_half_up(float(freqs[i, j]) * ch)
                if bar > 0:
                    parts.append(_svg_rect(x, y + ch - bar, cw, bar, color))
    if opts.show_grid and cw >= _GRID_MIN_CELL and ch >= _GRID_MIN_CELL:
        stroke = rgb_to_hex(_GRID_RGB)
        for j in range(1, n_c):
            x = j * cw
            parts.append(f'<line x1="{x}" y1="0" x2="{x}" y2="{height}" '
                         f'stroke="{stroke}" stroke-width="1"/>')
        for i in range(1, n_r):
            y = i * ch
            parts.append(f'<line x1="0" y1="{y}" x2="{width}" y2="{y}" '
                         f'stroke="{stroke}" stroke-width="1"/>')
    sel = rgb_to_hex(scheme.selection)
    for r in selected_rows:
        if r0 <= r < r1:
            parts.append(f'<rect x="0" y="{(r - r0) * ch}" width="{width}" '
                         f'height="{ch}" fill="none" stroke="{sel}" stroke-width="2"/>')
    for c in selected_cols:
        if c0 <= c < c1:
            parts.append(f'<rect x="{(c - c0) * cw}" y="0" width="{cw}" '
                         f'height="{height}" fill="none" stroke="{sel}" stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def export_image(view: DerivedView, opts: RenderOptions, image_format: str,
                 region: str = "FULL",
                 window: Optional[tuple[int, int, int, int]] = None,
                 selected_rows: Sequence[int] = (),
                 selected_cols: Sequence[int] = ()) -> bytes:
    """Export the full view or a visible window as PNG or SVG bytes."""
    fmt = (image_format or "").upper()
    if fmt not in ("PNG", "SVG"):
        raise InvalidFormat(f"unsupported image format {image_format!r}")
    reg = (region or "FULL").upper()
    if reg == "FULL":
        n_rows, n_cols = display_dims(view, opts.encoding)
        rows, cols = (0, n_rows), (0, n_cols)
    elif reg == "VISIBLE":
        if window is None:
            raise EmptyRender("VISIBLE export needs a window")
        rows, cols = (window[0], window[1]), (window[2], window[3])
    else:
        raise InvalidFormat(f"unsupported export region {region!r}")
    if fmt == "PNG":
        return to_png(render_view(view, opts, rows, cols, selected_rows, selected_cols))
    return render_svg(view, opts, rows, cols, selected_rows, selected_cols).encode("utf-8")
