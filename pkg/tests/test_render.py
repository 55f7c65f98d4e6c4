"""Color rules, rasterization, overview bucketing, PNG/SVG export."""

import colorsys
import io
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from phasegrid.errors import EmptyRender, InvalidFormat, UnknownReference
from phasegrid.render import (
    AggStyle,
    ColorRole,
    ColorScheme,
    Encoding,
    RenderOptions,
    encode_cell,
    export_image,
    hex_to_rgb,
    render_overview,
    render_svg,
    render_view,
    round_half_up,
    saturate,
    to_png,
)
from phasegrid.steps import AggregateRows
from phasegrid.store import MISSING_CODE
from phasegrid.transform import AggregatedCell, ViewChain

from helpers import make_ds

GREEN = hex_to_rgb("#4DAF4A")
BLUE = hex_to_rgb("#377EB8")
RED = hex_to_rgb("#E41A1C")
YELLOW = hex_to_rgb("#FFFF33")
WHITE = (255, 255, 255)
BLACK = (0, 0, 0)

GOLDEN_DIR = Path(__file__).parent / "fixtures" / "golden"


def one_cell_view(code_pair, *, ref="C", phased=True):
    codes = np.zeros((1, 1, 2), dtype=np.uint8)
    codes[0, 0] = code_pair
    return ViewChain(make_ds(codes, refs=[ref], phased=phased)).derived


def px(pixels, y=0, x=0):
    return tuple(int(v) for v in pixels[y, x])


class TestDefaultPalette:
    def test_nucleotide_base_colors(self):
        want = {0: GREEN, 1: BLUE, 2: YELLOW, 3: RED, MISSING_CODE: WHITE}
        for code, color in want.items():
            view = one_cell_view((code, code))
            img = render_view(view, RenderOptions(), (0, 1), (0, 1))
            assert px(img, 2, 2) == color

    def test_reference_match_and_diff(self):
        opts = RenderOptions(encoding=Encoding.REFERENCE)
        match = render_view(one_cell_view((1, 1), ref="C"), opts, (0, 1), (0, 2))
        assert px(match) == BLUE
        diff = render_view(one_cell_view((2, 2), ref="C"), opts, (0, 1), (0, 2))
        assert px(diff) == YELLOW

    def test_genotype_classes(self):
        opts = RenderOptions(encoding=Encoding.GENOTYPE)
        hom_alt = render_view(one_cell_view((2, 2), ref="C"), opts, (0, 1), (0, 1))
        assert px(hom_alt) == RED
        het = render_view(one_cell_view((1, 2), ref="C"), opts, (0, 1), (0, 1))
        assert px(het) == YELLOW
        hom_ref = render_view(one_cell_view((1, 1), ref="C"), opts, (0, 1), (0, 1))
        assert px(hom_ref) == GREEN

    def test_selection_outline_black(self):
        view = one_cell_view((0, 0))
        img = render_view(view, RenderOptions(), (0, 1), (0, 2),
                          selected_rows=[0])
        assert px(img, 0, 0) == BLACK       # outline
        assert px(img, 4, 4) == GREEN       # interior untouched

    def test_every_color_overridable(self):
        scheme = ColorScheme().with_overrides({
            "A": "#102030", "missing": "#040506", "het": "#0A0B0C",
            "selection": "#112233"})
        assert scheme.role_color(ColorRole.BASE_A) == (0x10, 0x20, 0x30)
        assert scheme.role_color(ColorRole.MISSING) == (4, 5, 6)
        assert scheme.role_color(ColorRole.HET) == (10, 11, 12)
        assert scheme.role_color(ColorRole.SELECTION) == (0x11, 0x22, 0x33)


class TestEncodeCell:
    def test_nucleotide_a_is_green_role(self):
        role, intensity = encode_cell(Encoding.NUCLEOTIDE, 0)
        assert role is ColorRole.BASE_A and intensity == 1.0

    def test_genotype_het_example(self):
        # ref C, genotype (C,G): exactly one non-reference allele
        role, _ = encode_cell(Encoding.GENOTYPE, (1, 2), ref="C")
        assert role is ColorRole.HET

    def test_aggregated_full_intensity(self):
        role, intensity = encode_cell(Encoding.NUCLEOTIDE, AggregatedCell(0, 1.0))
        assert role is ColorRole.BASE_A and intensity == 1.0

    def test_missing_allele(self):
        role, intensity = encode_cell(Encoding.NUCLEOTIDE, MISSING_CODE)
        assert role is ColorRole.MISSING and intensity == 0.0

    def test_reference_requires_ref(self):
        with pytest.raises(UnknownReference):
            encode_cell(Encoding.REFERENCE, 0)
        with pytest.raises(UnknownReference):
            encode_cell(Encoding.GENOTYPE, (0, 0))

    def test_hemizygous_classified_by_present_allele(self):
        role, _ = encode_cell(Encoding.GENOTYPE, (2, MISSING_CODE), ref="C")
        assert role is ColorRole.HOM_ALT
        role, _ = encode_cell(Encoding.GENOTYPE, (1, MISSING_CODE), ref="C")
        assert role is ColorRole.HOM_REF


def aggregated_view(freq_third=True):
    """One AGN row of 3 subjects; paternal column consensus A at 2/3."""
    codes = np.zeros((3, 1, 2), dtype=np.uint8)
    codes[:, 0, 0] = (0, 0, 1)
    codes[:, 0, 1] = (0, 0, 0)
    ds = make_ds(codes, subject_meta={"m": [("G", "CATEGORICAL",
                                             {f"S{i:03d}": "g" for i in range(3)})]})
    return ViewChain(ds).with_step(AggregateRows(grouping="G")).derived


class TestAggStyles:
    @pytest.mark.parametrize("f,cell_h,want", [
        (0.0, 10, 0), (1 / 3, 10, 3), (0.5, 10, 5), (2 / 3, 10, 7), (1.0, 10, 10),
        (0.5, 5, 3),   # 2.5 rounds up
        (0.5, 3, 2),   # 1.5 rounds up
    ])
    def test_bar_height_rounding(self, f, cell_h, want):
        assert round_half_up(f * cell_h) == want

    def test_bar_cell_paints_exact_height(self):
        view = aggregated_view()
        opts = RenderOptions(agg_style=AggStyle.BAR, cell_width=4, cell_height=9)
        img = render_view(view, opts, (0, 1), (0, 1))
        col = [tuple(int(v) for v in img[y, 0]) for y in range(9)]
        bar = round_half_up(2 / 3 * 9)  # = 6
        assert col[:9 - bar] == [WHITE] * 3
        assert col[9 - bar:] == [GREEN] * 6

    def test_saturation_scales_hsv_s(self):
        view = aggregated_view()
        opts = RenderOptions(agg_style=AggStyle.SATURATION, cell_width=2, cell_height=2)
        img = render_view(view, opts, (0, 1), (0, 1))
        assert px(img) == saturate(GREEN, 2 / 3)
        h0, s0, _ = colorsys.rgb_to_hsv(*[c / 255 for c in GREEN])
        h1, s1, _ = colorsys.rgb_to_hsv(*[c / 255 for c in px(img)])
        assert s1 == pytest.approx(s0 * 2 / 3, abs=0.01)
        assert h1 == pytest.approx(h0, abs=0.02)

    def test_saturation_monotone_in_frequency(self):
        sats = []
        for f in np.linspace(0, 1, 21):
            rgb = saturate(RED, float(f))
            sats.append(colorsys.rgb_to_hsv(*[c / 255 for c in rgb])[1])
        assert all(b >= a - 1e-9 for a, b in zip(sats, sats[1:]))

    def test_bar_height_nondecreasing_step(self):
        heights = [round_half_up(f * 7) for f in np.linspace(0, 1, 50)]
        assert heights == sorted(heights)

    def test_unanimous_cell_solid_under_both_styles(self):
        codes = np.zeros((2, 1, 2), dtype=np.uint8)
        ds = make_ds(codes, subject_meta={"m": [("G", "CATEGORICAL",
                                                 {"S000": "g", "S001": "g"})]})
        view = ViewChain(ds).with_step(AggregateRows(grouping="G")).derived
        for style in AggStyle:
            opts = RenderOptions(agg_style=style, cell_width=3, cell_height=3)
            img = render_view(view, opts, (0, 1), (0, 2))
            assert (img == np.array(GREEN, dtype=np.uint8)).all()


class TestRenderView:
    def test_dimensions_exact(self):
        view = ViewChain(make_ds(np.zeros((3, 5, 2), dtype=np.uint8))).derived
        opts = RenderOptions(cell_width=7, cell_height=4)
        img = render_view(view, opts, (0, 3), (0, 10))
        assert img.shape == (3 * 4, 10 * 7, 3)

    def test_genotype_one_column_per_variant(self):
        view = ViewChain(make_ds(np.zeros((2, 5, 2), dtype=np.uint8))).derived
        opts = RenderOptions(encoding=Encoding.GENOTYPE, cell_width=3, cell_height=3)
        img = render_view(view, opts, (0, 2), (0, 5))
        assert img.shape == (6, 15, 3)

    def test_purity_byte_identical(self):
        view = aggregated_view()
        opts = RenderOptions(agg_style=AggStyle.BAR, cell_width=5, cell_height=5)
        a = to_png(render_view(view, opts, (0, 1), (0, 2)))
        b = to_png(render_view(view, opts, (0, 1), (0, 2)))
        assert a == b

    def test_zero_dimension_window(self):
        view = ViewChain(make_ds(np.zeros((2, 2, 2), dtype=np.uint8))).derived
        with pytest.raises(EmptyRender):
            render_view(view, RenderOptions(), (0, 0), (0, 4))

    def test_grid_lines_only_at_3px_or_more(self):
        view = ViewChain(make_ds(np.zeros((2, 2, 2), dtype=np.uint8))).derived
        big = render_view(view, RenderOptions(cell_width=4, cell_height=4,
                                              show_grid=True), (0, 2), (0, 4))
        assert px(big, 0, 3) == (200, 200, 200)
        tiny = render_view(view, RenderOptions(cell_width=2, cell_height=2,
                                               show_grid=True), (0, 2), (0, 4))
        assert (200, 200, 200) not in {px(tiny, y, x) for y in range(4) for x in range(8)}


class TestOverview:
    def test_one_to_one_when_small(self):
        view = ViewChain(make_ds(np.zeros((4, 3, 2), dtype=np.uint8))).derived
        img = render_overview(view, 100, 100)
        assert img.shape == (4, 6, 3)
        assert px(img) == GREEN

    def test_uniform_view_uniform_image(self):
        codes = np.full((8, 8, 2), 3, dtype=np.uint8)
        view = ViewChain(make_ds(codes)).derived
        img = render_overview(view, 4, 4)
        assert (img == np.array(RED, dtype=np.uint8)).all()

    def test_modal_bucket_three_green_one_red(self):
        codes = np.zeros((2, 1, 2), dtype=np.uint8)
        codes[1, 0, 1] = 3  # one T among three A alleles
        view = ViewChain(make_ds(codes)).derived
        img = render_overview(view, 1, 1)
        assert img.shape == (1, 1, 3)
        assert px(img) == GREEN

    def test_empty_view_raises(self):
        view = ViewChain(make_ds(np.zeros((0, 0, 2), dtype=np.uint8).reshape(0, 0, 2))).derived
        with pytest.raises(EmptyRender):
            render_overview(view, 10, 10)

    def test_aspect_preserved(self):
        view = ViewChain(make_ds(np.zeros((10, 20, 2), dtype=np.uint8))).derived
        img = render_overview(view, 20, 20)  # 40 cols x 10 rows, scale 0.5
        assert img.shape == (5, 20, 3)


class TestExport:
    def test_png_matches_render_view(self):
        view = aggregated_view()
        opts = RenderOptions(agg_style=AggStyle.BAR, cell_width=4, cell_height=4)
        data = export_image(view, opts, "PNG", "FULL")
        decoded = np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))
        assert np.array_equal(decoded, render_view(view, opts, (0, 1), (0, 2)))

    def test_svg_rect_count_cells_plus_bars(self):
        codes = np.zeros((3, 2, 2), dtype=np.uint8)
        codes[:, 0, 0] = (0, 0, 1)
        codes[0, 1, :] = MISSING_CODE
        codes[1, 1, :] = MISSING_CODE
        codes[2, 1, :] = MISSING_CODE
        ds = make_ds(codes, subject_meta={"m": [("G", "CATEGORICAL",
                                                 {f"S{i:03d}": "g" for i in range(3)})]})
        view = ViewChain(ds).with_step(AggregateRows(grouping="G")).derived
        opts = RenderOptions(agg_style=AggStyle.BAR, cell_width=6, cell_height=6)
        svg = export_image(view, opts, "SVG", "FULL").decode()
        cells = view.n_rows * view.n_cols
        # bars only where the consensus has non-zero height: cols of variant 1
        # are all-missing (freq 0), so 2 of 4 cells carry bars
        filled = svg.count('<rect') - svg.count('fill="none"')
        assert cells == 4
        assert filled == cells + 2

    def test_full_export_covers_filtered_view_only(self):
        from phasegrid.steps import FilterIds
        ds = make_ds(np.zeros((2, 6, 2), dtype=np.uint8))
        view = ViewChain(ds).with_step(FilterIds(("rs00002",))).derived
        opts = RenderOptions(cell_width=1, cell_height=1)
        img = export_image(view, opts, "PNG", "FULL")
        decoded = Image.open(io.BytesIO(img))
        assert decoded.size == (2, 2)  # one variant = two allele columns

    def test_visible_region_matches_window(self):
        view = ViewChain(make_ds(np.zeros((4, 4, 2), dtype=np.uint8))).derived
        opts = RenderOptions(cell_width=2, cell_height=2)
        data = export_image(view, opts, "PNG", "VISIBLE", window=(1, 3, 2, 6))
        decoded = np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))
        assert np.array_equal(decoded, render_view(view, opts, (1, 3), (2, 6)))

    def test_unsupported_format(self):
        view = one_cell_view((0, 0))
        with pytest.raises(InvalidFormat):
            export_image(view, RenderOptions(), "JPEG", "FULL")
        with pytest.raises(InvalidFormat):
            export_image(view, RenderOptions(), "PNG", "SIDEWAYS")


def crafted_golden_view():
    """4 subjects x 3 variants with every role exercised, deterministic."""
    codes = np.zeros((4, 3, 2), dtype=np.uint8)
    codes[0, 0] = (0, 1)
    codes[1, 0] = (2, 3)
    codes[2, 0] = (MISSING_CODE, 0)
    codes[3, 0] = (1, 1)
    codes[:, 1, 0] = (0, 0, 1, 1)
    codes[:, 1, 1] = (3, 3, 3, 3)
    codes[:, 2, 0] = (2, 2, 2, 2)
    codes[:, 2, 1] = (MISSING_CODE,) * 4
    return ViewChain(make_ds(codes, refs=["C", "A", "G"])).derived


def test_golden_image_byte_stable():
    view = crafted_golden_view()
    opts = RenderOptions(cell_width=5, cell_height=5, show_grid=True)
    data = export_image(view, opts, "PNG", "FULL")
    golden = GOLDEN_DIR / "nucleotide_4x6.png"
    if not golden.exists():
        GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
        golden.write_bytes(data)
    assert data == golden.read_bytes()
    # spot-check the frozen bytes against the encoding rules
    img = np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))
    assert tuple(img[2, 2]) == GREEN     # (0,0) paternal A
    assert tuple(img[2, 7]) == BLUE      # (0,0) maternal C
    assert tuple(img[12, 2]) == WHITE    # (2,0) missing paternal
