#!/usr/bin/env python3
"""Generate frontend pixel-fidelity fixtures.

For each case this writes, into frontend/tests/fixtures/:
    <name>.tile  - binary tile of the full view window (exactly what the
                   service tile endpoint returns)
    <name>.png   - server-side export of the same window and options
    <name>.json  - paint parameters the client needs (dims, cell sizes,
                   encoding, style, per-column reference bases)

Aggregated cases use 3-member groups only: their consensus frequencies are
thirds, which survive the round(f*255) byte quantization exactly, so the
client's byte/255 arithmetic reproduces the server's float math bit for
bit and the PNG comparison can demand per-pixel equality.
"""

import json
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from helpers import make_ds  # noqa: E402

from phasegrid.render import AggStyle, Encoding, RenderOptions, export_image  # noqa: E402
from phasegrid.steps import AggregateRows  # noqa: E402
from phasegrid.tile import Tile, encode_tile  # noqa: E402
from phasegrid.transform import ViewChain, view_cells  # noqa: E402

OUT = ROOT / "frontend" / "tests" / "fixtures"


def crafted_plain():
    codes = np.zeros((4, 3, 2), dtype=np.uint8)
    codes[0, 0] = (0, 1)
    codes[1, 0] = (2, 3)
    codes[2, 0] = (4, 0)    # missing paternal
    codes[3, 0] = (1, 1)
    codes[:, 1, 0] = (0, 0, 1, 1)
    codes[:, 1, 1] = (3, 3, 3, 3)
    codes[:, 2, 0] = (2, 2, 2, 2)
    codes[:, 2, 1] = (4, 4, 4, 4)
    return ViewChain(make_ds(codes, refs=["C", "A", "G"])).derived


def crafted_aggregated():
    codes = np.zeros((6, 3, 2), dtype=np.uint8)
    codes[0:3, 0, 0] = (0, 0, 1)   # group 1 paternal: A,A,C -> A at 2/3
    codes[0:3, 0, 1] = (3, 3, 3)   # unanimous T
    codes[3:6, 0, 0] = (2, 1, 1)   # group 2: C at 2/3
    codes[3:6, 0, 1] = (0, 1, 2)   # three-way tie -> A at 1/3
    codes[0:3, 1, 0] = (1, 1, 1)
    codes[0:3, 1, 1] = (4, 4, 4)   # all missing -> freq 0
    codes[3:6, 1, 0] = (3, 3, 0)
    codes[3:6, 1, 1] = (2, 2, 2)
    codes[:, 2, 0] = (0, 1, 2, 3, 0, 1)
    codes[:, 2, 1] = (0, 0, 0, 2, 2, 2)
    groups = {f"S{i:03d}": ("g1" if i < 3 else "g2") for i in range(6)}
    ds = make_ds(codes, refs=["C", "A", "G"],
                 subject_meta={"m": [("G", "CATEGORICAL", groups)]})
    return ViewChain(ds).with_step(
        AggregateRows(grouping="G", allele_method="MAXIMUM")).derived


def write_case(name: str, view, encoding: Encoding, style: AggStyle,
               cell_w: int, cell_h: int, show_grid: bool = False) -> None:
    codes, freqs = view_cells(view, 0, view.n_rows, 0, view.n_cols)
    freq_bytes = None
    if freqs is not None:
        freq_bytes = np.minimum(255, (freqs * 255.0 + 0.5)).astype(np.uint8)
    tile = Tile(row_start=0, col_start=0, codes=codes, freqs=freq_bytes,
                phased=view.dataset.phased)
    (OUT / f"{name}.tile").write_bytes(encode_tile(tile))

    opts = RenderOptions(encoding=encoding, agg_style=style,
                         cell_width=cell_w, cell_height=cell_h,
                         show_grid=show_grid)
    (OUT / f"{name}.png").write_bytes(export_image(view, opts, "PNG", "FULL"))

    refs = [view.dataset.variants.refs[v] for v, _ in view.cols]
    spec = {
        "rows": view.n_rows,
        "acols": view.n_cols,
        "cellW": cell_w,
        "cellH": cell_h,
        "encoding": encoding.value,
        "style": style.value,
        "showGrid": show_grid,
        "refs": refs,
        "phased": view.dataset.phased,
        "aggregated": view.aggregated,
    }
    (OUT / f"{name}.json").write_text(json.dumps(spec, indent=2))
    print(f"wrote {name}: {view.n_rows}x{view.n_cols} allele cols, "
          f"{encoding.value}/{style.value}")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    plain = crafted_plain()
    agg = crafted_aggregated()
    write_case("nucleotide_plain", plain, Encoding.NUCLEOTIDE, AggStyle.SATURATION, 5, 5)
    write_case("nucleotide_grid", plain, Encoding.NUCLEOTIDE, AggStyle.SATURATION, 6, 4,
               show_grid=True)
    write_case("reference_plain", plain, Encoding.REFERENCE, AggStyle.SATURATION, 4, 6)
    write_case("genotype_plain", plain, Encoding.GENOTYPE, AggStyle.SATURATION, 7, 5)
    write_case("agg_saturation", agg, Encoding.NUCLEOTIDE, AggStyle.SATURATION, 5, 8)
    write_case("agg_bar", agg, Encoding.NUCLEOTIDE, AggStyle.BAR, 4, 9)


if __name__ == "__main__":
    main()
