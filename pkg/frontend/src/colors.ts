/**
 * Color roles and encoding rules, mirroring the server's renderer exactly
 * so locally painted cells are pixel-identical to server exports.
 */

export type RGB = [number, number, number];

export enum Encoding {
    NUCLEOTIDE = "NUCLEOTIDE",
    REFERENCE = "REFERENCE",
    GENOTYPE = "GENOTYPE",
}

export enum AggStyle {
    SATURATION = "SATURATION",
    BAR = "BAR",
}

/** Order matters: tile codes 0..4 coincide with the first five roles. */
export enum ColorRole {
    BASE_A = 0,
    BASE_C = 1,
    BASE_G = 2,
    BASE_T = 3,
    MISSING = 4,
    REF_MATCH = 5,
    REF_DIFF = 6,
    HOM_ALT = 7,
    HET = 8,
    HOM_REF = 9,
    SELECTION = 10,
}

export const MISSING_CODE = 4;

export function hexToRgb(hex: string): RGB {
    const h = hex.replace("#", "");
    return [
        parseInt(h.slice(0, 2), 16),
        parseInt(h.slice(2, 4), 16),
        parseInt(h.slice(4, 6), 16),
    ];
}

export function rgbToHex(rgb: RGB): string {
    return "#" + rgb.map((v) => v.toString(16).padStart(2, "0").toUpperCase()).join("");
}

const GREEN = hexToRgb("#4DAF4A");
const BLUE = hexToRgb("#377EB8");
const RED = hexToRgb("#E41A1C");
const YELLOW = hexToRgb("#FFFF33");

export interface ColorScheme {
    baseColors: { A: RGB; C: RGB; G: RGB; T: RGB };
    missing: RGB;
    refMatch: RGB;
    refDiff: RGB;
    homAlt: RGB;
    het: RGB;
    homRef: RGB;
    selection: RGB;
}

export function defaultScheme(): ColorScheme {
    return {
        baseColors: { A: GREEN, C: BLUE, G: YELLOW, T: RED },
        missing: [255, 255, 255],
        refMatch: BLUE,
        refDiff: YELLOW,
        homAlt: RED,
        het: YELLOW,
        homRef: GREEN,
        selection: [0, 0, 0],
    };
}

export function roleColor(scheme: ColorScheme, role: ColorRole): RGB {
    switch (role) {
        case ColorRole.BASE_A: return scheme.baseColors.A;
        case ColorRole.BASE_C: return scheme.baseColors.C;
        case ColorRole.BASE_G: return scheme.baseColors.G;
        case ColorRole.BASE_T: return scheme.baseColors.T;
        case ColorRole.MISSING: return scheme.missing;
        case ColorRole.REF_MATCH: return scheme.refMatch;
        case ColorRole.REF_DIFF: return scheme.refDiff;
        case ColorRole.HOM_ALT: return scheme.homAlt;
        case ColorRole.HET: return scheme.het;
        case ColorRole.HOM_REF: return scheme.homRef;
        case ColorRole.SELECTION: return scheme.selection;
    }
}

const BASE_CODE: Record<string, number> = { A: 0, C: 1, G: 2, T: 3 };

export function baseCode(base: string | null): number | null {
    if (base === null) return null;
    const code = BASE_CODE[base];
    return code === undefined ? null : code;
}

/** Role of one allele under NUCLEOTIDE or REFERENCE. */
export function alleleRole(enc: Encoding, code: number, refCode: number | null): ColorRole {
    if (code === MISSING_CODE) return ColorRole.MISSING;
    if (enc === Encoding.NUCLEOTIDE) return code as ColorRole;
    return code !== refCode ? ColorRole.REF_DIFF : ColorRole.REF_MATCH;
}

/** Role of a diploid pair under GENOTYPE (hemizygous uses the present allele). */
export function genotypeRole(a: number, b: number, refCode: number): ColorRole {
    const present = [a, b].filter((c) => c !== MISSING_CODE);
    if (present.length === 0) return ColorRole.MISSING;
    const diffs = present.filter((c) => c !== refCode).length;
    if (present.length === 1) return diffs ? ColorRole.HOM_ALT : ColorRole.HOM_REF;
    if (diffs === 2) return ColorRole.HOM_ALT;
    if (diffs === 1) return ColorRole.HET;
    return ColorRole.HOM_REF;
}

export function roundHalfUp(x: number): number {
    return Math.floor(x + 0.5);
}

/* HSV conversions transcribed from CPython's colorsys so double-precision
 * results match the server bit for bit. */

function rgbToHsvUnit(r: number, g: number, b: number): [number, number, number] {
    const maxc = Math.max(r, g, b);
    const minc = Math.min(r, g, b);
    const rangec = maxc - minc;
    const v = maxc;
    if (minc === maxc) return [0, 0, v];
    const s = rangec / maxc;
    const rc = (maxc - r) / rangec;
    const gc = (maxc - g) / rangec;
    const bc = (maxc - b) / rangec;
    let h;
    if (r === maxc) h = bc - gc;
    else if (g === maxc) h = 2 + rc - bc;
    else h = 4 + gc - rc;
    h = (h / 6) % 1;
    if (h < 0) h += 1;
    return [h, s, v];
}

function hsvToRgbUnit(h: number, s: number, v: number): [number, number, number] {
    if (s === 0) return [v, v, v];
    let i = Math.floor(h * 6);
    const f = h * 6 - i;
    const p = v * (1 - s);
    const q = v * (1 - s * f);
    const t = v * (1 - s * (1 - f));
    i = i % 6;
    switch (i) {
        case 0: return [v, t, p];
        case 1: return [q, v, p];
        case 2: return [p, v, t];
        case 3: return [p, q, v];
        case 4: return [t, p, v];
        default: return [v, p, q];
    }
}

/** Scale HSV saturation by a frequency in [0,1], hue and value unchanged. */
export function saturate(rgb: RGB, frequency: number): RGB {
    const f = Math.min(Math.max(frequency, 0), 1);
    const [h, s, v] = rgbToHsvUnit(rgb[0] / 255, rgb[1] / 255, rgb[2] / 255);
    const [r, g, b] = hsvToRgbUnit(h, s * f, v);
    return [roundHalfUp(r * 255), roundHalfUp(g * 255), roundHalfUp(b * 255)];
}
