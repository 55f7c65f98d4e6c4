/**
 * Binary tile decoding and the viewport tile cache.
 *
 * Wire layout (all little-endian, header exactly 16 bytes):
 *   0  4  magic "IPHT"
 *   4  1  version = 1
 *   5  1  flags: bit0 = frequency plane present, bit1 = phased columns
 *   6  3  rowStart u24
 *   9  3  colStart u24
 *   12 2  nRows u16
 *   14 2  nCols u16
 *   16 .. codes (nRows*nCols), then freqs (same size) iff bit0
 */

export interface TileData {
    rowStart: number;
    colStart: number;
    nRows: number;
    nCols: number;
    phased: boolean;
    codes: Uint8Array;
    freqs: Uint8Array | null;
}

export class TileFormatError extends Error {}

const MAGIC = [0x49, 0x50, 0x48, 0x54]; // "IPHT"

export function decodeTile(buf: ArrayBuffer): TileData {
    const bytes = new Uint8Array(buf);
    if (bytes.length < 16) throw new TileFormatError("buffer shorter than header");
    for (let i = 0; i < 4; i++) {
        if (bytes[i] !== MAGIC[i]) throw new TileFormatError("bad magic");
    }
    if (bytes[4] !== 1) throw new TileFormatError(`unsupported version ${bytes[4]}`);
    const flags = bytes[5];
    if ((flags & ~0x03) !== 0) throw new TileFormatError("unknown flag bits");
    const view = new DataView(buf);
    const rowStart = bytes[6] | (bytes[7] << 8) | (bytes[8] << 16);
    const colStart = bytes[9] | (bytes[10] << 8) | (bytes[11] << 16);
    const nRows = view.getUint16(12, true);
    const nCols = view.getUint16(14, true);
    const cells = nRows * nCols;
    const planes = flags & 0x01 ? 2 : 1;
    if (bytes.length !== 16 + cells * planes) {
        throw new TileFormatError("payload length mismatch");
    }
    const codes = bytes.slice(16, 16 + cells);
    for (let i = 0; i < codes.length; i++) {
        if (codes[i] > 4) throw new TileFormatError("cell code above 4");
    }
    const freqs = flags & 0x01 ? bytes.slice(16 + cells, 16 + 2 * cells) : null;
    return {
        rowStart, colStart, nRows, nCols,
        phased: (flags & 0x02) !== 0,
        codes, freqs,
    };
}

export interface TileKey {
    version: number;
    r0: number;
    r1: number;
    c0: number;
    c1: number;
}

function keyString(k: TileKey): string {
    return `${k.version}:${k.r0}..${k.r1}:${k.c0}..${k.c1}`;
}

/**
 * Cache keyed by (chain version, window); a version bump invalidates
 * everything at once. Fetches are deduplicated and capped at four in
 * flight; responses for stale versions are dropped.
 */
export class TileCache {
    private tiles = new Map<string, TileData>();
    private pending = new Map<string, Promise<TileData | null>>();
    private queue: Array<() => void> = [];
    private inFlight = 0;
    private version = 0;

    constructor(
        private fetchTile: (k: TileKey) => Promise<ArrayBuffer>,
        private maxInFlight = 4,
    ) {}

    invalidate(version: number): void {
        this.version = version;
        this.tiles.clear();
        this.pending.clear();
    }

    get currentVersion(): number {
        return this.version;
    }

    peek(k: TileKey): TileData | undefined {
        return this.tiles.get(keyString(k));
    }

    /** Resolve a tile, queueing behind the in-flight cap; resolves null for
     * responses that arrive after the chain version moved on. */
    fetch(k: TileKey): Promise<TileData | null> {
        const key = keyString(k);
        const cached = this.tiles.get(key);
        if (cached) return Promise.resolve(cached);
        const pending = this.pending.get(key);
        if (pending) return pending;
        const promise = this.slot().then(async () => {
            try {
                const buf = await this.fetchTile(k);
                if (k.version !== this.version) return null; // stale response
                const tile = decodeTile(buf);
                this.tiles.set(key, tile);
                return tile;
            } finally {
                this.pending.delete(key);
                this.release();
            }
        });
        this.pending.set(key, promise);
        return promise;
    }

    private slot(): Promise<void> {
        if (this.inFlight < this.maxInFlight) {
            this.inFlight += 1;
            return Promise.resolve();
        }
        return new Promise((resolve) => this.queue.push(() => {
            this.inFlight += 1;
            resolve();
        }));
    }

    private release(): void {
        this.inFlight -= 1;
        const next = this.queue.shift();
        if (next) next();
    }
}
