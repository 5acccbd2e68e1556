/* tslint:disable */
/* eslint-disable */

/**
 * Synthetic candles with their ZigZag pivots, moving-average crossovers and
 * pivot/crossover/retracement sequences.
 */
export function detect(seed: number, candles: number, depth: number, deviation_pips: number): string;

/**
 * Trains one model on the chronological training split and scores it
 * against persistence on the held-out sequences.
 */
export function forecast(seed: number, candles: number, kind: string, timesteps: number, hidden: number, epochs: number): string;

/**
 * The 28 feature columns, `null` during each indicator's warm-up. The
 * Bollinger window and width are adjustable.
 */
export function indicators(seed: number, candles: number, boll_window: number, boll_k: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly detect: (a: number, b: number, c: number, d: number) => [number, number];
    readonly forecast: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly indicators: (a: number, b: number, c: number, d: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
