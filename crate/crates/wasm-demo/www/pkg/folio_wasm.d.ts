/* tslint:disable */
/* eslint-disable */

/**
 * Explained variance and eigen portfolios on a synthetic market.
 */
export function eigen(n_assets: number, factor_loading: number, seed: number, n_components: number): string;

/**
 * Monte-Carlo frontier cloud on a synthetic market.
 */
export function frontier(n_assets: number, factor_loading: number, seed: number, sample_count: number, risk_free: number): string;

/**
 * The five bundled sector backtests.
 */
export function sector_backtests(): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly eigen: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly frontier: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly sector_backtests: () => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
