/* tslint:disable */
/* eslint-disable */

/**
 * Nodal data of the lowest weight-`alpha` eigenfield on a circle bundle,
 * with `|φ|` and `arg φ` over the base grid for plotting.
 */
export function nodal(euler: number, resolution: number, amplitude: number, seed: bigint, alpha: number): string;

/**
 * Lowest `m` eigenvalues for each weight, their clusters, and the number of
 * values shared between different `|α|` within `collision_tol`.
 */
export function spectrum(euler: number, resolution: number, amplitude: number, seed: bigint, weights: Int32Array, m: number, collision_tol: number): string;

/**
 * Eigenvalue velocity of the lowest weight-`alpha` eigenvalue along a named
 * path, against a Richardson-extrapolated finite difference.
 */
export function velocity(euler: number, resolution: number, amplitude: number, seed: bigint, alpha: number, path: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly nodal: (a: number, b: number, c: number, d: bigint, e: number) => [number, number, number, number];
    readonly spectrum: (a: number, b: number, c: number, d: bigint, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly velocity: (a: number, b: number, c: number, d: bigint, e: number, f: number, g: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
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
