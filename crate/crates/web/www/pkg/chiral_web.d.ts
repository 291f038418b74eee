/* tslint:disable */
/* eslint-disable */

/**
 * Ensemble-averaged `Z(t)` for the default transmission setup with a chosen environment
 * bias, size and coupling. Returns `[t0, Z0, t1, Z1, …, time_avg_Z,
 * std_error]`.
 */
export function ensemble_mean_z(n_realizations: number, n_env: number, env_epsilon: number, lambda: number, z0: number, t_final: number, paper_convention: boolean, seed: bigint): Float64Array;

/**
 * `I(r)` on a log grid over `[r_min, r_max]` (units of `1/m_e`). Returns rows
 * of `[r, I(r)]`.
 */
export function i_integral_curve(r_min: number, r_max: number, points: number): Float64Array;

/**
 * Central-molecule enantiomer energies against a mean environment
 * population `m` (so `Σ z_i = N m`) over `[m_min, m_max]`. Returns rows of
 * `[m, λ₊, λ₋, E_L, E_R]`.
 */
export function spectrum_vs_environment(delta: number, epsilon: number, lambda: number, n_env: number, points: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly ensemble_mean_z: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: bigint) => [number, number, number, number];
    readonly i_integral_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly spectrum_vs_environment: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
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
