/* tslint:disable */
/* eslint-disable */

/**
 * Base and improved estimates at one observation, as `name value` lines.
 */
export function improve_point(model_id: string, key: string, x1: number, x2: number): string;

export function preset_risk_csv(name: string, n: number, seed: bigint): string;

export function preset_risk_svg(name: string, n: number, seed: bigint): string;

/**
 * SVG of `t -> psi_lambda(t)` for each lambda, with the envelope bounds.
 */
export function psi_curve_svg(model_id: string, target: string, t_min: number, t_max: number, lambdas: Float64Array): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly improve_point: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly preset_risk_csv: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly preset_risk_svg: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly psi_curve_svg: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
