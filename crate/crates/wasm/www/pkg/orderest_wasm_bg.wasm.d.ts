/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const improve_point: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const preset_risk_csv: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const preset_risk_svg: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const psi_curve_svg: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
