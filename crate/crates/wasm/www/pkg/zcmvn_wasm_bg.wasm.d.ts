/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_fit: (a: number) => [number, number, number, number];
export const demo_new: () => number;
export const demo_observed_zero_counts: (a: number) => [number, number];
export const demo_simulate: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number, number];
export const demo_svg: (a: number) => [number, number, number, number];
export const demo_zero_rates: (a: number, b: number, c: bigint) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
