/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_composite: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
export const demo_composite_cells: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
export const demo_count: (a: number) => number;
export const demo_image: (a: number, b: number) => [number, number, number, number];
export const demo_new: (a: bigint) => [number, number, number];
export const demo_score: (a: number, b: number, c: number) => [number, number, number, number];
export const demo_side: (a: number) => number;
export const noise_estimate: (a: number, b: bigint) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
