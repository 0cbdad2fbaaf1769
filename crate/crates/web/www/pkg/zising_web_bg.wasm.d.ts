/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_absorbed: (a: number) => number;
export const demo_advance: (a: number, b: number) => number;
export const demo_classify: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const demo_corner_density_series: (a: number) => [number, number];
export const demo_new: (a: number, b: number, c: bigint) => [number, number, number];
export const demo_persistence_series: (a: number) => [number, number];
export const demo_render: (a: number, b: number) => [number, number];
export const demo_size: (a: number) => number;
export const demo_time: (a: number) => number;
export const demo_times: (a: number) => [number, number];
export const demo_wall_density_series: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
