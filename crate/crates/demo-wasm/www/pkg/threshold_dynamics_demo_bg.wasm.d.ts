/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_simulation_free: (a: number, b: number) => void;
export const exact_radius: (a: number, b: number) => [number, number, number];
export const oracle_step: (a: number, b: number) => [number, number, number];
export const simulation_area: (a: number) => number;
export const simulation_components: (a: number) => [number, number, number];
export const simulation_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const simulation_paint: (a: number, b: number, c: number, d: number, e: number) => void;
export const simulation_pixels: (a: number) => [number, number];
export const simulation_set_h: (a: number, b: number) => void;
export const simulation_step: (a: number, b: number) => [number, number];
export const simulation_steps: (a: number) => number;
export const simulation_time: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
